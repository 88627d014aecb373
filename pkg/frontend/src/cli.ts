#!/usr/bin/env node
import { realpathSync } from "node:fs";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { DataFileError, MissingVariableError } from "./csv.js";
import { FIGURE_KINDS, render, type FigureJob, type FigureKind } from "./render.js";

export class UsageError extends Error {}

const USAGE = `usage: cosim-figures <kind> [options] --out FILE.svg

kinds and their required inputs:
  fan           --quantiles quantiles.csv [--archetypes archetypes.csv] [--vars y,I,rho,D]
  spending-fan  --quantiles quantiles.csv [--archetypes archetypes.csv] [--vars g,d,phi]
  correlations  --correlations correlations.csv [--pairs y~rho,y~I]
  bifurcation   --terminals terminals.csv --assignments assignments.csv --archetypes archetypes.csv [--vars rho,y]
  shift         --coupled terminals.csv --uncoupled terminals.csv [--var y] [--bins 40]
  salience      --salience salience.csv --terminals terminals.csv [--var D] [--bins 40]

common options:
  --out FILE.svg   where to write the figure (required)
  --title TEXT     override the figure title
`;

interface ParsedFlags {
  quantiles?: string;
  archetypes?: string;
  assignments?: string;
  terminals?: string;
  correlations?: string;
  coupled?: string;
  uncoupled?: string;
  salience?: string;
  vars?: string;
  var?: string;
  pairs?: string;
  bins?: string;
  title?: string;
  out?: string;
  help?: boolean;
}

function parse(argv: string[]): { kind: FigureKind; flags: ParsedFlags } {
  const stringFlag = { type: "string" as const };
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        quantiles: stringFlag,
        archetypes: stringFlag,
        assignments: stringFlag,
        terminals: stringFlag,
        correlations: stringFlag,
        coupled: stringFlag,
        uncoupled: stringFlag,
        salience: stringFlag,
        vars: stringFlag,
        var: stringFlag,
        pairs: stringFlag,
        bins: stringFlag,
        title: stringFlag,
        out: stringFlag,
        help: { type: "boolean" as const },
      },
    });
  } catch (err) {
    throw new UsageError(err instanceof Error ? err.message : String(err));
  }
  if (parsed.values.help) {
    throw new UsageError(USAGE);
  }
  if (parsed.positionals.length !== 1) {
    throw new UsageError(`expected exactly one figure kind, got ${parsed.positionals.length}`);
  }
  const kind = parsed.positionals[0]!;
  if (!(FIGURE_KINDS as readonly string[]).includes(kind)) {
    throw new UsageError(`unknown figure kind ${JSON.stringify(kind)}; one of: ${FIGURE_KINDS.join(", ")}`);
  }
  return { kind: kind as FigureKind, flags: parsed.values };
}

function splitList(value: string | undefined): string[] | undefined {
  if (value === undefined) return undefined;
  const items = value
    .split(",")
    .map((s) => s.trim())
    .filter((s) => s.length > 0);
  if (items.length === 0) throw new UsageError("empty list flag");
  return items;
}

export function jobFromArgs(argv: string[]): FigureJob {
  const { kind, flags } = parse(argv);
  if (flags.out === undefined) {
    throw new UsageError("--out FILE.svg is required");
  }
  if (flags.vars !== undefined && flags.var !== undefined) {
    throw new UsageError("pass --vars or --var, not both");
  }
  let bins: number | undefined;
  if (flags.bins !== undefined) {
    bins = Number(flags.bins);
    if (!Number.isInteger(bins) || bins < 2) {
      throw new UsageError(`--bins must be an integer >= 2, got ${flags.bins}`);
    }
  }
  const variables = splitList(flags.vars) ?? splitList(flags.var);
  const job: FigureJob = {
    kind,
    inputs: {},
    output: flags.out,
  };
  if (variables !== undefined) job.variables = variables;
  if (bins !== undefined) job.bins = bins;
  if (flags.title !== undefined) job.title = flags.title;
  const pairs = splitList(flags.pairs);
  if (pairs !== undefined) job.pairs = pairs;
  for (const name of [
    "quantiles",
    "archetypes",
    "assignments",
    "terminals",
    "correlations",
    "coupled",
    "uncoupled",
    "salience",
  ] as const) {
    const value = flags[name];
    if (value !== undefined) job.inputs[name] = value;
  }
  return job;
}

/** Entry point. Returns the process exit code instead of calling exit(). */
export function main(argv: string[]): number {
  let job: FigureJob;
  try {
    job = jobFromArgs(argv);
  } catch (err) {
    if (err instanceof UsageError) {
      process.stderr.write(`${err.message}\n${err.message === USAGE ? "" : `\n${USAGE}`}`);
      return 2;
    }
    throw err;
  }
  try {
    const path = render(job);
    process.stdout.write(`wrote ${path}\n`);
    return 0;
  } catch (err) {
    if (err instanceof MissingVariableError || err instanceof DataFileError) {
      process.stderr.write(`error: ${err.message}\n`);
      return 3;
    }
    if (err instanceof Error && "code" in err && typeof err.code === "string") {
      // filesystem errors: missing input file, unwritable output path
      process.stderr.write(`error: ${err.message}\n`);
      return 3;
    }
    if (err instanceof Error && err.message.includes("needs the")) {
      process.stderr.write(`error: ${err.message}\n\n${USAGE}`);
      return 2;
    }
    throw err;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(realpathSync(process.argv[1])).href;
if (invokedDirectly) {
  process.exitCode = main(process.argv.slice(2));
}

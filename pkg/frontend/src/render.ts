import { mkdirSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";

import { renderBifurcation } from "./figures/bifurcation.js";
import { renderCorrelations } from "./figures/correlations.js";
import { renderFan } from "./figures/fan.js";
import { renderSalience } from "./figures/salience.js";
import { renderShift } from "./figures/shift.js";

export const FIGURE_KINDS = [
  "fan",
  "spending-fan",
  "correlations",
  "bifurcation",
  "shift",
  "salience",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface FigureJob {
  kind: FigureKind;
  /** Named input files; which names are required depends on the kind. */
  inputs: Partial<Record<"quantiles" | "archetypes" | "assignments" | "terminals" | "correlations" | "coupled" | "uncoupled" | "salience", string>>;
  /** Variables to plot (fan panels, or the single histogram variable). */
  variables?: string[];
  /** Correlation pairs to draw; defaults to every pair in the file. */
  pairs?: string[];
  bins?: number;
  title?: string;
  /** Output SVG path for render(); renderFigure() ignores it. */
  output?: string;
}

function need(job: FigureJob, name: keyof FigureJob["inputs"]): string {
  const path = job.inputs[name];
  if (path === undefined) {
    throw new Error(`figure kind ${JSON.stringify(job.kind)} needs the ${name} input`);
  }
  return path;
}

/** Render one figure to an SVG string. Pure: same job + files => same string. */
export function renderFigure(job: FigureJob): string {
  switch (job.kind) {
    case "fan":
      return renderFan(need(job, "quantiles"), {
        variables: job.variables ?? ["y", "I", "rho", "D"],
        archetypesPath: job.inputs.archetypes,
        title: job.title,
      });
    case "spending-fan":
      return renderFan(need(job, "quantiles"), {
        variables: job.variables ?? ["g", "d", "phi"],
        archetypesPath: job.inputs.archetypes,
        title: job.title ?? "fiscal block fan chart",
      });
    case "correlations":
      return renderCorrelations(need(job, "correlations"), job.pairs, job.title);
    case "bifurcation":
      return renderBifurcation(need(job, "terminals"), need(job, "assignments"), need(job, "archetypes"), {
        xVariable: job.variables?.[0],
        yVariable: job.variables?.[1],
        title: job.title,
      });
    case "shift":
      return renderShift(need(job, "coupled"), need(job, "uncoupled"), {
        variable: job.variables?.[0],
        bins: job.bins,
        title: job.title,
      });
    case "salience":
      return renderSalience(need(job, "salience"), need(job, "terminals"), {
        variable: job.variables?.[0],
        bins: job.bins,
        title: job.title,
      });
  }
}

/** Render a figure and write it to job.output. */
export function render(job: FigureJob): string {
  if (job.output === undefined) {
    throw new Error("render() needs job.output; use renderFigure() for the string");
  }
  const svg = renderFigure(job);
  mkdirSync(dirname(job.output), { recursive: true });
  writeFileSync(job.output, svg, "utf8");
  return job.output;
}

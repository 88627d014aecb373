import { MissingVariableError, numericColumn, readCsv, stringColumn } from "./csv.js";

/** Loaders for the run artifacts this package consumes. Each returns plain
 * arrays; nothing here recomputes statistics — values come from the files. */

export interface QuantileSeries {
  weeks: number[];
  q05: number[];
  q25: number[];
  q50: number[];
  q75: number[];
  q95: number[];
}

function pickRows(indices: number[], values: number[]): number[] {
  return indices.map((i) => values[i]!);
}

/** Per-variable quantile paths from the long-format quantile file. */
export function loadQuantiles(path: string, variables: string[]): Map<string, QuantileSeries> {
  const table = readCsv(path);
  const variable = stringColumn(table, path, "variable");
  const week = numericColumn(table, path, "week");
  const levels = ["q05", "q25", "q50", "q75", "q95"] as const;
  const columns = Object.fromEntries(levels.map((q) => [q, numericColumn(table, path, q)]));
  const out = new Map<string, QuantileSeries>();
  for (const name of variables) {
    const idx = [...variable.keys()].filter((i) => variable[i] === name);
    if (idx.length === 0) throw new MissingVariableError(name, path);
    idx.sort((a, b) => week[a]! - week[b]!);
    out.set(name, {
      weeks: pickRows(idx, week),
      q05: pickRows(idx, columns.q05!),
      q25: pickRows(idx, columns.q25!),
      q50: pickRows(idx, columns.q50!),
      q75: pickRows(idx, columns.q75!),
      q95: pickRows(idx, columns.q95!),
    });
  }
  return out;
}

export interface ArchetypePath {
  archetype: number;
  weeks: number[];
  values: number[];
}

/** Per-archetype mean path of one variable from the archetype path file. */
export function loadArchetypePaths(path: string, variable: string): ArchetypePath[] {
  const table = readCsv(path);
  const names = stringColumn(table, path, "variable");
  const archetype = numericColumn(table, path, "archetype");
  const week = numericColumn(table, path, "week");
  const value = numericColumn(table, path, "value");
  const clusters = [...new Set(archetype)].sort((a, b) => a - b);
  const out: ArchetypePath[] = [];
  for (const c of clusters) {
    const idx = [...names.keys()].filter((i) => names[i] === variable && archetype[i] === c);
    if (idx.length === 0) throw new MissingVariableError(variable, path);
    idx.sort((a, b) => week[a]! - week[b]!);
    out.push({ archetype: c, weeks: pickRows(idx, week), values: pickRows(idx, value) });
  }
  return out;
}

export interface TerminalColumn {
  weights: number[];
  values: number[];
}

/** One terminal variable with the per-particle weights. */
export function loadTerminals(path: string, variable: string): TerminalColumn {
  const table = readCsv(path);
  return {
    weights: numericColumn(table, path, "weight"),
    values: numericColumn(table, path, variable),
  };
}

/** particle -> cluster assignments, in particle order. */
export function loadAssignments(path: string): number[] {
  const table = readCsv(path);
  const particle = numericColumn(table, path, "particle");
  const archetype = numericColumn(table, path, "archetype");
  const order = [...particle.keys()].sort((a, b) => particle[a]! - particle[b]!);
  return pickRows(order, archetype);
}

export interface CorrelationSeries {
  pair: string;
  weeks: number[];
  values: number[];
}

/** Rolling correlation series; weeks whose value is blank/non-finite
 * (the undefined start-of-run entries) are skipped. */
export function loadCorrelations(path: string, pairs?: string[]): CorrelationSeries[] {
  const table = readCsv(path);
  const pair = stringColumn(table, path, "pair");
  const week = numericColumn(table, path, "week");
  if (!table.columns.includes("corr")) throw new MissingVariableError("corr", path);
  // blank cells must not fall through Number("") === 0
  const corr = table.rows.map((row) => {
    const cell = (row["corr"] ?? "").trim();
    return cell === "" ? Number.NaN : Number(cell);
  });
  const names = pairs ?? [...new Set(pair)].sort();
  const out: CorrelationSeries[] = [];
  for (const name of names) {
    const idx = [...pair.keys()].filter((i) => pair[i] === name && Number.isFinite(corr[i]!));
    if (idx.length === 0) throw new MissingVariableError(name, path);
    idx.sort((a, b) => week[a]! - week[b]!);
    out.push({ pair: name, weeks: pickRows(idx, week), values: pickRows(idx, corr) });
  }
  return out;
}

export interface SalienceColumns {
  particles: number[];
  baseWeights: number[];
  lensValues: number[];
  salienceWeights: number[];
}

export function loadSalience(path: string): SalienceColumns {
  const table = readCsv(path);
  return {
    particles: numericColumn(table, path, "particle"),
    baseWeights: numericColumn(table, path, "base_weight"),
    lensValues: numericColumn(table, path, "lens_value"),
    salienceWeights: numericColumn(table, path, "salience_weight"),
  };
}

export interface Bin {
  x0: number;
  x1: number;
  mass: number;
}

/** Weighted histogram over a fixed range: binning is presentation, the
 * masses are sums of the file's weights. */
export function weightedHistogram(
  values: number[],
  weights: number[],
  binCount: number,
  range: [number, number],
): Bin[] {
  if (values.length !== weights.length) {
    throw new Error(`histogram: ${values.length} values vs ${weights.length} weights`);
  }
  const [lo, hi] = range;
  const width = (hi - lo) / binCount;
  const bins: Bin[] = Array.from({ length: binCount }, (_, i) => ({
    x0: lo + i * width,
    x1: lo + (i + 1) * width,
    mass: 0,
  }));
  for (let i = 0; i < values.length; i++) {
    const v = values[i]!;
    if (v < lo || v > hi) continue;
    const j = Math.min(binCount - 1, Math.floor((v - lo) / width));
    bins[j]!.mass += weights[i]!;
  }
  return bins;
}

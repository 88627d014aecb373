/** Fixed categorical palette for cluster-coloured marks. */
export const CLUSTER_PALETTE = [
  "#4477aa",
  "#ee6677",
  "#228833",
  "#ccbb44",
  "#66ccee",
  "#aa3377",
  "#bbbbbb",
  "#e69f00",
] as const;

export function colorForCluster(cluster: number): string {
  if (!Number.isInteger(cluster) || cluster < 0) return "#999999";
  return CLUSTER_PALETTE[cluster % CLUSTER_PALETTE.length]!;
}

export const BAND_OUTER = "#c6dbef";
export const BAND_INNER = "#6baed6";
export const MEDIAN_LINE = "#08519c";
export const ARCHETYPE_LINE = "#333333";
export const COUPLED_FILL = "#4477aa";
export const UNCOUPLED_FILL = "#ee6677";
export const BASE_FILL = "#999999";
export const LENS_FILL = "#aa3377";

/** Linear [d0,d1] -> [r0,r1] mapping with nice ticks. Pure and seedless. */
export interface Scale {
  (value: number): number;
  domain: [number, number];
  range: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0;
  const fn = ((value: number) =>
    span === 0 ? (r0 + r1) / 2 : r0 + ((value - d0) / span) * (r1 - r0)) as Scale;
  fn.domain = domain;
  fn.range = range;
  return fn;
}

/** Round tick positions covering the domain, roughly `count` of them. */
export function ticks(domain: [number, number], count = 5): number[] {
  const [lo, hi] = domain[0] <= domain[1] ? domain : [domain[1], domain[0]];
  if (lo === hi) return [lo];
  const rawStep = (hi - lo) / Math.max(1, count);
  const power = Math.floor(Math.log10(rawStep));
  const base = 10 ** power;
  const step = [1, 2, 5, 10].map((m) => m * base).find((s) => (hi - lo) / s <= count) ?? 10 * base;
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let t = start; t <= hi + step * 1e-9; t += step) {
    out.push(Math.abs(t) < step * 1e-9 ? 0 : Number(t.toPrecision(12)));
  }
  return out;
}

/** Domain padded by a fraction of its span on both ends. */
export function padded(lo: number, hi: number, fraction = 0.05): [number, number] {
  if (lo === hi) {
    const bump = lo === 0 ? 1 : Math.abs(lo) * fraction;
    return [lo - bump, hi + bump];
  }
  const pad = (hi - lo) * fraction;
  return [lo - pad, hi + pad];
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (!Number.isFinite(v)) {
      throw new Error("extent of non-finite data");
    }
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo) || !Number.isFinite(hi)) {
    throw new Error("extent of empty data");
  }
  return [lo, hi];
}

/** Minimal parsing of our own deterministic SVG output, for assertions. */

export type Attrs = Record<string, string>;

export function parseAttrs(fragment: string): Attrs {
  const attrs: Attrs = {};
  for (const m of fragment.matchAll(/([\w:-]+)="([^"]*)"/g)) {
    attrs[m[1]!] = m[2]!;
  }
  return attrs;
}

/** All elements of one tag (self-closing or not) as attribute records. */
export function elements(svg: string, tag: string): Attrs[] {
  const out: Attrs[] = [];
  for (const m of svg.matchAll(new RegExp(`<${tag}\\b([^>]*?)/?>`, "g"))) {
    out.push(parseAttrs(m[1]!));
  }
  return out;
}

export function withAttr(items: Attrs[], name: string, value?: string): Attrs[] {
  return items.filter((a) => (value === undefined ? name in a : a[name] === value));
}

/** points="x,y x,y ..." into coordinate pairs. */
export function parsePoints(points: string): Array<[number, number]> {
  return points
    .trim()
    .split(/\s+/)
    .map((pair) => {
      const [x, y] = pair.split(",");
      return [Number(x), Number(y)] as [number, number];
    });
}

/** Split the document into panel chunks keyed by data-variable / data-series.
 * Panels are emitted sequentially, so slicing between markers is enough. */
export function panelChunks(svg: string, marker: string): Map<string, string> {
  const out = new Map<string, string>();
  const starts: Array<{ key: string; index: number }> = [];
  for (const m of svg.matchAll(/<g ([^>]*)>/g)) {
    const attrs = parseAttrs(m[1]!);
    const key = attrs[marker];
    if (key !== undefined) starts.push({ key, index: m.index! });
  }
  starts.forEach((s, i) => {
    const end = i + 1 < starts.length ? starts[i + 1]!.index : svg.length;
    out.set(s.key, svg.slice(s.index, end));
  });
  return out;
}

/** A band polygon's upper and lower pixel edges, index-aligned by week. */
export function bandEdges(points: string): { upper: number[]; lower: number[] } {
  const pts = parsePoints(points);
  const n = pts.length / 2;
  const upper = pts.slice(0, n).map(([, y]) => y);
  const lower = pts
    .slice(n)
    .reverse()
    .map(([, y]) => y);
  return { upper, lower };
}

/** Center of mass over histogram rects carrying data-x0/x1/mass. */
export function centerOfMass(rects: Attrs[]): number {
  let mass = 0;
  let moment = 0;
  for (const r of rects) {
    const m = Number(r["data-mass"]);
    const mid = (Number(r["data-x0"]) + Number(r["data-x1"])) / 2;
    mass += m;
    moment += m * mid;
  }
  if (mass === 0) throw new Error("no histogram mass");
  return moment / mass;
}

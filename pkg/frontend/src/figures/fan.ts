import { ArchetypePath, loadArchetypePaths, loadQuantiles } from "../data.js";
import { ARCHETYPE_LINE, BAND_INNER, BAND_OUTER, MEDIAN_LINE } from "../palette.js";
import { extent, linearScale, padded } from "../scale.js";
import { axes, band, document, el, polyline, text } from "../svg.js";

const WIDTH = 760;
const PANEL = { left: 70, right: 20, top: 36, bottom: 46, height: 190 };

export interface FanOptions {
  variables: string[];
  archetypesPath?: string;
  title?: string;
}

/** Stacked fan panels: outer 5-95 band, inner 25-75 band, median line,
 * optional dashed per-archetype mean paths. */
export function renderFan(quantilesPath: string, options: FanOptions): string {
  const series = loadQuantiles(quantilesPath, options.variables);
  const overlays = new Map<string, ArchetypePath[]>();
  if (options.archetypesPath !== undefined) {
    for (const name of options.variables) {
      overlays.set(name, loadArchetypePaths(options.archetypesPath, name));
    }
  }

  const body: string[] = [];
  const panelStride = PANEL.top + PANEL.height + PANEL.bottom;
  options.variables.forEach((name, panelIndex) => {
    const q = series.get(name)!;
    const top = panelIndex * panelStride + PANEL.top;
    const box = { x: PANEL.left, y: top, width: WIDTH - PANEL.left - PANEL.right, height: PANEL.height };

    const archetypeValues = (overlays.get(name) ?? []).flatMap((p) => p.values);
    const yDomain = padded(...extent([...q.q05, ...q.q95, ...archetypeValues]));
    const x = linearScale([q.weeks[0]!, q.weeks[q.weeks.length - 1]!], [box.x, box.x + box.width]);
    const y = linearScale(yDomain, [box.y + box.height, box.y]);

    const px = q.weeks.map((w) => x(w));
    const marks: string[] = [
      band(px, q.q05.map(y), q.q95.map(y), { fill: BAND_OUTER, "data-band": "outer" }),
      band(px, q.q25.map(y), q.q75.map(y), { fill: BAND_INNER, "data-band": "inner" }),
      polyline(
        px.map((p, i) => [p, y(q.q50[i]!)] as [number, number]),
        { stroke: MEDIAN_LINE, "stroke-width": 1.5, "data-role": "median" },
      ),
    ];
    for (const overlay of overlays.get(name) ?? []) {
      marks.push(
        polyline(
          overlay.weeks.map((w, i) => [x(w), y(overlay.values[i]!)] as [number, number]),
          {
            stroke: ARCHETYPE_LINE,
            "stroke-dasharray": "5 3",
            "data-role": "archetype",
            "data-archetype": String(overlay.archetype),
          },
        ),
      );
    }
    body.push(
      el("g", { class: "panel", "data-variable": name }, [
        text(box.x, top - 10, name, { "font-weight": "bold", fill: "#111" }),
        ...marks,
        axes(box, x, y, "week", name),
      ]),
    );
  });

  const height = options.variables.length * panelStride;
  return document(WIDTH, height, body, options.title ?? "ensemble fan chart");
}

import { loadSalience, loadTerminals, weightedHistogram, type Bin } from "../data.js";
import { BASE_FILL, LENS_FILL } from "../palette.js";
import { extent, linearScale, padded } from "../scale.js";
import type { Scale } from "../scale.js";
import { axes, document, el, text } from "../svg.js";
import { DataFileError } from "../csv.js";

const WIDTH = 760;
const PANEL = { left: 70, right: 25, top: 36, bottom: 46, height: 190 };

export interface SalienceOptions {
  variable?: string;
  bins?: number;
  title?: string;
}

function panel(
  binsList: Bin[],
  top: number,
  x: Scale,
  label: string,
  fill: string,
  series: string,
  variable: string,
): string {
  const box = { x: PANEL.left, y: top, width: WIDTH - PANEL.left - PANEL.right, height: PANEL.height };
  const peak = Math.max(...binsList.map((b) => b.mass), 1e-12);
  const y = linearScale([0, peak * 1.05], [box.y + box.height, box.y]);
  const y0 = y(0);
  const rects = binsList
    .filter((b) => b.mass > 0)
    .map((b) =>
      el("rect", {
        x: x(b.x0),
        width: x(b.x1) - x(b.x0),
        y: y(b.mass),
        height: y0 - y(b.mass),
        fill,
        "fill-opacity": 0.7,
        "data-x0": b.x0,
        "data-x1": b.x1,
        "data-mass": b.mass,
      }),
    );
  return el("g", { class: "panel", "data-series": series }, [
    text(box.x, top - 10, label, { "font-weight": "bold" }),
    ...rects,
    axes(box, x, y, `terminal ${variable}`, "mass"),
  ]);
}

/** Two stacked weighted histograms of one terminal variable: the run's base
 * weights on top, the lens-reweighted masses below, on a shared bin grid. */
export function renderSalience(
  saliencePath: string,
  terminalsPath: string,
  options: SalienceOptions = {},
): string {
  const variable = options.variable ?? "D";
  const binCount = options.bins ?? 40;
  const salience = loadSalience(saliencePath);
  const terminals = loadTerminals(terminalsPath, variable);
  if (salience.particles.length !== terminals.values.length) {
    throw new DataFileError(
      `salience rows (${salience.particles.length}) != terminal rows (${terminals.values.length})`,
    );
  }
  for (let i = 0; i < salience.particles.length; i++) {
    if (salience.particles[i] !== i) {
      throw new DataFileError(`salience rows out of particle order at row ${i}`);
    }
  }

  const range = padded(...extent(terminals.values), 0.02);
  const x = linearScale(range, [PANEL.left, WIDTH - PANEL.right]);
  const baseBins = weightedHistogram(terminals.values, salience.baseWeights, binCount, range);
  const lensBins = weightedHistogram(terminals.values, salience.salienceWeights, binCount, range);

  const secondTop = PANEL.top + PANEL.height + PANEL.bottom + PANEL.top;
  const body = [
    panel(baseBins, PANEL.top, x, "base ensemble weights", BASE_FILL, "base", variable),
    panel(lensBins, secondTop, x, "lens-conditioned weights", LENS_FILL, "lens", variable),
  ];
  const height = secondTop + PANEL.height + PANEL.bottom;
  return document(WIDTH, height, body, options.title ?? `salience reweighting of terminal ${variable}`);
}

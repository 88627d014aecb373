import { loadTerminals, weightedHistogram, type Bin } from "../data.js";
import { COUPLED_FILL, UNCOUPLED_FILL } from "../palette.js";
import { extent, linearScale, padded } from "../scale.js";
import { axes, document, el, text } from "../svg.js";

const WIDTH = 760;
const BOX = { x: 70, y: 36, width: WIDTH - 95, height: 280 };

export interface ShiftOptions {
  variable?: string;
  bins?: number;
  title?: string;
}

function bars(
  binsList: Bin[],
  x: (v: number) => number,
  y: (v: number) => number,
  y0: number,
  fill: string,
  series: string,
): string {
  const rects = binsList
    .filter((b) => b.mass > 0)
    .map((b) =>
      el("rect", {
        x: x(b.x0),
        width: x(b.x1) - x(b.x0),
        y: y(b.mass),
        height: y0 - y(b.mass),
        fill,
        "fill-opacity": 0.55,
        "data-x0": b.x0,
        "data-x1": b.x1,
        "data-mass": b.mass,
      }),
    );
  return el("g", { "data-series": series }, rects);
}

/** Paired weighted histograms of one terminal variable under the coupled and
 * uncoupled arms of a comparison run, on a shared bin grid. */
export function renderShift(
  coupledPath: string,
  uncoupledPath: string,
  options: ShiftOptions = {},
): string {
  const variable = options.variable ?? "y";
  const binCount = options.bins ?? 40;
  const coupled = loadTerminals(coupledPath, variable);
  const uncoupled = loadTerminals(uncoupledPath, variable);

  const range = padded(...extent([...coupled.values, ...uncoupled.values]), 0.02);
  const coupledBins = weightedHistogram(coupled.values, coupled.weights, binCount, range);
  const uncoupledBins = weightedHistogram(uncoupled.values, uncoupled.weights, binCount, range);

  const peak = Math.max(
    ...coupledBins.map((b) => b.mass),
    ...uncoupledBins.map((b) => b.mass),
  );
  const x = linearScale(range, [BOX.x, BOX.x + BOX.width]);
  const y = linearScale([0, peak * 1.05], [BOX.y + BOX.height, BOX.y]);
  const y0 = y(0);

  const legendX = BOX.x + BOX.width - 150;
  const body = [
    bars(coupledBins, x, y, y0, COUPLED_FILL, "coupled"),
    bars(uncoupledBins, x, y, y0, UNCOUPLED_FILL, "uncoupled"),
    el("rect", { x: legendX, y: BOX.y + 6, width: 12, height: 12, fill: COUPLED_FILL, "fill-opacity": 0.55 }),
    text(legendX + 18, BOX.y + 16, "coupled"),
    el("rect", { x: legendX, y: BOX.y + 24, width: 12, height: 12, fill: UNCOUPLED_FILL, "fill-opacity": 0.55 }),
    text(legendX + 18, BOX.y + 34, "uncoupled"),
    axes(BOX, x, y, `terminal ${variable}`, "probability mass"),
  ];
  return document(
    WIDTH,
    BOX.y + BOX.height + 50,
    body,
    options.title ?? `coupling shift in terminal ${variable}`,
  );
}

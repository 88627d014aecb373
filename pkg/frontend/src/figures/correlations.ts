import { loadCorrelations } from "../data.js";
import { CLUSTER_PALETTE } from "../palette.js";
import { linearScale } from "../scale.js";
import { axes, document, el, polyline, text } from "../svg.js";

const WIDTH = 760;
const BOX = { x: 70, y: 36, width: WIDTH - 90, height: 260 };

/** Rolling correlation lines, one per variable pair, with a zero rule. */
export function renderCorrelations(path: string, pairs?: string[], title?: string): string {
  const series = loadCorrelations(path, pairs);
  const weeks = series.flatMap((s) => s.weeks);
  const x = linearScale([Math.min(...weeks), Math.max(...weeks)], [BOX.x, BOX.x + BOX.width]);
  const y = linearScale([-1, 1], [BOX.y + BOX.height, BOX.y]);

  const body: string[] = [
    el("line", {
      x1: BOX.x,
      y1: y(0),
      x2: BOX.x + BOX.width,
      y2: y(0),
      stroke: "#bbbbbb",
      "stroke-dasharray": "2 3",
    }),
  ];
  series.forEach((s, i) => {
    const color = CLUSTER_PALETTE[i % CLUSTER_PALETTE.length]!;
    body.push(
      polyline(
        s.weeks.map((w, j) => [x(w), y(s.values[j]!)] as [number, number]),
        { stroke: color, "stroke-width": 1.5, "data-pair": s.pair },
      ),
    );
    body.push(
      text(BOX.x + BOX.width - 8, BOX.y + 14 + 14 * i, s.pair, {
        "text-anchor": "end",
        fill: color,
      }),
    );
  });
  body.push(axes(BOX, x, y, "week", "weighted correlation"));
  return document(WIDTH, BOX.y + BOX.height + 50, body, title ?? "rolling correlations");
}

import { loadArchetypePaths, loadAssignments, loadTerminals } from "../data.js";
import { colorForCluster } from "../palette.js";
import { extent, linearScale, padded } from "../scale.js";
import { axes, document, el, fmt } from "../svg.js";

const WIDTH = 700;
const BOX = { x: 70, y: 36, width: WIDTH - 95, height: 420 };

function star(cx: number, cy: number, r: number): string {
  const points: string[] = [];
  for (let i = 0; i < 10; i++) {
    const radius = i % 2 === 0 ? r : r * 0.45;
    const angle = -Math.PI / 2 + (i * Math.PI) / 5;
    points.push(`${fmt(cx + radius * Math.cos(angle))},${fmt(cy + radius * Math.sin(angle))}`);
  }
  return points.join(" ");
}

export interface BifurcationOptions {
  xVariable?: string;
  yVariable?: string;
  title?: string;
}

/** Terminal-outcome scatter coloured by cluster assignment, with one star
 * per archetype at its cluster-mean terminal point (from the path file). */
export function renderBifurcation(
  terminalsPath: string,
  assignmentsPath: string,
  archetypesPath: string,
  options: BifurcationOptions = {},
): string {
  const xVar = options.xVariable ?? "rho";
  const yVar = options.yVariable ?? "y";
  const xData = loadTerminals(terminalsPath, xVar).values;
  const yData = loadTerminals(terminalsPath, yVar).values;
  const clusters = loadAssignments(assignmentsPath);
  if (clusters.length !== xData.length) {
    throw new Error(
      `assignment rows (${clusters.length}) != terminal rows (${xData.length})`,
    );
  }
  const xPaths = loadArchetypePaths(archetypesPath, xVar);
  const yPaths = loadArchetypePaths(archetypesPath, yVar);

  const starX = xPaths.map((p) => p.values[p.values.length - 1]!);
  const starY = yPaths.map((p) => p.values[p.values.length - 1]!);
  const x = linearScale(padded(...extent([...xData, ...starX])), [BOX.x, BOX.x + BOX.width]);
  const y = linearScale(padded(...extent([...yData, ...starY])), [BOX.y + BOX.height, BOX.y]);

  const body: string[] = [];
  for (let i = 0; i < xData.length; i++) {
    body.push(
      el("circle", {
        cx: x(xData[i]!),
        cy: y(yData[i]!),
        r: 2,
        fill: colorForCluster(clusters[i]!),
        "fill-opacity": 0.55,
        "data-cluster": String(clusters[i]!),
      }),
    );
  }
  xPaths.forEach((p, c) => {
    body.push(
      el("polygon", {
        points: star(x(starX[c]!), y(starY[c]!), 9),
        fill: "#111111",
        stroke: "#ffffff",
        "stroke-width": 1,
        "data-role": "archetype-star",
        "data-archetype": String(p.archetype),
      }),
    );
  });
  body.push(axes(BOX, x, y, `terminal ${xVar}`, `terminal ${yVar}`));
  return document(
    WIDTH,
    BOX.y + BOX.height + 50,
    body,
    options.title ?? "terminal outcome split by cluster",
  );
}

import { Scale, ticks } from "./scale.js";

/** Deterministic SVG assembly: fixed canvas, fixed fonts, no randomness. */

export const FONT = "11px 'DejaVu Sans', 'Helvetica Neue', Arial, sans-serif";

export function fmt(value: number): string {
  if (Object.is(value, -0)) value = 0;
  // shortest round-trip within half a thousandth of a pixel
  const s = value.toPrecision(6);
  return String(Number(s));
}

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function el(
  tag: string,
  attrs: Record<string, string | number>,
  children: string[] = [],
): string {
  const parts = Object.entries(attrs)
    .map(([k, v]) => `${k}="${typeof v === "number" ? fmt(v) : esc(v)}"`)
    .join(" ");
  const open = parts.length > 0 ? `<${tag} ${parts}>` : `<${tag}>`;
  if (children.length === 0) return open.replace(/>$/, "/>");
  return `${open}${children.join("")}</${tag}>`;
}

export function text(
  x: number,
  y: number,
  content: string,
  attrs: Record<string, string | number> = {},
): string {
  return el("text", { x, y, style: `font: ${FONT};`, ...attrs }, [esc(content)]);
}

export function polyline(points: Array<[number, number]>, attrs: Record<string, string | number>): string {
  const path = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
  return el("polyline", { points: path, fill: "none", ...attrs });
}

/** Closed band between a lower and an upper series sharing x positions. */
export function band(
  xs: number[],
  lower: number[],
  upper: number[],
  attrs: Record<string, string | number>,
): string {
  const forward = xs.map((x, i) => `${fmt(x)},${fmt(upper[i]!)}`);
  const backward = [...xs.keys()].reverse().map((i) => `${fmt(xs[i]!)},${fmt(lower[i]!)}`);
  return el("polygon", { points: [...forward, ...backward].join(" "), ...attrs });
}

export interface PanelBox {
  x: number;
  y: number;
  width: number;
  height: number;
}

/** Left/bottom axes with tick labels for one panel. */
export function axes(box: PanelBox, xScale: Scale, yScale: Scale, xLabel: string, yLabel: string): string {
  const parts: string[] = [];
  const x0 = box.x;
  const y0 = box.y + box.height;
  parts.push(el("line", { x1: x0, y1: box.y, x2: x0, y2: y0, stroke: "#333" }));
  parts.push(el("line", { x1: x0, y1: y0, x2: box.x + box.width, y2: y0, stroke: "#333" }));
  for (const t of ticks(xScale.domain)) {
    const px = xScale(t);
    parts.push(el("line", { x1: px, y1: y0, x2: px, y2: y0 + 4, stroke: "#333" }));
    parts.push(text(px, y0 + 15, fmt(t), { "text-anchor": "middle", fill: "#333" }));
  }
  for (const t of ticks(yScale.domain)) {
    const py = yScale(t);
    parts.push(el("line", { x1: x0 - 4, y1: py, x2: x0, y2: py, stroke: "#333" }));
    parts.push(text(x0 - 7, py + 3.5, fmt(t), { "text-anchor": "end", fill: "#333" }));
  }
  parts.push(text(box.x + box.width / 2, y0 + 30, xLabel, { "text-anchor": "middle", fill: "#111" }));
  parts.push(
    el(
      "g",
      { transform: `translate(${fmt(box.x - 38)} ${fmt(box.y + box.height / 2)}) rotate(-90)` },
      [text(0, 0, yLabel, { "text-anchor": "middle", fill: "#111" })],
    ),
  );
  return el("g", { class: "axes" }, parts);
}

export function document(width: number, height: number, body: string[], title: string): string {
  return [
    `<?xml version="1.0" encoding="UTF-8"?>`,
    el(
      "svg",
      {
        xmlns: "http://www.w3.org/2000/svg",
        width,
        height,
        viewBox: `0 0 ${width} ${height}`,
      },
      [
        el("title", {}, [esc(title)]),
        el("rect", { x: 0, y: 0, width, height, fill: "#ffffff" }),
        ...body,
      ],
    ),
  ].join("\n");
}

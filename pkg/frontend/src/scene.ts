/**
 * A tiny deterministic scene graph: figures are built as primitive lists in
 * pixel space and serialized to byte-stable SVG (fixed number formatting, no
 * ids, no timestamps).  The raster backend consumes the same primitives.
 */

export interface Line {
  t: "line";
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  color: string;
  width: number;
  dash?: number[];
}

export interface Polyline {
  t: "polyline";
  pts: [number, number][];
  color: string;
  width: number;
  dash?: number[];
}

export interface Circle {
  t: "circle";
  x: number;
  y: number;
  r: number;
  color: string;
}

export interface Rect {
  t: "rect";
  x: number;
  y: number;
  w: number;
  h: number;
  fill: string;
}

export interface Text {
  t: "text";
  x: number;
  y: number;
  s: string;
  size: number;
  color: string;
  anchor: "start" | "middle" | "end";
}

export type Primitive = Line | Polyline | Circle | Rect | Text;

export interface Scene {
  width: number;
  height: number;
  prims: Primitive[];
}

export const PALETTE = ["#1f5fa8", "#c23b22", "#2e8540", "#8031a7", "#b8860b",
                       "#0f7c8c"];

export function fmt(x: number): string {
  if (!Number.isFinite(x)) {
    throw new Error(`non-finite coordinate ${x}`);
  }
  const s = x.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function toSVG(scene: Scene): string {
  const out: string[] = [];
  out.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${scene.width}" ` +
      `height="${scene.height}" viewBox="0 0 ${scene.width} ${scene.height}">`,
  );
  out.push(`<rect x="0" y="0" width="${scene.width}" height="${scene.height}" fill="#ffffff"/>`);
  for (const p of scene.prims) {
    switch (p.t) {
      case "line": {
        const dash = p.dash ? ` stroke-dasharray="${p.dash.join(" ")}"` : "";
        out.push(
          `<line x1="${fmt(p.x1)}" y1="${fmt(p.y1)}" x2="${fmt(p.x2)}" ` +
            `y2="${fmt(p.y2)}" stroke="${p.color}" stroke-width="${p.width}"${dash}/>`,
        );
        break;
      }
      case "polyline": {
        const pts = p.pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
        const dash = p.dash ? ` stroke-dasharray="${p.dash.join(" ")}"` : "";
        out.push(
          `<polyline points="${pts}" fill="none" stroke="${p.color}" ` +
            `stroke-width="${p.width}"${dash}/>`,
        );
        break;
      }
      case "circle":
        out.push(
          `<circle cx="${fmt(p.x)}" cy="${fmt(p.y)}" r="${fmt(p.r)}" fill="${p.color}"/>`,
        );
        break;
      case "rect":
        out.push(
          `<rect x="${fmt(p.x)}" y="${fmt(p.y)}" width="${fmt(p.w)}" ` +
            `height="${fmt(p.h)}" fill="${p.fill}"/>`,
        );
        break;
      case "text":
        out.push(
          `<text x="${fmt(p.x)}" y="${fmt(p.y)}" font-family="monospace" ` +
            `font-size="${p.size}" fill="${p.color}" text-anchor="${p.anchor}">` +
            `${esc(p.s)}</text>`,
        );
        break;
    }
  }
  out.push("</svg>");
  return out.join("\n") + "\n";
}

// ---------------------------------------------------------------------------
// axes helpers

export interface AxisSpec {
  min: number;
  max: number;
  ticks: number[];
}

/** Round tick positions covering [lo, hi]; deterministic. */
export function niceAxis(lo: number, hi: number, nTicks = 5): AxisSpec {
  if (!(hi > lo)) {
    hi = lo + 1;
  }
  const span = hi - lo;
  const step0 = span / Math.max(nTicks - 1, 1);
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  let step = mag;
  for (const m of [1, 2, 2.5, 5, 10]) {
    if (m * mag >= step0) {
      step = m * mag;
      break;
    }
  }
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= hi + 1e-9 * span; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return { min: lo, max: hi, ticks };
}

export function tickLabel(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1000 || a < 0.01) {
    return v.toExponential(1);
  }
  return parseFloat(v.toPrecision(4)).toString();
}

export interface Frame {
  x0: number;
  y0: number;
  x1: number;
  y1: number; // pixel corners (y0 = top)
  xAxis: AxisSpec;
  yAxis: AxisSpec;
  xOf(v: number): number;
  yOf(v: number): number;
}

export function makeFrame(
  scene: Scene,
  xAxis: AxisSpec,
  yAxis: AxisSpec,
  labels: { title: string; xLabel: string; yLabel: string },
): Frame {
  const x0 = 64;
  const y0 = 34;
  const x1 = scene.width - 18;
  const y1 = scene.height - 46;
  const xOf = (v: number) =>
    x0 + ((v - xAxis.min) / (xAxis.max - xAxis.min)) * (x1 - x0);
  const yOf = (v: number) =>
    y1 - ((v - yAxis.min) / (yAxis.max - yAxis.min)) * (y1 - y0);
  const p = scene.prims;
  p.push({ t: "text", x: (x0 + x1) / 2, y: 20, s: labels.title, size: 13,
           color: "#000000", anchor: "middle" });
  p.push({ t: "line", x1: x0, y1, x2: x1, y2: y1, color: "#000000", width: 1 });
  p.push({ t: "line", x1: x0, y1: y0, x2: x0, y2: y1, color: "#000000", width: 1 });
  for (const v of xAxis.ticks) {
    const x = xOf(v);
    p.push({ t: "line", x1: x, y1, x2: x, y2: y1 + 4, color: "#000000", width: 1 });
    p.push({ t: "text", x, y: y1 + 16, s: tickLabel(v), size: 10,
             color: "#000000", anchor: "middle" });
  }
  for (const v of yAxis.ticks) {
    const y = yOf(v);
    p.push({ t: "line", x1: x0 - 4, y1: y, x2: x0, y2: y, color: "#000000", width: 1 });
    p.push({ t: "text", x: x0 - 7, y: y + 3, s: tickLabel(v), size: 10,
             color: "#000000", anchor: "end" });
  }
  p.push({ t: "text", x: (x0 + x1) / 2, y: scene.height - 26, s: labels.xLabel,
           size: 11, color: "#000000", anchor: "middle" });
  p.push({ t: "text", x: 14, y: y0 - 10, s: labels.yLabel, size: 11,
           color: "#000000", anchor: "start" });
  return { x0, y0, x1, y1, xAxis, yAxis, xOf, yOf };
}

export function legend(scene: Scene, frame: Frame,
                       entries: { label: string; color: string }[]): void {
  let y = frame.y0 + 12;
  for (const e of entries) {
    scene.prims.push({ t: "line", x1: frame.x1 - 120, y1: y - 3,
                       x2: frame.x1 - 100, y2: y - 3, color: e.color, width: 2 });
    scene.prims.push({ t: "text", x: frame.x1 - 94, y, s: e.label, size: 10,
                       color: "#000000", anchor: "start" });
    y += 14;
  }
}

export function caption(scene: Scene, s: string): void {
  scene.prims.push({ t: "text", x: scene.width / 2, y: scene.height - 8,
                     s, size: 10, color: "#333333", anchor: "middle" });
}

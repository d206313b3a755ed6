/**
 * SVG rendering of the two stacked panels: posterior mean with its
 * credible band and sampled-point markers on top, the acquisition curve
 * with an "x" at its served maximizer below.
 *
 * Pure string generation so the drawing logic is testable without a DOM.
 */

import type { CurveView } from "./state.js";

export interface ChartOptions {
  width: number;
  panelHeight: number;
  margin: number;
}

const DEFAULTS: ChartOptions = { width: 640, panelHeight: 200, margin: 36 };

interface Scale {
  (value: number): number;
}

function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

function pathFrom(xs: number[], ys: number[], sx: Scale, sy: Scale): string {
  return xs
    .map((x, i) => `${i === 0 ? "M" : "L"}${sx(x).toFixed(2)},${sy(ys[i]).toFixed(2)}`)
    .join(" ");
}

function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (Number.isFinite(v)) {
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
  }
  if (!Number.isFinite(lo)) return [0, 1];
  if (lo === hi) return [lo - 1, hi + 1];
  const pad = 0.05 * (hi - lo);
  return [lo - pad, hi + pad];
}

export function renderCurveSvg(
  view: CurveView,
  suggestionX: number | null,
  options: Partial<ChartOptions> = {},
): string {
  const opt = { ...DEFAULTS, ...options };
  const { width, panelHeight, margin } = opt;
  const height = 2 * panelHeight + 3 * margin;
  const xDomain: [number, number] = [view.xs[0], view.xs[view.xs.length - 1]];
  const sx = linearScale(xDomain[0], xDomain[1], margin, width - margin);

  const yTop = extent([...view.lower, ...view.upper, ...view.markers.map((m) => m.y)]);
  const syTop = linearScale(yTop[0], yTop[1], margin + panelHeight, margin);

  const bandPoints = view.xs
    .map((x, i) => `${sx(x).toFixed(2)},${syTop(view.upper[i]).toFixed(2)}`)
    .concat(
      [...view.xs.keys()]
        .reverse()
        .map((i) => `${sx(view.xs[i]).toFixed(2)},${syTop(view.lower[i]).toFixed(2)}`),
    )
    .join(" ");

  const markers = view.markers
    .map(
      (m) =>
        `<circle class="sample" cx="${sx(m.x).toFixed(2)}" cy="${syTop(m.y).toFixed(2)}" r="3.5"/>`,
    )
    .join("");

  const yBot = extent(view.acquisition);
  const botTopEdge = 2 * margin + panelHeight;
  const syBot = linearScale(yBot[0], yBot[1], botTopEdge + panelHeight, botTopEdge);

  const markX = suggestionX ?? view.argmaxX;
  const markIndex = nearestIndex(view.xs, markX);
  const markLabel = Number.isFinite(markX)
    ? `<text class="argmax" x="${sx(markX).toFixed(2)}" y="${syBot(
        view.acquisition[markIndex],
      ).toFixed(2)}" text-anchor="middle" dominant-baseline="middle">x</text>`
    : "";

  return [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" width="${width}" height="${height}">`,
    `<g class="posterior-panel">`,
    `<polygon class="band" points="${bandPoints}" fill="#9ecae1" opacity="0.45"/>`,
    `<path class="mean" d="${pathFrom(view.xs, view.mean, sx, syTop)}" fill="none" stroke="#1f4e79" stroke-width="1.5"/>`,
    markers,
    `</g>`,
    `<g class="acquisition-panel">`,
    `<path class="acquisition" d="${pathFrom(view.xs, view.acquisition, sx, syBot)}" fill="none" stroke="#b2461b" stroke-width="1.5"/>`,
    markLabel,
    `</g>`,
    `</svg>`,
  ].join("");
}

export function nearestIndex(xs: number[], target: number): number {
  let best = 0;
  let bestDist = Infinity;
  xs.forEach((x, i) => {
    const d = Math.abs(x - target);
    if (d < bestDist) {
      bestDist = d;
      best = i;
    }
  });
  return best;
}

/** Band width in pixels at the marker positions; 0 means the band pinches shut. */
export function bandWidthAt(view: CurveView, x: number): number {
  const i = nearestIndex(view.xs, x);
  return view.upper[i] - view.lower[i];
}

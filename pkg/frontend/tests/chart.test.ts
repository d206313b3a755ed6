import { describe, expect, it } from "vitest";

import { bandWidthAt, nearestIndex, renderCurveSvg } from "../src/chart.js";
import type { CurveView } from "../src/state.js";

function view(overrides: Partial<CurveView> = {}): CurveView {
  return {
    axis: 0,
    revision: 1,
    xs: [0, 0.25, 0.5, 0.75, 1],
    mean: [0, 1, 2, 1, 0],
    lower: [-1, 0.9, 2, 0.5, -1],
    upper: [1, 1.1, 2, 1.5, 1],
    acquisition: [0.1, 0.4, 0.05, 0.8, 0.2],
    markers: [
      { x: 0.25, y: 1 },
      { x: 0.5, y: 2 },
    ],
    argmaxX: 0.75,
    ...overrides,
  };
}

describe("curve rendering", () => {
  it("draws both panels with the band, mean, acquisition, and markers", () => {
    const svg = renderCurveSvg(view(), null);
    expect(svg).toContain('class="band"');
    expect(svg).toContain('class="mean"');
    expect(svg).toContain('class="acquisition"');
    expect((svg.match(/class="sample"/g) ?? []).length).toBe(2);
  });

  it("marks the served suggestion coordinate with an x", () => {
    const svg = renderCurveSvg(view(), 0.75, { width: 100, panelHeight: 50, margin: 0 });
    // x = 0.75 of the [0, 1] domain maps to pixel 75 with these options
    const match = svg.match(/<text class="argmax" x="([\d.]+)"/);
    expect(match).not.toBeNull();
    expect(Number(match![1])).toBeCloseTo(75, 5);
    expect(svg).toContain(">x</text>");
  });

  it("falls back to the curve argmax when no suggestion is supplied", () => {
    const svg = renderCurveSvg(view(), null, { width: 100, panelHeight: 50, margin: 0 });
    const match = svg.match(/<text class="argmax" x="([\d.]+)"/);
    expect(Number(match![1])).toBeCloseTo(75, 5);
  });

  it("band pinches to zero width at an interpolated sample", () => {
    const v = view();
    expect(bandWidthAt(v, 0.5)).toBe(0);
    expect(bandWidthAt(v, 0.0)).toBeGreaterThan(0);
  });

  it("nearest index is exact on grid points", () => {
    expect(nearestIndex([0, 0.5, 1], 0.5)).toBe(1);
    expect(nearestIndex([0, 0.5, 1], 0.74)).toBe(1);
    expect(nearestIndex([0, 0.5, 1], 0.76)).toBe(2);
  });
});

/**
 * Pure view-model assembly and input validation.
 *
 * Nothing here computes statistics; these functions only reshape server
 * responses for rendering and pre-validate form input against the same
 * bounds the server enforces.
 */

import type {
  CampaignConfig,
  CampaignSummary,
  CurveMarker,
  CurveResponse,
  CurveRow,
  Observation,
  Suggestion,
} from "./api.js";

export interface CampaignView {
  campaignId: string;
  config: CampaignConfig;
  revision: number;
  observations: Observation[];
  suggestion: Suggestion | null;
  incumbent: { x: number[]; mean: number } | null;
}

export interface CurveView {
  axis: number;
  revision: number;
  xs: number[];
  mean: number[];
  lower: number[];
  upper: number[];
  acquisition: number[];
  markers: CurveMarker[];
  argmaxX: number;
}

export function buildCampaignView(
  summary: CampaignSummary,
  suggestion: Suggestion | null,
): CampaignView {
  return {
    campaignId: summary.campaign_id,
    config: summary.config,
    revision: summary.revision,
    observations: summary.observations,
    suggestion,
    incumbent: suggestion?.incumbent ?? null,
  };
}

export function argmaxRow(rows: CurveRow[]): CurveRow {
  let best = rows[0];
  for (const row of rows) {
    if (row.acquisition > best.acquisition) best = row;
  }
  return best;
}

export function buildCurveView(curve: CurveResponse, observations: Observation[]): CurveView {
  const rows = curve.rows;
  const view: CurveView = {
    axis: curve.axis,
    revision: curve.revision,
    xs: rows.map((r) => r.x),
    mean: rows.map((r) => r.mean),
    lower: rows.map((r) => r.lower),
    upper: rows.map((r) => r.upper),
    acquisition: rows.map((r) => r.acquisition),
    markers: curve.markers,
    argmaxX: rows.length ? argmaxRow(rows).x : NaN,
  };
  // markers must be a projection of the observation table, nothing else
  const allowed = new Set(observations.map((obs) => `${obs.x[curve.axis]}|${obs.y}`));
  view.markers = view.markers.filter((m) => allowed.has(`${m.x}|${m.y}`));
  return view;
}

export interface DomainBounds {
  lo: number[];
  hi: number[];
}

export function domainBounds(config: CampaignConfig): DomainBounds {
  if (config.domain.kind === "box") {
    return { lo: config.domain.lo, hi: config.domain.hi };
  }
  const dims = config.dimension;
  const lo = new Array(dims).fill(Infinity);
  const hi = new Array(dims).fill(-Infinity);
  for (const point of config.domain.points) {
    for (let i = 0; i < dims; i++) {
      lo[i] = Math.min(lo[i], point[i]);
      hi[i] = Math.max(hi[i], point[i]);
    }
  }
  return { lo, hi };
}

export interface ObservationInput {
  ok: boolean;
  point: number[];
  y: number;
  errors: { field: string; message: string }[];
}

/** Client-side mirror of the server-side domain check; never sends bad input. */
export function validateObservationInput(
  xTexts: string[],
  yText: string,
  bounds: DomainBounds,
): ObservationInput {
  const errors: { field: string; message: string }[] = [];
  const point: number[] = [];
  xTexts.forEach((text, i) => {
    const value = Number(text);
    if (text.trim() === "" || !Number.isFinite(value)) {
      errors.push({ field: `x${i}`, message: "must be a number" });
      point.push(NaN);
      return;
    }
    if (value < bounds.lo[i] || value > bounds.hi[i]) {
      errors.push({ field: `x${i}`, message: `outside [${bounds.lo[i]}, ${bounds.hi[i]}]` });
    }
    point.push(value);
  });
  const y = Number(yText);
  if (yText.trim() === "" || !Number.isFinite(y)) {
    errors.push({ field: "y", message: "must be a number" });
  }
  return { ok: errors.length === 0, point, y, errors };
}

export function defaultSlice(bounds: DomainBounds): number[] {
  return bounds.lo.map((lo, i) => (lo + bounds.hi[i]) / 2);
}

export function formatPoint(x: number[], digits = 6): string {
  return x.map((v) => Number(v.toPrecision(digits)).toString()).join(", ");
}

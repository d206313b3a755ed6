/**
 * Dashboard wiring: polls the campaign service, renders the observation
 * table, the live suggestion, and the two-panel posterior/acquisition
 * chart, and submits experiment outcomes with optimistic concurrency.
 */

import { ApiError, CampaignClient, RevisionConflict, type Suggestion } from "./api.js";
import { renderCurveSvg } from "./chart.js";
import {
  buildCampaignView,
  buildCurveView,
  defaultSlice,
  domainBounds,
  formatPoint,
  validateObservationInput,
  type CampaignView,
  type CurveView,
} from "./state.js";

export const POLL_INTERVAL_MS = 2000;

interface QueuedObservation {
  x: number[];
  y: number;
}

export interface DashboardController {
  refresh(): Promise<void>;
  submitForm(): Promise<void>;
  view(): CampaignView | null;
  curve(): CurveView | null;
  dispose(): void;
}

function el<T extends HTMLElement>(doc: Document, id: string): T {
  const node = doc.getElementById(id);
  if (!node) throw new Error(`dashboard element #${id} missing`);
  return node as T;
}

export function initDashboard(
  doc: Document,
  client: CampaignClient,
  campaignId: string,
  pollMs: number = POLL_INTERVAL_MS,
): DashboardController {
  const banner = el<HTMLElement>(doc, "banner");
  const suggestionBox = el<HTMLElement>(doc, "suggestion");
  const incumbentBox = el<HTMLElement>(doc, "incumbent");
  const revisionBox = el<HTMLElement>(doc, "revision");
  const tableBody = el<HTMLElement>(doc, "observation-rows");
  const chartBox = el<HTMLElement>(doc, "chart");
  const form = el<HTMLFormElement>(doc, "observe-form");
  const xInputs = el<HTMLElement>(doc, "x-inputs");
  const yInput = el<HTMLInputElement>(doc, "y-input");
  const errorBox = el<HTMLElement>(doc, "form-errors");
  const axisSelect = el<HTMLSelectElement>(doc, "axis-select");
  const sliceBox = el<HTMLElement>(doc, "slice-inputs");

  let view: CampaignView | null = null;
  let curveView: CurveView | null = null;
  let queued: QueuedObservation | null = null;
  let timer: ReturnType<typeof setInterval> | null = null;
  let disposed = false;

  function setBanner(text: string, kind: "" | "error" | "retry" = "") {
    banner.textContent = text;
    banner.dataset.kind = kind;
    banner.style.display = text ? "block" : "none";
  }

  function ensureInputs(dimension: number) {
    if (xInputs.children.length === dimension) return;
    xInputs.innerHTML = "";
    for (let i = 0; i < dimension; i++) {
      const input = doc.createElement("input");
      input.id = `x-input-${i}`;
      input.name = `x${i}`;
      input.setAttribute("data-dim", String(i));
      xInputs.appendChild(input);
    }
  }

  function ensureSliceControls(dimension: number) {
    if (axisSelect.options.length !== dimension) {
      axisSelect.innerHTML = "";
      for (let i = 0; i < dimension; i++) {
        const option = doc.createElement("option");
        option.value = String(i);
        option.textContent = `axis ${i}`;
        axisSelect.appendChild(option);
      }
    }
    // d >= 2 gets inputs pinning the non-plotted coordinates
    const wanted = dimension > 1 ? dimension : 0;
    if (sliceBox.children.length !== wanted) {
      sliceBox.innerHTML = "";
      for (let i = 0; i < wanted; i++) {
        const input = doc.createElement("input");
        input.id = `slice-input-${i}`;
        input.setAttribute("data-dim", String(i));
        sliceBox.appendChild(input);
      }
    }
  }

  function prefillSuggestion(suggestion: Suggestion | null) {
    if (!suggestion) return;
    suggestion.x_next.forEach((value, i) => {
      const input = doc.getElementById(`x-input-${i}`) as HTMLInputElement | null;
      // leave user edits alone; only fill untouched fields
      if (input && !input.dataset.touched) input.value = String(value);
    });
  }

  function renderView() {
    if (!view) return;
    revisionBox.textContent = String(view.revision);
    const s = view.suggestion;
    suggestionBox.textContent = s
      ? `next: (${formatPoint(s.x_next)})  [${s.policy}, value ${s.acquisition_value.toExponential(3)}]`
      : "no suggestion yet";
    incumbentBox.textContent = view.incumbent
      ? `best so far: (${formatPoint(view.incumbent.x)}) with posterior mean ${view.incumbent.mean.toPrecision(6)}`
      : "no incumbent yet";
    tableBody.innerHTML = "";
    view.observations.forEach((obs, index) => {
      const row = doc.createElement("tr");
      row.innerHTML =
        `<td>${index + 1}</td><td>${formatPoint(obs.x)}</td>` +
        `<td>${obs.y}</td><td>${obs.tag}</td><td>${obs.timestamp}</td>`;
      tableBody.appendChild(row);
    });
    ensureInputs(view.config.dimension);
    ensureSliceControls(view.config.dimension);
    prefillSuggestion(s);
  }

  function renderChart() {
    chartBox.innerHTML = curveView
      ? renderCurveSvg(curveView, view?.suggestion?.x_next[curveView.axis] ?? null)
      : "<p>model not fitted yet; record more observations</p>";
  }

  async function flushQueued(revision: number): Promise<boolean> {
    if (!queued || !view) return false;
    const { x, y } = queued;
    try {
      await client.postObservation(view.campaignId, revision, x, y);
      queued = null;
      setBanner("");
      return true;
    } catch (error) {
      if (error instanceof RevisionConflict) {
        queued = null;
        setBanner(
          `campaign moved on (now at revision ${error.actual}); review and resubmit`,
          "error",
        );
        return false;
      }
      if (error instanceof ApiError) {
        queued = null;
        setBanner(`server rejected observation: ${error.message}`, "error");
        return false;
      }
      setBanner("connection lost; observation queued for retry", "retry");
      return false;
    }
  }

  async function refresh(): Promise<void> {
    if (disposed) return;
    try {
      const summary = await client.getCampaign(campaignId);
      let suggestion: Suggestion | null = null;
      let revision = summary.revision;
      try {
        const response = await client.getSuggestion(campaignId);
        suggestion = response.suggestion;
        revision = response.revision;
      } catch (error) {
        if (!(error instanceof ApiError)) throw error;
      }
      view = buildCampaignView({ ...summary, revision }, suggestion);
      if (queued) await flushQueued(view.revision);
      try {
        const axis = Number(axisSelect.value || "0");
        const slice = readSlice();
        const curve = await client.getCurve(campaignId, axis, 120, slice);
        curveView = buildCurveView(curve, view.observations);
      } catch (error) {
        if (error instanceof ApiError) curveView = null;
        else throw error;
      }
      if (banner.dataset.kind === "retry" && !queued) setBanner("");
      renderView();
      renderChart();
    } catch (error) {
      if (error instanceof ApiError) {
        setBanner(`service error: ${error.message}`, "error");
      } else {
        setBanner("connection lost; retrying", "retry");
      }
    }
  }

  function readSlice(): number[] | undefined {
    if (!view || view.config.dimension < 2) return undefined;
    const bounds = domainBounds(view.config);
    const fallback = defaultSlice(bounds);
    const values: number[] = [];
    for (let i = 0; i < view.config.dimension; i++) {
      const input = doc.getElementById(`slice-input-${i}`) as HTMLInputElement | null;
      const parsed = input ? Number(input.value) : NaN;
      values.push(Number.isFinite(parsed) && input?.value !== "" ? parsed : fallback[i]);
    }
    return values;
  }

  async function submitForm(): Promise<void> {
    if (!view) return;
    const dimension = view.config.dimension;
    const xTexts: string[] = [];
    for (let i = 0; i < dimension; i++) {
      const input = doc.getElementById(`x-input-${i}`) as HTMLInputElement;
      xTexts.push(input.value);
    }
    const parsed = validateObservationInput(xTexts, yInput.value, domainBounds(view.config));
    if (!parsed.ok) {
      // inline validation; no request leaves the page
      errorBox.textContent = parsed.errors.map((e) => `${e.field}: ${e.message}`).join("; ");
      return;
    }
    errorBox.textContent = "";

    // optimistic row, rolled back by the authoritative refresh
    const optimistic = doc.createElement("tr");
    optimistic.className = "pending";
    optimistic.innerHTML =
      `<td>…</td><td>${formatPoint(parsed.point)}</td><td>${parsed.y}</td>` +
      `<td>submitting</td><td></td>`;
    tableBody.appendChild(optimistic);

    queued = { x: parsed.point, y: parsed.y };
    const accepted = await flushQueued(view.revision);
    if (accepted) {
      yInput.value = "";
      for (let i = 0; i < dimension; i++) {
        const input = doc.getElementById(`x-input-${i}`) as HTMLInputElement;
        delete input.dataset.touched;
      }
    }
    await refresh();
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void submitForm();
  });
  xInputs.addEventListener("input", (event) => {
    const target = event.target as HTMLInputElement;
    target.dataset.touched = "1";
  });
  axisSelect.addEventListener("change", () => void refresh());

  timer = setInterval(() => void refresh(), pollMs);
  void refresh();

  return {
    refresh,
    submitForm,
    view: () => view,
    curve: () => curveView,
    dispose() {
      disposed = true;
      if (timer) clearInterval(timer);
    },
  };
}

/** Browser entry point: pick the campaign from the URL or the first one listed. */
export async function boot(doc: Document): Promise<DashboardController | null> {
  const client = new CampaignClient("");
  const params = new URLSearchParams(doc.location?.search ?? "");
  let campaignId = params.get("campaign");
  if (!campaignId) {
    const ids = await client.listCampaigns();
    campaignId = ids[0] ?? null;
  }
  if (!campaignId) {
    const banner = doc.getElementById("banner");
    if (banner) {
      banner.textContent = "no campaigns yet; create one with `bogo create`";
      banner.style.display = "block";
    }
    return null;
  }
  return initDashboard(doc, client, campaignId);
}

declare global {
  interface Window {
    __bogoDashboard?: DashboardController | null;
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined" && !("__vitest" in globalThis)) {
  void boot(document).then((controller) => {
    window.__bogoDashboard = controller;
  });
}

// Wires the scenario explorer together: segment toggle buttons, the
// depth heatmap, a pinned-reference diff view, and exploration history.

import { ApiClient, LocationPoint } from "./api.js";
import { layoutDepthMarkers, layoutDiffMarkers, legendText, paintMarkers, Viewport } from "./render.js";
import { LatestPredictionGate, ScenarioState } from "./state.js";

const DEFAULT_BASE_URL = "http://127.0.0.1:8000";
const VIEWPORT: Viewport = { width: 640, height: 420, margin: 16 };

interface Elements {
  toggles: HTMLDivElement;
  canvas: HTMLCanvasElement;
  legend: HTMLSpanElement;
  scenarioLabel: HTMLSpanElement;
  status: HTMLSpanElement;
  pinButton: HTMLButtonElement;
  diffButton: HTMLButtonElement;
  exportButton: HTMLButtonElement;
  historyList: HTMLUListElement;
  scaleInput: HTMLInputElement;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export async function boot(baseUrl: string = DEFAULT_BASE_URL): Promise<void> {
  const ui: Elements = {
    toggles: el("toggles"),
    canvas: el("map"),
    legend: el("legend"),
    scenarioLabel: el("scenario-label"),
    status: el("status"),
    pinButton: el("pin"),
    diffButton: el("diff"),
    exportButton: el("export"),
    historyList: el("history"),
    scaleInput: el("scale-max"),
  };
  const api = new ApiClient(baseUrl);
  const meta = await api.getMeta();
  const locations: LocationPoint[] = await api.getLocations();
  const state = new ScenarioState(meta.d_x);
  const ctx = ui.canvas.getContext("2d");
  if (!ctx) throw new Error("canvas 2d context unavailable");
  let diffMode = false;

  const scaleMax = () => {
    const v = parseFloat(ui.scaleInput.value);
    return Number.isFinite(v) && v > 0 ? v : 2.0;
  };

  function drawDepths(depths: number[]) {
    const markers = layoutDepthMarkers(locations, depths, scaleMax(), VIEWPORT);
    ctx!.clearRect(0, 0, VIEWPORT.width, VIEWPORT.height);
    paintMarkers(ctx!, markers);
    ui.legend.textContent = legendText("depth", scaleMax(), markers.some((m) => m.clamped));
  }

  function drawDiff(diff: number[]) {
    const bound = scaleMax() / 2;
    const markers = layoutDiffMarkers(locations, diff, bound, VIEWPORT);
    ctx!.clearRect(0, 0, VIEWPORT.width, VIEWPORT.height);
    paintMarkers(ctx!, markers);
    ui.legend.textContent = legendText("diff", bound, markers.some((m) => m.clamped));
  }

  function refreshHistory() {
    ui.historyList.replaceChildren(
      ...state.history
        .slice(-12)
        .reverse()
        .map((entry) => {
          const item = document.createElement("li");
          item.textContent = `${entry.scenario}  mean ${entry.meanDepth.toFixed(3)} m  wet ${(entry.wetFraction * 100).toFixed(1)}%  ${entry.latencyMs.toFixed(1)} ms`;
          return item;
        }),
    );
  }

  const gate = new LatestPredictionGate(async (scenario) => {
    ui.status.textContent = "predicting…";
    try {
      if (diffMode && state.reference) {
        const body = await api.compare(scenario, state.reference);
        drawDiff(body.diff);
        ui.status.textContent = `diff vs ${state.reference} in ${body.latency_ms.toFixed(1)} ms`;
      } else {
        const body = await api.predict(scenario);
        state.recordResult(scenario, body.depths, body.latency_ms);
        drawDepths(body.depths);
        refreshHistory();
        ui.status.textContent = `${body.latency_ms.toFixed(1)} ms (model ${body.model_fingerprint.slice(0, 8)})`;
      }
    } catch (err) {
      ui.status.textContent = `request failed: ${String(err)} — state unchanged, toggle again to retry`;
    }
  });

  for (let segment = 0; segment < meta.d_x; segment++) {
    const button = document.createElement("button");
    button.textContent = `segment ${segment}: open`;
    button.addEventListener("click", () => {
      const scenario = state.toggle(segment);
      button.textContent = `segment ${segment}: ${scenario[segment] === "1" ? "protected" : "open"}`;
      ui.scenarioLabel.textContent = scenario;
      void gate.submit(scenario);
    });
    ui.toggles.appendChild(button);
  }

  ui.pinButton.addEventListener("click", () => {
    state.pinReference();
    ui.pinButton.textContent = `pinned ${state.reference}`;
  });
  ui.diffButton.addEventListener("click", () => {
    if (!state.reference) {
      ui.status.textContent = "pin a reference scenario first";
      return;
    }
    diffMode = !diffMode;
    ui.diffButton.textContent = diffMode ? "show depths" : "show diff vs pinned";
    void gate.submit(state.current);
  });
  ui.exportButton.addEventListener("click", () => {
    const blob = new Blob([state.historyCsv()], { type: "text/csv" });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = "exploration-history.csv";
    link.click();
    URL.revokeObjectURL(link.href);
  });

  ui.scenarioLabel.textContent = state.current;
  void gate.submit(state.current);
}

declare global {
  interface Window {
    bootExplorer: (baseUrl?: string) => Promise<void>;
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  window.bootExplorer = boot;
}

// DOM rendering of the capture state: probability bars, highlighted label,
// live trace on a canvas, prediction history, and an error toast.

import type { GestureLabel } from "./protocol.js";
import type { CaptureState } from "./state.js";

const LABELS: GestureLabel[] = ["nod", "shake", "other"];

export interface ViewElements {
  status: HTMLElement;
  bars: Record<GestureLabel, HTMLElement>;
  barValues: Record<GestureLabel, HTMLElement>;
  labelCells: Record<GestureLabel, HTMLElement>;
  sampleIndex: HTMLElement;
  history: HTMLElement;
  toast: HTMLElement;
  trace: HTMLCanvasElement | null;
}

export function bindView(root: Document): ViewElements {
  const get = (id: string) => {
    const el = root.getElementById(id);
    if (!el) throw new Error(`missing element #${id}`);
    return el as HTMLElement;
  };
  const per = (prefix: string) =>
    Object.fromEntries(LABELS.map((l) => [l, get(`${prefix}-${l}`)])) as Record<
      GestureLabel,
      HTMLElement
    >;
  return {
    status: get("status"),
    bars: per("bar"),
    barValues: per("val"),
    labelCells: per("cell"),
    sampleIndex: get("sample-index"),
    history: get("history"),
    toast: get("toast"),
    trace: root.getElementById("trace") as HTMLCanvasElement | null,
  };
}

export function render(view: ViewElements, state: CaptureState): void {
  view.status.textContent = state.connection;
  view.status.className = `status ${state.connection}`;

  const latest = state.latest;
  for (const label of LABELS) {
    const p = latest ? latest.probs[label] : 0;
    view.bars[label].style.width = `${Math.round(p * 100)}%`;
    view.barValues[label].textContent = `${Math.round(p * 100)}%`;
    view.labelCells[label].classList.toggle(
      "winner",
      latest !== null && latest.label === label,
    );
  }
  view.sampleIndex.textContent = latest ? `sample ${latest.sample_index}` : "";

  view.history.textContent = state.history
    .slice(-8)
    .map((m) => `#${m.sample_index} ${m.label}`)
    .join("\n");

  view.toast.textContent = state.lastError ?? "";
  view.toast.style.display = state.lastError ? "block" : "none";

  if (view.trace) drawTrace(view.trace, state);
}

function drawTrace(canvas: HTMLCanvasElement, state: CaptureState): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const series: Array<["pitch" | "roll", string]> = [
    ["pitch", "#4ec9b0"],
    ["roll", "#dcdcaa"],
  ];
  for (const [key, color] of series) {
    ctx.strokeStyle = color;
    ctx.beginPath();
    state.trace.forEach((a, i) => {
      const x = (i / 239) * width;
      const y = height / 2 - a[key] * height;
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();
  }
}

// Wire schema shared with the prediction service: UTF-8 JSON text frames.

export type GestureLabel = "nod" | "shake" | "other";

export interface SampleMsg {
  type: "sample";
  pitch: number;
  roll: number;
}

export interface ResetMsg {
  type: "reset";
}

export interface ConfigMsg {
  type: "config";
  warm_start: boolean;
}

export type ClientMsg = SampleMsg | ResetMsg | ConfigMsg;

export interface PredictionMsg {
  type: "prediction";
  sample_index: number;
  probs: Record<GestureLabel, number>;
  label: GestureLabel;
}

export interface AckMsg {
  type: "ack";
  of: "reset" | "config";
}

export interface ErrorMsg {
  type: "error";
  detail: string;
}

export type ServerMsg = PredictionMsg | AckMsg | ErrorMsg;

const LABELS: GestureLabel[] = ["nod", "shake", "other"];

function finiteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

export function sampleMsg(pitch: number, roll: number): SampleMsg {
  return { type: "sample", pitch, roll };
}

export function resetMsg(): ResetMsg {
  return { type: "reset" };
}

export function configMsg(warmStart: boolean): ConfigMsg {
  return { type: "config", warm_start: warmStart };
}

/** Validates an outbound message against the service's client schema. */
export function isValidClientMsg(obj: unknown): obj is ClientMsg {
  if (typeof obj !== "object" || obj === null) return false;
  const m = obj as Record<string, unknown>;
  switch (m.type) {
    case "sample":
      return finiteNumber(m.pitch) && finiteNumber(m.roll);
    case "reset":
      return Object.keys(m).length === 1;
    case "config":
      return typeof m.warm_start === "boolean";
    default:
      return false;
  }
}

export function isPrediction(obj: unknown): obj is PredictionMsg {
  if (typeof obj !== "object" || obj === null) return false;
  const m = obj as Record<string, unknown>;
  if (m.type !== "prediction" || !Number.isInteger(m.sample_index)) return false;
  if (!LABELS.includes(m.label as GestureLabel)) return false;
  const probs = m.probs as Record<string, unknown> | undefined;
  return (
    typeof probs === "object" &&
    probs !== null &&
    LABELS.every((l) => finiteNumber(probs[l]))
  );
}

/** Parses a server frame; returns null for malformed or unknown payloads. */
export function parseServerMsg(text: string): ServerMsg | null {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const m = obj as Record<string, unknown>;
  if (isPrediction(m)) return m;
  if (m.type === "ack" && (m.of === "reset" || m.of === "config")) {
    return { type: "ack", of: m.of };
  }
  if (m.type === "error" && typeof m.detail === "string") {
    return { type: "error", detail: m.detail };
  }
  return null;
}

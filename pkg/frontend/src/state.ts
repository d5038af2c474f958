// Capture-pane state as a pure reducer over connection, sample, and server
// events, so any view is replayable from the event log.

import type { Angles } from "./mapping.js";
import type { PredictionMsg, ServerMsg } from "./protocol.js";

export const TRACE_LEN = 240;

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface CaptureState {
  connection: ConnectionStatus;
  warmStart: boolean;
  trace: Angles[]; // most recent <= 240 samples, oldest first
  latest: PredictionMsg | null;
  history: PredictionMsg[];
  lastError: string | null;
}

export type CaptureEvent =
  | { kind: "connection"; status: ConnectionStatus }
  | { kind: "sampled"; angles: Angles }
  | { kind: "server"; msg: ServerMsg }
  | { kind: "warm-toggled"; warmStart: boolean }
  | { kind: "reset-sent" };

export function initialState(warmStart = false): CaptureState {
  return {
    connection: "connecting",
    warmStart,
    trace: [],
    latest: null,
    history: [],
    lastError: null,
  };
}

export function reduce(state: CaptureState, event: CaptureEvent): CaptureState {
  switch (event.kind) {
    case "connection":
      return { ...state, connection: event.status };
    case "sampled": {
      const trace = [...state.trace, event.angles];
      if (trace.length > TRACE_LEN) trace.splice(0, trace.length - TRACE_LEN);
      return { ...state, trace };
    }
    case "warm-toggled":
      return { ...state, warmStart: event.warmStart };
    case "reset-sent":
      return { ...state, trace: [], latest: null };
    case "server": {
      const msg = event.msg;
      if (msg.type === "prediction") {
        return {
          ...state,
          latest: msg,
          history: [...state.history, msg],
          lastError: null,
        };
      }
      if (msg.type === "error") {
        return { ...state, lastError: msg.detail };
      }
      return state; // acks do not change the view
    }
  }
}

import { describe, expect, it } from "vitest";
import type { PredictionMsg } from "../src/protocol.js";
import {
  initialState,
  reduce,
  TRACE_LEN,
  type CaptureEvent,
  type CaptureState,
} from "../src/state.js";

function prediction(index: number, label: "nod" | "shake" | "other" = "nod"): PredictionMsg {
  return {
    type: "prediction",
    sample_index: index,
    probs: { nod: 0.7, shake: 0.2, other: 0.1 },
    label,
  };
}

function replay(events: CaptureEvent[]): CaptureState {
  return events.reduce(reduce, initialState());
}

describe("capture state reducer", () => {
  it("tracks connection status", () => {
    const s = replay([{ kind: "connection", status: "open" }]);
    expect(s.connection).toBe("open");
  });

  it("caps the live trace at 240 samples", () => {
    const events: CaptureEvent[] = Array.from({ length: 300 }, (_, i) => ({
      kind: "sampled" as const,
      angles: { pitch: i, roll: -i },
    }));
    const s = replay(events);
    expect(s.trace.length).toBe(TRACE_LEN);
    expect(s.trace[0].pitch).toBe(60); // oldest 60 dropped
    expect(s.trace[TRACE_LEN - 1].pitch).toBe(299);
  });

  it("appends predictions to history and updates latest", () => {
    const s = replay([
      { kind: "server", msg: prediction(240) },
      { kind: "server", msg: prediction(255, "shake") },
    ]);
    expect(s.history.length).toBe(2);
    expect(s.latest?.sample_index).toBe(255);
    expect(s.latest?.label).toBe("shake");
  });

  it("errors set a toast without touching predictions", () => {
    const s = replay([
      { kind: "server", msg: prediction(240) },
      { kind: "server", msg: { type: "error", detail: "boom" } },
    ]);
    expect(s.lastError).toBe("boom");
    expect(s.latest?.sample_index).toBe(240);
    expect(s.history.length).toBe(1);
  });

  it("reset clears trace and latest but keeps history", () => {
    const s = replay([
      { kind: "sampled", angles: { pitch: 0.1, roll: 0 } },
      { kind: "server", msg: prediction(240) },
      { kind: "reset-sent" },
    ]);
    expect(s.trace).toEqual([]);
    expect(s.latest).toBeNull();
    expect(s.history.length).toBe(1);
  });

  it("is a pure function of the event log (replayable)", () => {
    const log: CaptureEvent[] = [
      { kind: "connection", status: "open" },
      { kind: "sampled", angles: { pitch: 0.2, roll: 0.1 } },
      { kind: "server", msg: prediction(240) },
      { kind: "warm-toggled", warmStart: true },
    ];
    const a = replay(log);
    const b = replay(log);
    expect(a).toEqual(b);
    const frozen = initialState();
    replay(log);
    expect(initialState()).toEqual(frozen); // no shared mutable state
  });
});

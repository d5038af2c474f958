// Fixed-rate sampler with zero-order hold: every 1/60 s it emits the most
// recent pointer-derived angle pair, catching up when timer ticks jitter.

import type { Angles } from "./mapping.js";

export interface Clock {
  now(): number; // milliseconds
  setInterval(fn: () => void, ms: number): number;
  clearInterval(id: number): void;
}

export const realClock: Clock = {
  now: () => performance.now(),
  setInterval: (fn, ms) => window.setInterval(fn, ms),
  clearInterval: (id) => window.clearInterval(id),
};

export class SampleLoop {
  private timer: number | null = null;
  private startedAt = 0;
  private sent = 0;
  private latest: Angles = { pitch: 0, roll: 0 };

  constructor(
    private readonly clock: Clock,
    private readonly hz: number,
    private readonly emit: (angles: Angles) => void,
  ) {}

  setPointer(angles: Angles): void {
    this.latest = angles;
  }

  get running(): boolean {
    return this.timer !== null;
  }

  get samplesSent(): number {
    return this.sent;
  }

  start(): void {
    if (this.timer !== null) return;
    this.startedAt = this.clock.now();
    this.sent = 0;
    const period = 1000 / this.hz;
    this.timer = this.clock.setInterval(() => this.tick(), period / 2);
  }

  stop(): void {
    if (this.timer !== null) {
      this.clock.clearInterval(this.timer);
      this.timer = null;
    }
  }

  private tick(): void {
    const due = Math.floor(((this.clock.now() - this.startedAt) * this.hz) / 1000);
    while (this.sent < due) {
      this.emit(this.latest);
      this.sent += 1;
    }
  }
}

// Application wiring: socket lifecycle with reconnect, the 60 Hz sample
// loop, state reduction, and rendering. All I/O is injectable for tests.

import type { Angles, PaneSize } from "./mapping.js";
import { pointerToAngles } from "./mapping.js";
import {
  configMsg,
  parseServerMsg,
  resetMsg,
  sampleMsg,
  type ClientMsg,
} from "./protocol.js";
import { render, type ViewElements } from "./render.js";
import { SampleLoop, type Clock } from "./sampler.js";
import { initialState, reduce, type CaptureEvent, type CaptureState } from "./state.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: (() => void) | null;
}

export interface AppOptions {
  url: string;
  warmStart: boolean;
  scale: number;
  pane: PaneSize;
  clock: Clock;
  connect: (url: string) => SocketLike;
  view: ViewElements | null;
  sampleHz?: number;
  reconnectDelayMs?: number;
}

export class App {
  state: CaptureState;
  readonly loop: SampleLoop;
  readonly sent: ClientMsg[] = [];
  private socket: SocketLike | null = null;

  constructor(private readonly opts: AppOptions) {
    this.state = initialState(opts.warmStart);
    this.loop = new SampleLoop(opts.clock, opts.sampleHz ?? 60, (a) =>
      this.emitSample(a),
    );
  }

  dispatch(event: CaptureEvent): void {
    this.state = reduce(this.state, event);
    if (this.opts.view) render(this.opts.view, this.state);
  }

  connect(): void {
    this.dispatch({ kind: "connection", status: "connecting" });
    const socket = this.opts.connect(this.opts.url);
    this.socket = socket;
    socket.onopen = () => {
      this.dispatch({ kind: "connection", status: "open" });
      if (this.state.warmStart) this.send(configMsg(true));
      this.loop.start();
    };
    socket.onmessage = (ev) => {
      const msg = parseServerMsg(ev.data);
      if (msg === null) {
        console.warn("unparseable server frame", ev.data);
        return;
      }
      this.dispatch({ kind: "server", msg });
    };
    socket.onclose = () => {
      this.loop.stop();
      this.dispatch({ kind: "connection", status: "closed" });
      this.socket = null;
      const delay = this.opts.reconnectDelayMs ?? 1000;
      const id = this.opts.clock.setInterval(() => {
        this.opts.clock.clearInterval(id);
        if (this.socket === null) this.connect();
      }, delay);
    };
  }

  pointerMoved(x: number, y: number): void {
    this.loop.setPointer(pointerToAngles(x, y, this.opts.pane, this.opts.scale));
  }

  pressReset(): void {
    this.send(resetMsg());
    this.dispatch({ kind: "reset-sent" });
  }

  toggleWarm(): void {
    const next = !this.state.warmStart;
    this.send(configMsg(next));
    this.dispatch({ kind: "warm-toggled", warmStart: next });
  }

  private emitSample(angles: Angles): void {
    this.send(sampleMsg(angles.pitch, angles.roll));
    this.dispatch({ kind: "sampled", angles });
  }

  private send(msg: ClientMsg): void {
    if (this.socket === null) return;
    this.socket.send(JSON.stringify(msg));
    this.sent.push(msg);
  }
}

// Browser entry point. Query parameters: ?url=ws://host:port/ws
// &warm=1 to start with warm-start on, &scale=1.0 for pane-to-radian scale.

import { App, type SocketLike } from "./app.js";
import { bindView } from "./render.js";
import { realClock } from "./sampler.js";

function defaultUrl(): string {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  return `${proto}://${location.host}/ws`;
}

function boot(): void {
  const params = new URLSearchParams(location.search);
  const pane = document.getElementById("pane") as HTMLElement;
  const app = new App({
    url: params.get("url") ?? defaultUrl(),
    warmStart: params.get("warm") === "1",
    scale: Number(params.get("scale") ?? "1"),
    pane: { width: pane.clientWidth || 1, height: pane.clientHeight || 1 },
    clock: realClock,
    connect: (url) => new WebSocket(url) as unknown as SocketLike,
    view: bindView(document),
  });

  const track = (ev: PointerEvent) => {
    const rect = pane.getBoundingClientRect();
    app.pointerMoved(ev.clientX - rect.left, ev.clientY - rect.top);
  };
  pane.addEventListener("pointermove", track);
  pane.addEventListener("pointerdown", track);

  document.getElementById("reset")?.addEventListener("click", () => app.pressReset());
  document.getElementById("warm")?.addEventListener("click", () => app.toggleWarm());

  app.connect();
}

boot();

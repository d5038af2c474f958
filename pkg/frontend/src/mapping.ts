// Pointer position inside the capture pane stands in for head pose:
// vertical displacement maps to pitch, horizontal to roll, each spanning
// [-0.5, +0.5] radians across the pane (times an optional scale factor).

export interface PaneSize {
  width: number;
  height: number;
}

export interface Angles {
  pitch: number;
  roll: number;
}

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, v));
}

export function pointerToAngles(
  x: number,
  y: number,
  pane: PaneSize,
  scale = 1.0,
): Angles {
  const nx = clamp(x / pane.width, 0, 1);
  const ny = clamp(y / pane.height, 0, 1);
  return {
    pitch: (0.5 - ny) * scale, // up is positive pitch
    roll: (nx - 0.5) * scale,
  };
}

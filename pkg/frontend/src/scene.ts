/** Canvas rendering of the teleoperation scene.
 *
 * Pure functions over a minimal 2D-context interface so the drawing logic is
 * testable without a browser.  Red arrow: operator command x_vd.  Blue arrow:
 * rendered force F.  Obstacles are super-ellipse outlines; the energy bar
 * shows the tank level against its cap.
 */

import { OBSTACLES, ROBOT_RADIUS_M, WORKSPACE, superEllipseOutline } from "./geometry.js";
import { StateMsg } from "./protocol.js";

export interface Ctx2D {
  canvas: { width: number; height: number };
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  globalAlpha: number;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  closePath(): void;
  stroke(): void;
  fill(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
}

export interface Viewport {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export function fitViewport(width: number, height: number): Viewport {
  const sx = width / (WORKSPACE.xMax - WORKSPACE.xMin);
  const sy = height / (WORKSPACE.yMax - WORKSPACE.yMin);
  const scale = Math.min(sx, sy);
  return {
    scale,
    offsetX: width / 2 - scale * (WORKSPACE.xMin + WORKSPACE.xMax) / 2,
    offsetY: height / 2 + scale * (WORKSPACE.yMin + WORKSPACE.yMax) / 2,
  };
}

export function worldToScreen(vp: Viewport, x: number, y: number): [number, number] {
  return [vp.offsetX + vp.scale * x, vp.offsetY - vp.scale * y];
}

function polyline(ctx: Ctx2D, vp: Viewport, pts: Array<[number, number]>, close: boolean): void {
  ctx.beginPath();
  pts.forEach(([x, y], i) => {
    const [sx, sy] = worldToScreen(vp, x, y);
    if (i === 0) ctx.moveTo(sx, sy);
    else ctx.lineTo(sx, sy);
  });
  if (close) ctx.closePath();
}

export function drawArrow(
  ctx: Ctx2D,
  vp: Viewport,
  fromWorld: [number, number],
  vec: [number, number],
  scale: number,
  color: string
): boolean {
  const mag = Math.hypot(vec[0], vec[1]);
  if (mag < 1e-6) return false; // zero vectors draw nothing
  const tip: [number, number] = [fromWorld[0] + vec[0] * scale, fromWorld[1] + vec[1] * scale];
  const [x0, y0] = worldToScreen(vp, fromWorld[0], fromWorld[1]);
  const [x1, y1] = worldToScreen(vp, tip[0], tip[1]);
  ctx.strokeStyle = color;
  ctx.fillStyle = color;
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(x0, y0);
  ctx.lineTo(x1, y1);
  ctx.stroke();
  const angle = Math.atan2(y1 - y0, x1 - x0);
  const head = 8;
  ctx.beginPath();
  ctx.moveTo(x1, y1);
  ctx.lineTo(x1 - head * Math.cos(angle - 0.4), y1 - head * Math.sin(angle - 0.4));
  ctx.lineTo(x1 - head * Math.cos(angle + 0.4), y1 - head * Math.sin(angle + 0.4));
  ctx.closePath();
  ctx.fill();
  return true;
}

export interface SceneOptions {
  commandArrowScale: number; // meters of arrow per m/s
  forceArrowScale: number; // meters of arrow per unit force
}

export const DEFAULT_SCENE: SceneOptions = { commandArrowScale: 0.9, forceArrowScale: 0.9 };

export function drawScene(
  ctx: Ctx2D,
  state: StateMsg | null,
  trail: Array<[number, number]>,
  frozen: boolean,
  opts: SceneOptions = DEFAULT_SCENE
): void {
  const { width, height } = ctx.canvas;
  const vp = fitViewport(width, height);
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, width, height);

  ctx.strokeStyle = "#d9a441";
  ctx.fillStyle = "rgba(217, 164, 65, 0.25)";
  ctx.lineWidth = 2;
  for (const shape of OBSTACLES) {
    polyline(ctx, vp, superEllipseOutline(shape), true);
    ctx.fill();
    ctx.stroke();
  }

  if (trail.length > 1) {
    ctx.strokeStyle = "#5fd3bc";
    ctx.lineWidth = 1.5;
    ctx.globalAlpha = 0.8;
    polyline(ctx, vp, trail, false);
    ctx.stroke();
    ctx.globalAlpha = 1.0;
  }

  if (state) {
    const px = state.p[0];
    const py = state.p.length > 1 ? state.p[1] : 0;
    const [sx, sy] = worldToScreen(vp, px, py);
    ctx.fillStyle = frozen ? "#777" : "#cfd8e3";
    ctx.beginPath();
    ctx.arc(sx, sy, Math.max(3, ROBOT_RADIUS_M * vp.scale), 0, 2 * Math.PI);
    ctx.fill();

    const cmd: [number, number] = [state.x_vd[0], state.x_vd.length > 1 ? state.x_vd[1] : 0];
    const force: [number, number] = [state.F[0], state.F.length > 1 ? state.F[1] : 0];
    drawArrow(ctx, vp, [px, py], cmd, opts.commandArrowScale, "#e2574c");
    drawArrow(ctx, vp, [px, py], force, opts.forceArrowScale, "#4c8fe2");
  }
}

export interface HudModel {
  tankLevel: number;
  tankCap: number;
  hMin: number;
  caseLabel: string;
  controller: string;
  connection: string;
  forceMagnitude: number;
}

export function hudModel(state: StateMsg | null, connection: string): HudModel {
  if (!state) {
    return {
      tankLevel: 0,
      tankCap: 0,
      hMin: NaN,
      caseLabel: "-",
      controller: "-",
      connection,
      forceMagnitude: 0,
    };
  }
  return {
    tankLevel: state.E,
    tankCap: state.config.e_max,
    hMin: state.h_min,
    caseLabel: state.case,
    controller: state.config.controller,
    connection,
    forceMagnitude: Math.hypot(...state.F),
  };
}

export function drawHud(ctx: Ctx2D, hud: HudModel): void {
  const { width } = ctx.canvas;
  const barW = 160;
  const barH = 12;
  const x = width - barW - 16;
  const y = 16;
  ctx.strokeStyle = "#cfd8e3";
  ctx.lineWidth = 1;
  ctx.strokeRect(x, y, barW, barH);
  const frac = hud.tankCap > 0 ? Math.min(1, Math.max(0, hud.tankLevel / hud.tankCap)) : 0;
  ctx.fillStyle = "#5fd3bc";
  ctx.fillRect(x + 1, y + 1, (barW - 2) * frac, barH - 2);
  ctx.fillStyle = "#cfd8e3";
  ctx.font = "12px system-ui, sans-serif";
  ctx.fillText(`E ${hud.tankLevel.toFixed(3)} / ${hud.tankCap.toFixed(2)}`, x, y + barH + 14);
  ctx.fillText(`h_min ${Number.isFinite(hud.hMin) ? hud.hMin.toFixed(3) : "-"}`, 16, 24);
  ctx.fillText(`case ${hud.caseLabel}`, 16, 42);
  ctx.fillText(`|F| ${hud.forceMagnitude.toFixed(3)}`, 16, 60);
  ctx.fillText(`${hud.controller} · ${hud.connection}`, 16, 78);
}

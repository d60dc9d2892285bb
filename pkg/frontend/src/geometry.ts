/** Scene geometry for the live scenario.
 *
 * The console speaks only the state-stream protocol, so the obstacle layout of
 * the served scenario (teleop-2d) ships with the UI.  Super-ellipse obstacles:
 * |dx/a|^(2a/r) + |dy/b|^(2b/r) = 1 bounds the unsafe region.
 */

export interface SuperEllipse {
  cx: number;
  cy: number;
  a: number;
  b: number;
  r: number;
}

export interface Workspace {
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
}

export const OBSTACLES: SuperEllipse[] = [
  { cx: 0.0, cy: 3.0, a: 4.5, b: 1.5, r: 0.5 },
  { cx: 0.0, cy: -3.0, a: 4.5, b: 1.5, r: 0.5 },
  { cx: 13.0, cy: 2.5, a: 4.5, b: 1.5, r: 0.5 },
];

export const WORKSPACE: Workspace = { xMin: -12, xMax: 20, yMin: -7, yMax: 7 };

export const ROBOT_RADIUS_M = 0.25;

/** Boundary polyline of a super-ellipse (n points, closed). */
export function superEllipseOutline(shape: SuperEllipse, n = 96): Array<[number, number]> {
  const pts: Array<[number, number]> = [];
  const ea = (2 * shape.a) / shape.r;
  const eb = (2 * shape.b) / shape.r;
  for (let i = 0; i <= n; i++) {
    const th = (2 * Math.PI * i) / n;
    const c = Math.cos(th);
    const s = Math.sin(th);
    // |x/a|^ea = cos^2 th and |y/b|^eb = sin^2 th sum to 1 on the boundary
    const x = shape.cx + shape.a * Math.sign(c) * Math.pow(Math.abs(c), 2 / ea);
    const y = shape.cy + shape.b * Math.sign(s) * Math.pow(Math.abs(s), 2 / eb);
    pts.push([x, y]);
  }
  return pts;
}

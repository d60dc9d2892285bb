/** Wire protocol for the teleoperation websocket.
 *
 * Newline-delimited JSON, one message per frame.  The server streams `state`
 * messages; the client sends `stylus`, `param`, `mode`, and `reset`.  Unknown
 * inbound types surface as `warning` frames.
 */

export interface ConfigEcho {
  controller: string;
  k: number;
  k_v: number;
  dt_ref: number;
  e_max: number;
  w_cbf: number;
  w_l2: number;
}

export interface StateMsg {
  type: "state";
  t: number;
  p: number[];
  v: number[];
  x_vd: number[];
  F: number[];
  E: number;
  h_min: number;
  case: string;
  ledger_margin: number;
  beta_extra: number;
  feasible: boolean;
  config: ConfigEcho;
}

export interface WarningMsg {
  type: "warning";
  message: string;
}

export type ServerMsg = StateMsg | WarningMsg;

export type ControllerName = "scf" | "jcf" | "scf_passivity" | "scf_no_l2";

export type ParamName = "k" | "k_v" | "dt_ref" | "e_max" | "w_cbf" | "w_l2";

/** Stylus-to-command gain applied server-side: 1 cm maps to 2 m/s. */
export const STYLUS_GAIN = 2.0;

export function parseServerMessages(frame: string): ServerMsg[] {
  const out: ServerMsg[] = [];
  for (const line of frame.split("\n")) {
    const text = line.trim();
    if (!text) continue;
    let msg: unknown;
    try {
      msg = JSON.parse(text);
    } catch {
      continue; // tolerate partial frames
    }
    if (isStateMsg(msg) || isWarningMsg(msg)) out.push(msg);
  }
  return out;
}

export function isStateMsg(msg: unknown): msg is StateMsg {
  const m = msg as StateMsg;
  return (
    !!m &&
    m.type === "state" &&
    typeof m.t === "number" &&
    Array.isArray(m.p) &&
    Array.isArray(m.F) &&
    typeof m.E === "number" &&
    !!m.config
  );
}

export function isWarningMsg(msg: unknown): msg is WarningMsg {
  const m = msg as WarningMsg;
  return !!m && m.type === "warning" && typeof m.message === "string";
}

export function stylusMsg(dispCm: number[]): string {
  return JSON.stringify({ type: "stylus", disp_cm: dispCm }) + "\n";
}

export function paramMsg(name: ParamName, value: number): string {
  return JSON.stringify({ type: "param", name, value }) + "\n";
}

export function modeMsg(controller: ControllerName): string {
  return JSON.stringify({ type: "mode", controller }) + "\n";
}

export function resetMsg(): string {
  return JSON.stringify({ type: "reset" }) + "\n";
}

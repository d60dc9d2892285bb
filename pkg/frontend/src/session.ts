/** Client-side session state: the server is authoritative, the UI only mirrors.
 *
 * Everything physics-related comes from state messages; reconnecting simply
 * resumes mirroring from the next message with no divergence.
 */

import { ConfigEcho, StateMsg } from "./protocol.js";
import { TrailBuffer } from "./trail.js";

export type ConnectionStatus = "connecting" | "open" | "closed";

export class UiSession {
  status: ConnectionStatus = "connecting";
  latest: StateMsg | null = null;
  lastWarning = "";
  droppedWhileDisconnected = 0;
  messagesSeen = 0;
  readonly trail = new TrailBuffer(3000);

  get config(): ConfigEcho | null {
    return this.latest ? this.latest.config : null;
  }

  applyState(msg: StateMsg): void {
    // A reset (time jumping backwards) invalidates the old trail.
    if (this.latest && msg.t < this.latest.t) this.trail.clear();
    this.latest = msg;
    this.messagesSeen += 1;
    if (msg.p.length >= 2) {
      this.trail.push(msg.p[0], msg.p[1]);
    } else if (msg.p.length === 1) {
      this.trail.push(msg.p[0], 0);
    }
  }

  applyWarning(message: string): void {
    this.lastWarning = message;
  }

  markConnecting(): void {
    this.status = "connecting";
  }

  markOpen(): void {
    this.status = "open";
  }

  markClosed(): void {
    this.status = "closed";
  }

  noteDroppedCommand(): void {
    this.droppedWhileDisconnected += 1;
  }
}

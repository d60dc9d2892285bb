/** Websocket client: auto-reconnect, stylus coalescing at <= 60 Hz.
 *
 * The socket constructor is injectable so the logic runs under tests with a
 * fake; the browser entry point passes the native WebSocket.
 */

import {
  ControllerName,
  ParamName,
  ServerMsg,
  modeMsg,
  paramMsg,
  parseServerMessages,
  resetMsg,
  stylusMsg,
} from "./protocol.js";

export interface SocketLike {
  readyState: number;
  send(data: string): void;
  close(): void;
  // event payload types stay loose so the native WebSocket is assignable
  onopen: ((ev?: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
  onclose: ((ev?: any) => void) | null;
  onerror: ((ev?: any) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

const OPEN = 1;
const SEND_INTERVAL_MS = 1000 / 60;

export interface TeleopClientEvents {
  onMessage?: (msg: ServerMsg) => void;
  onOpen?: () => void;
  onClose?: () => void;
  onDrop?: () => void;
}

export class TeleopClient {
  private readonly url: string;
  private readonly factory: SocketFactory;
  private readonly events: TeleopClientEvents;
  private socket: SocketLike | null = null;
  private reconnectDelayMs = 250;
  private pendingStylus: number[] | null = null;
  private lastStylusSentAt = -Infinity;
  private closedByUser = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(url: string, factory: SocketFactory, events: TeleopClientEvents = {}) {
    this.url = url;
    this.factory = factory;
    this.events = events;
  }

  connect(): void {
    this.closedByUser = false;
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.reconnectDelayMs = 250;
      this.events.onOpen?.();
    };
    socket.onmessage = (ev) => {
      for (const msg of parseServerMessages(ev.data)) this.events.onMessage?.(msg);
    };
    socket.onclose = () => {
      this.events.onClose?.();
      if (!this.closedByUser) this.scheduleReconnect();
    };
    socket.onerror = () => {
      // the close handler owns reconnection
    };
  }

  private scheduleReconnect(): void {
    if (this.reconnectTimer !== null) return;
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      this.connect();
    }, this.reconnectDelayMs);
    this.reconnectDelayMs = Math.min(this.reconnectDelayMs * 2, 2000);
  }

  close(): void {
    this.closedByUser = true;
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.socket?.close();
  }

  get isOpen(): boolean {
    return !!this.socket && this.socket.readyState === OPEN;
  }

  private sendRaw(data: string): boolean {
    if (!this.isOpen) {
      this.events.onDrop?.();
      return false;
    }
    this.socket!.send(data);
    return true;
  }

  /** Queue a stylus sample; coalesced down to <= 60 messages per second. */
  setStylus(dispCm: number[]): void {
    this.pendingStylus = dispCm.slice();
  }

  /** Flush a pending stylus sample if the rate budget allows; call every frame. */
  flushStylus(nowMs: number): boolean {
    if (this.pendingStylus === null) return false;
    if (nowMs - this.lastStylusSentAt < SEND_INTERVAL_MS) return false;
    const sent = this.sendRaw(stylusMsg(this.pendingStylus));
    if (sent) {
      this.lastStylusSentAt = nowMs;
      this.pendingStylus = null;
    }
    return sent;
  }

  sendParam(name: ParamName, value: number): boolean {
    return this.sendRaw(paramMsg(name, value));
  }

  sendMode(controller: ControllerName): boolean {
    return this.sendRaw(modeMsg(controller));
  }

  sendReset(): boolean {
    return this.sendRaw(resetMsg());
  }
}

/** Thin WebSocket wrapper: validates every inbound message into the view
 * model, reconnects with a fixed backoff, and drops outbound payloads while
 * the socket is anything but open.
 */

import { parseServerMessage } from "./protocol.js";
import type { ViewModel } from "./viewmodel.js";

const RECONNECT_DELAY_MS = 1000;

export class ConsoleClient {
  private ws: WebSocket | null = null;
  private stopped = false;

  constructor(
    private readonly url: string,
    private readonly vm: ViewModel,
    private readonly now: () => number = () => performance.now(),
  ) {}

  connect(): void {
    this.stopped = false;
    this.open();
  }

  stop(): void {
    this.stopped = true;
    this.ws?.close();
    this.ws = null;
  }

  /** Payloads come from the protocol builders; null means nothing to send. */
  send(payload: string | null): void {
    if (payload !== null && this.ws !== null && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(payload);
    }
  }

  private open(): void {
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.onopen = () => this.vm.noteOpen();
    ws.onmessage = (ev) => {
      if (typeof ev.data !== "string") return;
      const msg = parseServerMessage(ev.data);
      if (msg === null) return; // invalid input never reaches the view
      if (msg.type === "hello") this.vm.setRole(msg.role);
      else if (msg.type === "state") this.vm.applyState(msg, this.now());
      else this.vm.noteError(msg.reason);
    };
    ws.onclose = () => {
      this.vm.noteClosed();
      if (!this.stopped) setTimeout(() => this.open(), RECONNECT_DELAY_MS);
    };
    ws.onerror = () => ws.close();
  }
}

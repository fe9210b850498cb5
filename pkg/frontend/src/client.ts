/**
 * Console session: one transport, one ordered event queue, one view model.
 *
 * Every outgoing frame is validated by the codec before it is written, and a
 * copy of the exact wire line is kept so a recorded session can be replayed
 * through the frame validator afterwards.
 */

import {
  AckFrame,
  ErrFrame,
  Frame,
  FrameFormatError,
  nextId,
  parseFrameLine,
  serializeFrame,
  validateFrame,
} from "./frames.js";
import type { FrameTransport } from "./transport.js";
import { ViewModel } from "./viewmodel.js";

export interface ConsoleClientOptions {
  requestTimeoutMs?: number;
  onSnapshot?: () => void;
  onProtocolError?: (message: string) => void;
}

export class RequestFailed extends Error {
  constructor(public readonly err: ErrFrame) {
    super(`${err.payload.code}: ${err.payload.message}`);
  }
}

export class ConsoleClient {
  readonly view = new ViewModel();
  /** Exact wire lines this session has sent, in order. */
  readonly sentLines: string[] = [];

  private transport: FrameTransport | null = null;
  private pending = new Map<string, { resolve: (f: AckFrame) => void; reject: (e: Error) => void }>();
  private queue: Frame[] = [];
  private draining = false;
  private options: ConsoleClientOptions;

  constructor(options: ConsoleClientOptions = {}) {
    this.options = options;
  }

  /** Attach a connected transport and start consuming frames. */
  attach(transport: FrameTransport): void {
    this.transport = transport;
    this.view.setStatus("connected");
    transport.onLine((line) => this.ingest(line));
    transport.onClose(() => {
      this.view.setStatus("disconnected");
      for (const waiter of this.pending.values()) {
        waiter.reject(new Error("connection closed"));
      }
      this.pending.clear();
    });
  }

  close(): void {
    this.transport?.close();
  }

  /** Send one request frame and await its Ack; Err rejects with RequestFailed. */
  request(kind: Frame["kind"], payload: unknown): Promise<AckFrame> {
    const id = nextId();
    const frame = validateFrame({ id, kind, payload });
    const line = serializeFrame(frame);
    return new Promise((resolve, reject) => {
      if (this.transport === null) {
        reject(new Error("not connected"));
        return;
      }
      const timeoutMs = this.options.requestTimeoutMs ?? 10_000;
      const timer = setTimeout(() => {
        this.pending.delete(id);
        reject(new Error(`request ${id} (${kind}) timed out`));
      }, timeoutMs);
      this.pending.set(id, {
        resolve: (f) => {
          clearTimeout(timer);
          resolve(f);
        },
        reject: (e) => {
          clearTimeout(timer);
          reject(e);
        },
      });
      this.sentLines.push(line);
      this.transport.send(line);
    });
  }

  subscribe(on = true): Promise<AckFrame> {
    return this.request("Subscribe", { on });
  }

  applyPreset(name: string, heightCm = 15.0): Promise<AckFrame> {
    return this.request("LoadPreset", { name, height_cm: heightCm });
  }

  /** Send the view model's staged edits; no-op Ack when nothing is staged. */
  applyPendingTargets(): Promise<AckFrame> {
    const targets = this.view.takePendingTargets();
    return this.request("SetTarget", { targets });
  }

  overrideValve(actuatorId: string, supply: "Open" | "Closed", release: "Open" | "Closed"): Promise<AckFrame> {
    return this.request("OverrideValve", { actuator_id: actuatorId, supply, release });
  }

  moveActuator(actuatorId: string, xCm: number, yCm: number): Promise<AckFrame> {
    return this.request("MoveActuator", { actuator_id: actuatorId, x_cm: xCm, y_cm: yCm });
  }

  private ingest(line: string): void {
    let frame: Frame;
    try {
      frame = parseFrameLine(line);
    } catch (e) {
      if (e instanceof FrameFormatError) {
        this.options.onProtocolError?.(e.message);
        return;
      }
      throw e;
    }
    this.queue.push(frame);
    this.drain();
  }

  private drain(): void {
    if (this.draining) return;
    this.draining = true;
    try {
      let frame: Frame | undefined;
      while ((frame = this.queue.shift()) !== undefined) {
        this.dispatch(frame);
      }
    } finally {
      this.draining = false;
    }
  }

  private dispatch(frame: Frame): void {
    if (frame.kind === "StateSnapshot") {
      if (this.view.applySnapshot(frame.payload)) {
        this.options.onSnapshot?.();
      }
      return;
    }
    if (frame.kind === "Ack" || frame.kind === "Err") {
      const waiter = this.pending.get(frame.id);
      if (waiter === undefined) return; // response to someone else's request
      this.pending.delete(frame.id);
      if (frame.kind === "Ack") {
        waiter.resolve(frame);
      } else {
        this.view.lastError = `${frame.payload.code}: ${frame.payload.message}`;
        waiter.reject(new RequestFailed(frame));
      }
    }
  }
}

/**
 * Keep a client connected: build a transport, attach, and rebuild after a
 * drop. Used by the browser entry point; tests attach transports directly.
 */
export async function connectWithRetry(
  client: ConsoleClient,
  makeTransport: () => Promise<FrameTransport>,
  retryMs = 1000,
): Promise<void> {
  client.view.setStatus("connecting");
  try {
    const transport = await makeTransport();
    client.attach(transport);
    transport.onClose(() => {
      client.view.setStatus("disconnected");
      setTimeout(() => void connectWithRetry(client, makeTransport, retryMs), retryMs);
    });
    await client.subscribe(true);
  } catch {
    client.view.setStatus("disconnected");
    setTimeout(() => void connectWithRetry(client, makeTransport, retryMs), retryMs);
  }
}

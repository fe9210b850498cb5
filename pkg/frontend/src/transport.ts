/**
 * Line-oriented transports for the frame protocol.
 *
 * The browser console uses the WebSocket endpoint (`/ws`); the scripted test
 * harness uses the plain TCP endpoint via node:net. Both carry exactly the
 * same newline-delimited JSON frames.
 */

export interface FrameTransport {
  /** Queue one wire line (without trailing newline). */
  send(line: string): void;
  onLine(cb: (line: string) => void): void;
  /** Close callbacks accumulate; each registered callback fires once. */
  onClose(cb: () => void): void;
  close(): void;
}

/** Browser transport over the service's WebSocket endpoint. */
export class WsTransport implements FrameTransport {
  private ws: WebSocket;
  private lineCb: ((line: string) => void) | null = null;
  private closeCbs: (() => void)[] = [];
  private closed = false;

  constructor(url: string, onOpen?: () => void) {
    this.ws = new WebSocket(url);
    this.ws.onopen = () => onOpen?.();
    this.ws.onmessage = (ev) => this.lineCb?.(String(ev.data));
    this.ws.onclose = () => this.fireClose();
    this.ws.onerror = () => this.fireClose();
  }

  private fireClose(): void {
    if (this.closed) return;
    this.closed = true;
    for (const cb of this.closeCbs) cb();
  }

  send(line: string): void {
    this.ws.send(line);
  }
  onLine(cb: (line: string) => void): void {
    this.lineCb = cb;
  }
  onClose(cb: () => void): void {
    this.closeCbs.push(cb);
  }
  close(): void {
    this.ws.close();
  }
}

/** Node transport over the service's TCP endpoint (tests, headless scripts). */
export class TcpTransport implements FrameTransport {
  private socket: import("node:net").Socket;
  private buffer = "";
  private lineCb: ((line: string) => void) | null = null;
  private closeCbs: (() => void)[] = [];
  private closed = false;

  private constructor(socket: import("node:net").Socket) {
    this.socket = socket;
    socket.setEncoding("utf-8");
    socket.on("data", (chunk: string) => {
      this.buffer += chunk;
      let idx: number;
      while ((idx = this.buffer.indexOf("\n")) >= 0) {
        const line = this.buffer.slice(0, idx);
        this.buffer = this.buffer.slice(idx + 1);
        if (line.trim().length > 0) this.lineCb?.(line);
      }
    });
    socket.on("close", () => this.fireClose());
    socket.on("error", () => this.fireClose());
  }

  private fireClose(): void {
    if (this.closed) return;
    this.closed = true;
    for (const cb of this.closeCbs) cb();
  }

  static async connect(host: string, port: number): Promise<TcpTransport> {
    const net = await import("node:net");
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port }, () => resolve(new TcpTransport(socket)));
      socket.once("error", reject);
    });
  }

  send(line: string): void {
    this.socket.write(line + "\n");
  }
  onLine(cb: (line: string) => void): void {
    this.lineCb = cb;
  }
  onClose(cb: () => void): void {
    this.closeCbs.push(cb);
  }
  close(): void {
    this.socket.destroy();
  }
}

/**
 * Scripted end-to-end session against a live 5x5 service.
 *
 * Starts the Python service as a subprocess, drives it through the same
 * client code the browser uses (over the TCP endpoint, which carries the
 * identical frames as the WebSocket endpoint), and afterwards replays every
 * frame the console sent through the frame validator.
 */

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { createConnection } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ConsoleClient, RequestFailed } from "../src/client.js";
import { parseFrameLine } from "../src/frames.js";
import { TcpTransport } from "../src/transport.js";

const PORT = 7000 + Math.floor(Math.random() * 2000);
let service: ChildProcess;
let layoutPath: string;

function makeLayout(): string {
  const dir = mkdtempSync(join(tmpdir(), "lifttiles-console-"));
  const path = join(dir, "layout.json");
  const script =
    "from lifttiles.model import ActuatorSpec, build_grid_layout, layout_to_json\n" +
    "import sys\n" +
    "sys.stdout.write(layout_to_json(build_grid_layout(5, 5, ActuatorSpec(), 30.0)))\n";
  writeFileSync(path, execFileSync("python3", ["-c", script], { encoding: "utf-8" }));
  return path;
}

function waitForPort(port: number, timeoutMs = 15000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  return new Promise((resolve, reject) => {
    const attempt = () => {
      const socket = createConnection({ host: "127.0.0.1", port }, () => {
        socket.destroy();
        resolve();
      });
      socket.on("error", () => {
        socket.destroy();
        if (Date.now() > deadline) reject(new Error(`port ${port} never opened`));
        else setTimeout(attempt, 100);
      });
    };
    attempt();
  });
}

async function connectClient(): Promise<ConsoleClient> {
  const client = new ConsoleClient({ requestTimeoutMs: 15000 });
  client.attach(await TcpTransport.connect("127.0.0.1", PORT));
  return client;
}

/** Resolve once the view model satisfies `check` on some future snapshot. */
function onSnapshotUntil(
  client: ConsoleClient,
  check: () => boolean,
  timeoutMs: number,
): Promise<void> {
  return new Promise((resolve, reject) => {
    const deadline = Date.now() + timeoutMs;
    const poll = setInterval(() => {
      if (check()) {
        clearInterval(poll);
        resolve();
      } else if (Date.now() > deadline) {
        clearInterval(poll);
        reject(new Error("timed out waiting for snapshot condition"));
      }
    }, 25);
  });
}

beforeAll(async () => {
  layoutPath = makeLayout();
  // tick-ms 1 runs the sim ~33x realtime so settling takes seconds, not minutes
  service = spawn(
    "python3",
    ["-m", "lifttiles.cli", "run", "--layout", layoutPath, "--listen", `127.0.0.1:${PORT}`,
     "--http", "", "--sensor-sigma", "0", "--tick-ms", "1"],
    { stdio: ["ignore", "ignore", "pipe"] },
  );
  await waitForPort(PORT);
}, 30000);

afterAll(() => {
  service?.kill("SIGINT");
});

describe("console session against a live 5x5 service", () => {
  it("applies the Chair preset and watches progress reach 100%", async () => {
    const client = await connectClient();
    try {
      const state = await client.request("GetState", {});
      const snap = state.payload.result.snapshot as { actuators: unknown[] };
      expect(snap.actuators).toHaveLength(25);

      await client.subscribe(true);
      await client.applyPreset("Chair");

      await onSnapshotUntil(client, () => client.view.progress() === 1, 30000);
      expect(client.view.progress()).toBe(1);
      expect(client.view.latest?.actuators.some((a) => (a.target_cm ?? 0) > 15)).toBe(true);

      // every frame this session put on the wire validates as a protocol frame
      expect(client.sentLines.length).toBeGreaterThan(0);
      for (const line of client.sentLines) {
        expect(() => parseFrameLine(line)).not.toThrow();
      }
    } finally {
      client.close();
    }
  }, 60000);

  it("override drops a raised tile live; server errors surface verbatim", async () => {
    const client = await connectClient();
    try {
      await client.subscribe(true);
      await client.request("SetTarget", { targets: { a0_0: 120 } });
      await onSnapshotUntil(
        client,
        () => (client.view.latest?.actuators.find((a) => a.id === "a0_0")?.height_cm ?? 0) > 60,
        30000,
      );

      await client.overrideValve("a0_0", "Closed", "Open");
      await onSnapshotUntil(
        client,
        () => {
          const a = client.view.latest?.actuators.find((r) => r.id === "a0_0");
          return a !== undefined && a.overridden && a.height_cm < 40;
        },
        30000,
      );

      // moving onto an occupied cell is rejected server-side with Overlap
      await expect(client.moveActuator("a0_0", 30, 0)).rejects.toThrow(RequestFailed);
      expect(client.view.lastError).toMatch(/Overlap/);

      // out-of-range edits never reach the wire
      const before = client.sentLines.length;
      expect(client.view.editTarget("a0_0", 200)).not.toBeNull();
      expect(client.sentLines.length).toBe(before);

      for (const line of client.sentLines) {
        expect(() => parseFrameLine(line)).not.toThrow();
      }
    } finally {
      client.close();
    }
  }, 60000);

  it("shows a disconnect and keeps the last rendered heights", async () => {
    const client = await connectClient();
    await client.subscribe(true);
    await onSnapshotUntil(client, () => client.view.latest !== null, 15000);
    client.close();
    await onSnapshotUntil(client, () => client.view.status === "disconnected", 5000);
    const frozen = client.view.tiles().map((t) => t.heightCm);
    await new Promise((r) => setTimeout(r, 300)); // no frames can arrive now
    expect(client.view.tiles().map((t) => t.heightCm)).toEqual(frozen);
    expect(client.view.tiles().every((t) => t.stale)).toBe(true);
  }, 30000);
});

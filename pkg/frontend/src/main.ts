/**
 * Browser entry point. Connects to the service's WebSocket endpoint and wires
 * the grid view, preset buttons, target editor, and override controls.
 */

import { ConsoleClient, connectWithRetry, RequestFailed } from "./client.js";
import { renderGrid, statusLine } from "./render.js";
import { WsTransport } from "./transport.js";

const PRESETS = ["Flat", "Chair", "Table", "Bed", "ArrowWall", "MeetingPartition"];

function byId(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing element #${id}`);
  return el;
}

function surface(status: HTMLElement, e: unknown): void {
  status.textContent = e instanceof RequestFailed ? e.message : String(e);
}

export function startConsole(): void {
  const params = new URLSearchParams(window.location.search);
  const wsUrl = params.get("ws") ?? `ws://${window.location.hostname}:8701/ws`;

  const grid = byId("grid");
  const status = byId("status");
  const targetInput = byId("target") as HTMLInputElement;

  const client = new ConsoleClient({
    onSnapshot: () => {
      renderGrid(grid, client.view, { onSelect: (id) => client.view.select(id) });
      status.textContent = statusLine(client.view);
    },
  });

  const presetBar = byId("presets");
  for (const name of PRESETS) {
    const button = document.createElement("button");
    button.textContent = name;
    button.addEventListener("click", () => {
      client.applyPreset(name).catch((e) => surface(status, e));
    });
    presetBar.appendChild(button);
  }

  byId("set-target").addEventListener("click", () => {
    const selected = client.view.selectedId;
    if (selected === null) {
      status.textContent = "select a tile first";
      return;
    }
    const error = client.view.editTarget(selected, Number(targetInput.value));
    if (error !== null) {
      status.textContent = error; // rejected client-side, nothing sent
      return;
    }
    client.applyPendingTargets().catch((e) => surface(status, e));
  });

  byId("release").addEventListener("click", () => {
    const selected = client.view.selectedId;
    if (selected === null) return;
    client.overrideValve(selected, "Closed", "Open").catch((e) => surface(status, e));
  });

  byId("hold").addEventListener("click", () => {
    const selected = client.view.selectedId;
    if (selected === null) return;
    client.overrideValve(selected, "Closed", "Closed").catch((e) => surface(status, e));
  });

  void connectWithRetry(client, async () => {
    return new Promise((resolve) => {
      const transport: WsTransport = new WsTransport(wsUrl, () => resolve(transport));
    });
  });
}

startConsole();

/**
 * DOM renderer: 2-D top-down tile grid with numeric height labels.
 *
 * The layout geometry (rows/columns) is inferred from the actuator ids the
 * grid builder assigns ("a{row}_{col}"); tiles without a grid id fall back to
 * a single row. All visual state comes from the view model's tiles().
 */

import type { TileView } from "./viewmodel.js";
import type { ViewModel } from "./viewmodel.js";

const GRID_ID = /^a(\d+)_(\d+)$/;

export interface PlacedTile extends TileView {
  row: number;
  col: number;
}

/** Assign grid coordinates to tiles; pure, used by tests without a DOM. */
export function placeTiles(tiles: TileView[]): PlacedTile[] {
  return tiles.map((tile, i) => {
    const m = GRID_ID.exec(tile.id);
    return m !== null
      ? { ...tile, row: Number(m[1]), col: Number(m[2]) }
      : { ...tile, row: 0, col: i };
  });
}

function shadeColor(shade: number): string {
  // dark = collapsed, light = fully extended
  const level = Math.round(40 + 180 * Math.min(1, Math.max(0, shade)));
  return `rgb(${level}, ${level}, ${Math.min(255, level + 30)})`;
}

export interface RenderCallbacks {
  onSelect: (id: string) => void;
}

/** Replace the grid element's contents from the current view model. */
export function renderGrid(root: HTMLElement, view: ViewModel, callbacks: RenderCallbacks): void {
  const placed = placeTiles(view.tiles());
  const rows = placed.length > 0 ? Math.max(...placed.map((t) => t.row)) + 1 : 0;
  const cols = placed.length > 0 ? Math.max(...placed.map((t) => t.col)) + 1 : 0;

  root.textContent = "";
  root.style.display = "grid";
  root.style.gridTemplateColumns = `repeat(${cols}, 72px)`;
  root.style.gridTemplateRows = `repeat(${rows}, 72px)`;
  root.style.gap = "4px";

  for (const tile of placed) {
    const el = document.createElement("div");
    el.className = "tile";
    el.dataset.id = tile.id;
    el.style.gridRow = String(tile.row + 1);
    el.style.gridColumn = String(tile.col + 1);
    el.style.background = shadeColor(tile.shade);
    el.style.border = tile.selected ? "3px solid #e67e22" : "1px solid #555";
    el.style.opacity = tile.stale ? "0.5" : "1";

    const label = document.createElement("span");
    label.textContent = tile.label;
    el.appendChild(label);

    const badges: string[] = [];
    if (tile.overridden) badges.push("OVR");
    if (tile.fault !== "None") badges.push(tile.fault.toUpperCase());
    if (tile.stale) badges.push("STALE");
    if (badges.length > 0) {
      const badge = document.createElement("small");
      badge.textContent = badges.join(" ");
      el.appendChild(badge);
    }

    el.addEventListener("click", () => callbacks.onSelect(tile.id));
    root.appendChild(el);
  }
}

/** Status line text, including the last server error if any. */
export function statusLine(view: ViewModel): string {
  const pct = Math.round(view.progress() * 100);
  const base = `${view.status} | settle ${pct}%`;
  return view.lastError !== null ? `${base} | ${view.lastError}` : base;
}

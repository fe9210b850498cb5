/**
 * Console view model.
 *
 * Rendered heights always come from the latest StateSnapshot — there is no
 * client-side physics. Pending target edits live here until the operator
 * applies them, and are bounds-checked before anything is sent.
 */

import type { ActuatorRecord, SnapshotPayload } from "./frames.js";

export const MIN_HEIGHT_CM = 15;
export const MAX_HEIGHT_CM = 150;
export const DEFAULT_DEADBAND_CM = 2.0;

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export interface TileView {
  id: string;
  heightCm: number;
  targetCm: number | null;
  /** 0 fully collapsed .. 1 fully extended, for shading. */
  shade: number;
  label: string;
  fault: string;
  overridden: boolean;
  selected: boolean;
  /** True when the view is showing data from a dropped connection. */
  stale: boolean;
}

export class ViewModel {
  status: ConnectionStatus = "connecting";
  latest: SnapshotPayload | null = null;
  selectedId: string | null = null;
  pendingTargets = new Map<string, number>();
  lastError: string | null = null;

  /** Accept a snapshot; out-of-order sequence numbers are dropped. */
  applySnapshot(snapshot: SnapshotPayload): boolean {
    if (this.latest !== null && snapshot.seq <= this.latest.seq) {
      return false;
    }
    this.latest = snapshot;
    return true;
  }

  setStatus(status: ConnectionStatus): void {
    this.status = status;
  }

  select(id: string | null): void {
    this.selectedId = id;
  }

  /**
   * Stage a target edit. Returns an error string (and stages nothing) when
   * the value is outside the physical stroke.
   */
  editTarget(id: string, heightCm: number): string | null {
    if (!Number.isFinite(heightCm) || heightCm < MIN_HEIGHT_CM || heightCm > MAX_HEIGHT_CM) {
      return `target must be between ${MIN_HEIGHT_CM} and ${MAX_HEIGHT_CM} cm`;
    }
    this.pendingTargets.set(id, heightCm);
    return null;
  }

  /** Drain staged edits for sending as one SetTarget payload. */
  takePendingTargets(): Record<string, number> {
    const out = Object.fromEntries(this.pendingTargets);
    this.pendingTargets.clear();
    return out;
  }

  /**
   * Fraction of actuators with a target that are inside the deadband.
   * 0 when nothing has a target yet.
   */
  progress(deadbandCm: number = DEFAULT_DEADBAND_CM): number {
    if (this.latest === null) return 0;
    const targeted = this.latest.actuators.filter((a) => a.target_cm !== null);
    if (targeted.length === 0) return 0;
    const inside = targeted.filter(
      (a) => Math.abs(a.height_cm - (a.target_cm as number)) <= deadbandCm,
    );
    return inside.length / targeted.length;
  }

  /** Tile view records for the renderer; order follows the snapshot. */
  tiles(): TileView[] {
    if (this.latest === null) return [];
    const stale = this.status !== "connected";
    return this.latest.actuators.map((a: ActuatorRecord) => ({
      id: a.id,
      heightCm: a.height_cm,
      targetCm: a.target_cm,
      shade: (a.height_cm - MIN_HEIGHT_CM) / (MAX_HEIGHT_CM - MIN_HEIGHT_CM),
      label: `${a.height_cm.toFixed(1)} cm`,
      fault: a.fault,
      overridden: a.overridden,
      selected: a.id === this.selectedId,
      stale,
    }));
  }
}

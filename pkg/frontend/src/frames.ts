/**
 * Wire frame codec for the lifttiles control service.
 *
 * One JSON object per line: {"id": ..., "kind": ..., "payload": ...}.
 * The console must only ever put frames on the wire that this module has
 * validated; incoming lines are validated before they reach the view model.
 */

export const MAX_FRAME_BYTES = 1 << 20;

export type ValveState = "Open" | "Closed";
export type FaultState = "None" | "Buckled" | "Stalled";
export type ErrorCode =
  | "BadId"
  | "OutOfRange"
  | "Overlap"
  | "Stale"
  | "TooLarge"
  | "Malformed";

export interface ActuatorRecord {
  id: string;
  height_cm: number;
  supply: ValveState;
  release: ValveState;
  fault: FaultState;
  load_kg: number;
  target_cm: number | null;
  overridden: boolean;
}

export interface SnapshotPayload {
  seq: number;
  t_s: number;
  actuators: ActuatorRecord[];
}

export interface SetTargetFrame {
  id: string;
  kind: "SetTarget";
  payload: { targets: Record<string, number> };
}
export interface LoadLayoutFrame {
  id: string;
  kind: "LoadLayout";
  payload: { layout: Record<string, unknown> };
}
export interface LoadPresetFrame {
  id: string;
  kind: "LoadPreset";
  payload: { name: string; height_cm: number };
}
export interface OverrideValveFrame {
  id: string;
  kind: "OverrideValve";
  payload: { actuator_id: string; supply: ValveState; release: ValveState };
}
export interface MoveActuatorFrame {
  id: string;
  kind: "MoveActuator";
  payload: {
    actuator_id: string;
    x_cm: number;
    y_cm: number;
    orientation?: string;
    grid_index?: [number, number] | null;
  };
}
export interface SetLoadFrame {
  id: string;
  kind: "SetLoad";
  payload: { actuator_id: string; load_kg: number };
}
export interface GetStateFrame {
  id: string;
  kind: "GetState";
  payload: Record<string, never>;
}
export interface PlanFrame {
  id: string;
  kind: "Plan";
  payload: { targets: Record<string, number>; from_heights?: Record<string, number> | null };
}
export interface SubscribeFrame {
  id: string;
  kind: "Subscribe";
  payload: { on: boolean };
}
export interface StateSnapshotFrame {
  id: string;
  kind: "StateSnapshot";
  payload: SnapshotPayload;
}
export interface AckFrame {
  id: string;
  kind: "Ack";
  payload: { result: Record<string, unknown> };
}
export interface ErrFrame {
  id: string;
  kind: "Err";
  payload: { code: ErrorCode; message: string };
}

export type Frame =
  | SetTargetFrame
  | LoadLayoutFrame
  | LoadPresetFrame
  | OverrideValveFrame
  | MoveActuatorFrame
  | SetLoadFrame
  | GetStateFrame
  | PlanFrame
  | SubscribeFrame
  | StateSnapshotFrame
  | AckFrame
  | ErrFrame;

export const REQUEST_KINDS = [
  "SetTarget",
  "LoadLayout",
  "LoadPreset",
  "OverrideValve",
  "MoveActuator",
  "SetLoad",
  "GetState",
  "Plan",
  "Subscribe",
] as const;

export const ALL_KINDS = [...REQUEST_KINDS, "StateSnapshot", "Ack", "Err"] as const;

export class FrameFormatError extends Error {}

const VALVES = new Set<string>(["Open", "Closed"]);
const FAULTS = new Set<string>(["None", "Buckled", "Stalled"]);
const CODES = new Set<string>(["BadId", "OutOfRange", "Overlap", "Stale", "TooLarge", "Malformed"]);

function fail(msg: string): never {
  throw new FrameFormatError(msg);
}

function isRecord(v: unknown): v is Record<string, unknown> {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

function asNumberMap(v: unknown, where: string): Record<string, number> {
  if (!isRecord(v)) fail(`${where} must be an object of numbers`);
  for (const [k, n] of Object.entries(v)) {
    if (typeof n !== "number" || !Number.isFinite(n)) fail(`${where}.${k} must be a finite number`);
  }
  return v as Record<string, number>;
}

function asString(v: unknown, where: string): string {
  if (typeof v !== "string") fail(`${where} must be a string`);
  return v;
}

function asNumber(v: unknown, where: string): number {
  if (typeof v !== "number" || !Number.isFinite(v)) fail(`${where} must be a finite number`);
  return v;
}

function asValve(v: unknown, where: string): ValveState {
  const s = asString(v, where);
  if (!VALVES.has(s)) fail(`${where} must be Open or Closed`);
  return s as ValveState;
}

function validateActuatorRecord(v: unknown, where: string): ActuatorRecord {
  if (!isRecord(v)) fail(`${where} must be an object`);
  const fault = asString(v.fault, `${where}.fault`);
  if (!FAULTS.has(fault)) fail(`${where}.fault unknown`);
  const target = v.target_cm;
  if (target !== null && typeof target !== "number") fail(`${where}.target_cm must be number or null`);
  return {
    id: asString(v.id, `${where}.id`),
    height_cm: asNumber(v.height_cm, `${where}.height_cm`),
    supply: asValve(v.supply, `${where}.supply`),
    release: asValve(v.release, `${where}.release`),
    fault: fault as FaultState,
    load_kg: asNumber(v.load_kg, `${where}.load_kg`),
    target_cm: target as number | null,
    overridden: v.overridden === true,
  };
}

/** Validate a decoded JSON document as a protocol frame. Throws FrameFormatError. */
export function validateFrame(doc: unknown): Frame {
  if (!isRecord(doc)) fail("frame must be a JSON object");
  const id = asString(doc.id ?? fail("frame missing id"), "id");
  const kind = asString(doc.kind ?? fail("frame missing kind"), "kind");
  const payload = doc.payload;
  if (!isRecord(payload)) fail("frame missing payload object");

  switch (kind) {
    case "SetTarget":
      return { id, kind, payload: { targets: asNumberMap(payload.targets, "targets") } };
    case "LoadLayout":
      if (!isRecord(payload.layout)) fail("layout must be an object");
      return { id, kind, payload: { layout: payload.layout } };
    case "LoadPreset":
      return {
        id,
        kind,
        payload: {
          name: asString(payload.name, "name"),
          height_cm: payload.height_cm === undefined ? 15.0 : asNumber(payload.height_cm, "height_cm"),
        },
      };
    case "OverrideValve":
      return {
        id,
        kind,
        payload: {
          actuator_id: asString(payload.actuator_id, "actuator_id"),
          supply: asValve(payload.supply, "supply"),
          release: asValve(payload.release, "release"),
        },
      };
    case "MoveActuator": {
      const out: MoveActuatorFrame["payload"] = {
        actuator_id: asString(payload.actuator_id, "actuator_id"),
        x_cm: asNumber(payload.x_cm, "x_cm"),
        y_cm: asNumber(payload.y_cm, "y_cm"),
      };
      if (payload.orientation !== undefined && payload.orientation !== null) {
        out.orientation = asString(payload.orientation, "orientation");
      }
      if (payload.grid_index !== undefined) {
        out.grid_index = payload.grid_index as [number, number] | null;
      }
      return { id, kind, payload: out };
    }
    case "SetLoad":
      return {
        id,
        kind,
        payload: {
          actuator_id: asString(payload.actuator_id, "actuator_id"),
          load_kg: asNumber(payload.load_kg, "load_kg"),
        },
      };
    case "GetState":
      return { id, kind, payload: {} };
    case "Plan": {
      const out: PlanFrame["payload"] = { targets: asNumberMap(payload.targets, "targets") };
      if (payload.from_heights !== undefined && payload.from_heights !== null) {
        out.from_heights = asNumberMap(payload.from_heights, "from_heights");
      }
      return { id, kind, payload: out };
    }
    case "Subscribe":
      if (typeof payload.on !== "boolean") fail("on must be a boolean");
      return { id, kind, payload: { on: payload.on } };
    case "StateSnapshot": {
      const actuators = payload.actuators;
      if (!Array.isArray(actuators)) fail("actuators must be an array");
      return {
        id,
        kind,
        payload: {
          seq: asNumber(payload.seq, "seq"),
          t_s: asNumber(payload.t_s, "t_s"),
          actuators: actuators.map((a, i) => validateActuatorRecord(a, `actuators[${i}]`)),
        },
      };
    }
    case "Ack":
      if (!isRecord(payload.result)) fail("result must be an object");
      return { id, kind, payload: { result: payload.result } };
    case "Err": {
      const code = asString(payload.code, "code");
      if (!CODES.has(code)) fail(`unknown error code ${code}`);
      return {
        id,
        kind,
        payload: { code: code as ErrorCode, message: asString(payload.message, "message") },
      };
    }
    default:
      fail(`unknown frame kind ${kind}`);
  }
}

/** Parse one wire line into a validated frame. */
export function parseFrameLine(line: string): Frame {
  if (new TextEncoder().encode(line).length > MAX_FRAME_BYTES) {
    fail("frame exceeds maximum size");
  }
  let doc: unknown;
  try {
    doc = JSON.parse(line);
  } catch (e) {
    fail(`invalid JSON: ${(e as Error).message}`);
  }
  return validateFrame(doc);
}

/** Serialize with the canonical top-level key order (id, kind, payload). */
export function serializeFrame(frame: Frame): string {
  return JSON.stringify({ id: frame.id, kind: frame.kind, payload: frame.payload });
}

let counter = 0;

/** Fresh request id, unique within this console session. */
export function nextId(prefix = "ui"): string {
  counter += 1;
  return `${prefix}-${counter}`;
}

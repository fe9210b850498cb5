import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";
import { describe, expect, it } from "vitest";

import {
  ALL_KINDS,
  FrameFormatError,
  parseFrameLine,
  serializeFrame,
  validateFrame,
} from "../src/frames.js";

const here = dirname(fileURLToPath(import.meta.url));
const GOLDENS = join(here, "..", "..", "tests", "goldens", "frames.jsonl");

describe("golden frames", () => {
  const lines = readFileSync(GOLDENS, "utf-8").trim().split("\n");

  it("covers every frame kind", () => {
    const kinds = new Set(lines.map((l) => parseFrameLine(l).kind));
    expect(kinds).toEqual(new Set(ALL_KINDS));
  });

  it("round-trips every golden line semantically", () => {
    for (const line of lines) {
      const frame = parseFrameLine(line);
      const again = parseFrameLine(serializeFrame(frame));
      expect(again).toEqual(frame);
      // serialized form still matches the raw document field-for-field
      expect(JSON.parse(serializeFrame(frame))).toEqual(JSON.parse(line));
    }
  });

  it("keeps the canonical top-level key order", () => {
    for (const line of lines) {
      const keys = Object.keys(JSON.parse(serializeFrame(parseFrameLine(line))));
      expect(keys).toEqual(["id", "kind", "payload"]);
    }
  });
});

describe("validation", () => {
  it("rejects unknown kinds", () => {
    expect(() => validateFrame({ id: "x", kind: "Teleport", payload: {} })).toThrow(
      FrameFormatError,
    );
  });

  it("rejects non-numeric targets", () => {
    expect(() =>
      validateFrame({ id: "x", kind: "SetTarget", payload: { targets: { a0_0: "high" } } }),
    ).toThrow(FrameFormatError);
  });

  it("rejects invalid valve states and error codes", () => {
    expect(() =>
      validateFrame({
        id: "x",
        kind: "OverrideValve",
        payload: { actuator_id: "a0_0", supply: "Ajar", release: "Closed" },
      }),
    ).toThrow(FrameFormatError);
    expect(() =>
      validateFrame({ id: "x", kind: "Err", payload: { code: "Oops", message: "m" } }),
    ).toThrow(FrameFormatError);
  });

  it("rejects bad JSON and oversized lines", () => {
    expect(() => parseFrameLine("{nope")).toThrow(/invalid JSON/);
    const big = JSON.stringify({
      id: "x",
      kind: "SetTarget",
      payload: { targets: { ["a".repeat(1 << 21)]: 1 } },
    });
    expect(() => parseFrameLine(big)).toThrow(/maximum size/);
  });

  it("accepts a snapshot with a null target", () => {
    const frame = validateFrame({
      id: "",
      kind: "StateSnapshot",
      payload: {
        seq: 3,
        t_s: 0.1,
        actuators: [
          {
            id: "a0_0",
            height_cm: 15,
            supply: "Closed",
            release: "Closed",
            fault: "None",
            load_kg: 0,
            target_cm: null,
            overridden: false,
          },
        ],
      },
    });
    expect(frame.kind).toBe("StateSnapshot");
  });
});

import { readFileSync } from "node:fs";
import { resolve } from "node:path";

import { Machine, UserEvent } from "../src/machine.js";
import { parseCui, parseData, parseSc } from "../src/models.js";

const FIXTURES = resolve(import.meta.dirname, "fixtures");

export function fixtureJson(name: string): unknown {
  return JSON.parse(readFileSync(resolve(FIXTURES, name), "utf-8"));
}

export function fixtureLines(name: string): Record<string, unknown>[] {
  return readFileSync(resolve(FIXTURES, name), "utf-8")
    .split("\n")
    .filter((line) => line.trim() !== "")
    .map((line) => JSON.parse(line) as Record<string, unknown>);
}

export function fixtureMachine(clock?: () => number): Machine {
  let tick = 0;
  return new Machine(
    parseCui(fixtureJson("cui.json")),
    parseSc(fixtureJson("sc.json")),
    parseData(fixtureJson("data.json")),
    clock ?? (() => tick++),
  );
}

export function fixtureScript(): UserEvent[] {
  return fixtureJson("script.json") as UserEvent[];
}

/** Entries with timestamps removed, for cross-runtime comparison. */
export function stripTs(entries: unknown[]): unknown[] {
  return (entries as Record<string, unknown>[]).map(({ ts: _ts, ...rest }) => rest);
}

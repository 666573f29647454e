import { describe, expect, it } from "vitest";

import { runScript } from "../src/machine.js";
import { fixtureLines, fixtureMachine, fixtureScript, stripTs } from "./helpers.js";

describe("cross-runtime equivalence with the headless interpreter", () => {
  it("reproduces the happy-path trace, timestamps aside", () => {
    const machine = fixtureMachine();
    const produced = runScript(machine, fixtureScript());
    const expected = fixtureLines("expected.trace.ndjson");
    expect(stripTs(JSON.parse(JSON.stringify(produced)))).toEqual(stripTs(expected));
    expect(machine.currentState).toBe("final");
    expect(produced.every((entry) => entry.outcome.result !== "REJECTED")).toBe(true);
  });

  it("reproduces the missing-selection trace including rejection reasons", () => {
    const machine = fixtureMachine();
    const script = fixtureScript().filter((event) => event.element !== "e.pick_project");
    const produced = runScript(machine, script);
    const expected = fixtureLines("expected_noselect.trace.ndjson");
    expect(stripTs(JSON.parse(JSON.stringify(produced)))).toEqual(stripTs(expected));
    const guardRejections = produced.filter(
      (entry) => entry.outcome.reason === "guard has(Project) false",
    );
    expect(guardRejections).toHaveLength(1);
  });
});

describe("machine behavior", () => {
  it("settles from the initial state to the first window", () => {
    const machine = fixtureMachine();
    expect(machine.currentState).toBe("init");
    expect(machine.settle()).toEqual(["init", "s.select_project"]);
    expect(machine.currentWindow()?.id).toBe("w.select_project");
  });

  it("chains list visibility through the selection stack", () => {
    const machine = fixtureMachine();
    machine.settle();
    expect(machine.visibleItems("e.pick_project")).toHaveLength(6);
    machine.handleEvent({ kind: "SELECT", element: "e.pick_project", payload: 0 });
    machine.handleEvent({ kind: "ACTIVATE", element: "e.open_project" });
    const reports = machine.visibleItems("e.list_reports");
    expect(reports.map((r) => r.title)).toEqual(["Foundation survey", "Steel delivery"]);
  });

  it("back pops the frames pushed when entering the abandoned window", () => {
    const machine = fixtureMachine();
    machine.settle();
    machine.handleEvent({ kind: "SELECT", element: "e.pick_project", payload: 2 });
    machine.handleEvent({ kind: "ACTIVATE", element: "e.open_project" });
    expect(machine.stack.map((f) => f.concept)).toEqual(["Project"]);
    const entry = machine.handleEvent({ kind: "ACTIVATE", element: "w.project_details.back" });
    expect(entry.outcome).toEqual({ result: "TRANSITIONED", target: "s.select_project" });
    expect(machine.stack).toEqual([]);
  });

  it("rejects events once final is reached and keeps counting entries", () => {
    const machine = fixtureMachine();
    runScript(machine, fixtureScript());
    const entry = machine.handleEvent({ kind: "ACTIVATE", element: "e.open_project" });
    expect(entry.outcome.result).toBe("REJECTED");
    expect(entry.outcome.reason).toContain("final");
    expect(entry.seq).toBe(fixtureScript().length + 1);
  });

  it("masks password input payloads in entries", () => {
    // reuse the fixture models but pretend the title field is a password
    const machine = fixtureMachine();
    machine.settle();
    machine.handleEvent({ kind: "SELECT", element: "e.pick_project", payload: 0 });
    machine.handleEvent({ kind: "ACTIVATE", element: "e.open_project" });
    const win = machine.currentWindow()!;
    const field = win.children.find((e) => e.id === "e.report_title")!;
    field.widget = "PASSWORD_FIELD";
    const entry = machine.handleEvent({ kind: "INPUT", element: "e.report_title", payload: "s3cret" });
    expect(entry.event?.payload).toBe("***");
    expect(JSON.stringify(machine.trace)).not.toContain("s3cret");
  });
});

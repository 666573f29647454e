/**
 * The browser-side state machine. Transition semantics are conformance-tested
 * against the headless interpreter's recorded traces: given the same models,
 * data and event sequence, both produce the same outcome sequence (timestamps
 * aside). Keep every reason string and bookkeeping rule in lockstep.
 */

import {
  CuiElement,
  CuiModel,
  CuiWindow,
  DataRecord,
  GuardAtom,
  InstanceData,
  INPUT_WIDGETS,
  SELECTION_WIDGETS,
  StateChart,
  StateKind,
  Transition,
  windowElements,
} from "./models.js";

export const MASK = "***";

export type UserEventKind = "ACTIVATE" | "SELECT" | "INPUT" | "SUBMIT";

export interface UserEvent {
  kind: UserEventKind;
  element: string;
  payload?: unknown;
}

export interface Outcome {
  result: "TRANSITIONED" | "REJECTED" | "RECORDED";
  target?: string;
  reason?: string;
}

export interface Frame {
  concept: string;
  kind: "SELECTED" | "ENTERED";
  values: DataRecord;
  masked: Set<string>;
}

export interface TraceEntry {
  seq: number;
  ts: number;
  state: string;
  event: { kind: UserEventKind; element: string; payload?: unknown } | null;
  outcome: Outcome;
  path: string[];
  stack: { concept: string; entry: "SELECTED" | "ENTERED"; values: DataRecord }[];
  note?: string;
}

export class NotInCurrentWindow extends Error {}

/** Python-style repr for the literals that appear in rejection reasons. */
export function pyRepr(value: unknown): string {
  if (value === null || value === undefined) return "None";
  if (value === true) return "True";
  if (value === false) return "False";
  if (typeof value === "number") return String(value);
  const text = String(value);
  if (text.includes("'") && !text.includes('"')) return `"${text}"`;
  return `'${text.replace(/\\/g, "\\\\").replace(/'/g, "\\'")}'`;
}

function describeGuard(guard: GuardAtom[] | undefined): string {
  if (!guard || guard.length === 0) return "<none>";
  return guard
    .map((atom) =>
      atom.op === "HAS"
        ? `has(${atom.concept})`
        : `equals(${atom.concept}.${atom.attribute}, ${pyRepr(atom.value)})`,
    )
    .join(" and ");
}

export function evalGuard(stack: Frame[], guard: GuardAtom[] | undefined): boolean {
  for (const atom of guard ?? []) {
    let top: Frame | undefined;
    for (let i = stack.length - 1; i >= 0; i -= 1) {
      if (stack[i]!.concept === atom.concept) {
        top = stack[i];
        break;
      }
    }
    if (atom.op === "HAS") {
      if (!top) return false;
    } else if (!top || top.values[atom.attribute!] !== atom.value) {
      return false;
    }
  }
  return true;
}

interface WindowEntry {
  stateId: string;
  framesPushed: number;
}

export class Machine {
  readonly cui: CuiModel;
  readonly sc: StateChart;
  readonly data: InstanceData;
  clock: () => number;

  currentState: string;
  stack: Frame[] = [];
  trace: TraceEntry[] = [];

  private entries: WindowEntry[] = [];
  private pendingSelections = new Map<string, Frame>();
  private pendingInputs = new Map<string, Frame>();
  private elementIndex = new Map<string, { windowId: string; element: CuiElement }>();
  private kinds = new Map<string, StateKind>();
  private windowRefs = new Map<string, string>();

  constructor(cui: CuiModel, sc: StateChart, data: InstanceData, clock?: () => number) {
    this.cui = cui;
    this.sc = sc;
    this.data = data;
    this.clock = clock ?? (() => Date.now() / 1000);
    this.currentState = sc.initial;
    for (const win of cui.windows) {
      for (const element of windowElements(win)) {
        this.elementIndex.set(element.id, { windowId: win.id, element });
      }
    }
    for (const state of sc.states) {
      this.kinds.set(state.id, state.kind);
      if (state.window_ref) this.windowRefs.set(state.id, state.window_ref);
    }
  }

  kindOf(stateId: string): StateKind {
    const kind = this.kinds.get(stateId);
    if (!kind) throw new Error(`undeclared state ${stateId}`);
    return kind;
  }

  get atFinal(): boolean {
    return this.kindOf(this.currentState) === "FINAL";
  }

  currentWindow(): CuiWindow | null {
    const ref = this.windowRefs.get(this.currentState);
    if (!ref) return null;
    return this.cui.windows.find((w) => w.id === ref) ?? null;
  }

  pendingSelection(concept: string): Frame | undefined {
    return this.pendingSelections.get(concept);
  }

  /** Window state ids entered so far, oldest first (breadcrumb trail). */
  visitedWindows(): string[] {
    return this.entries.map((entry) => entry.stateId);
  }

  private elementInCurrentWindow(elementId: string): CuiElement | null {
    const ref = this.windowRefs.get(this.currentState);
    const owner = this.elementIndex.get(elementId);
    if (!ref || !owner || owner.windowId !== ref) return null;
    return owner.element;
  }

  // -- data visibility -------------------------------------------------------

  visibleItems(elementId: string): DataRecord[] {
    const element = this.elementInCurrentWindow(elementId);
    if (!element || !SELECTION_WIDGETS.has(element.widget)) {
      throw new NotInCurrentWindow(
        `element ${elementId} is not a selection widget in the current window`,
      );
    }
    const binding = element.binding;
    if (!binding) return [];
    const records = this.data[binding.concept] ?? [];
    return records.filter((record) => this.matchesContext(record));
  }

  private matchesContext(record: DataRecord): boolean {
    for (let i = this.stack.length - 1; i >= 0; i -= 1) {
      const frame = this.stack[i]!;
      if (frame.kind !== "SELECTED" || Object.keys(frame.values).length === 0) continue;
      const foreignKey = frame.concept.toLowerCase();
      if (foreignKey in record) {
        const identity = Object.values(frame.values)[0];
        if (record[foreignKey] !== identity) return false;
      }
    }
    return true;
  }

  /** Value an output widget should display, from the topmost matching frame. */
  boundValue(element: CuiElement): unknown {
    const binding = element.binding;
    if (!binding) return undefined;
    for (let i = this.stack.length - 1; i >= 0; i -= 1) {
      const frame = this.stack[i]!;
      if (frame.concept !== binding.concept) continue;
      if (binding.attribute === undefined) return frame.values;
      if (binding.attribute in frame.values) return frame.values[binding.attribute];
    }
    return undefined;
  }

  // -- stepping ---------------------------------------------------------------

  /** Auto-advance through SYSTEM/USER states; list of states traversed. */
  settle(): string[] {
    const { via, landing } = this.advanceFrom(this.currentState, this.stack);
    if (landing === null || landing === this.currentState) return [];
    this.currentState = landing;
    if (this.kindOf(landing) === "WINDOW") this.enterWindow(landing, 0);
    return [...via, landing];
  }

  private advanceFrom(
    stateId: string,
    stack: Frame[],
  ): { via: string[]; landing: string | null } {
    const via: string[] = [];
    const visited = new Set<string>();
    let current = stateId;
    while (this.kindOf(current) === "SYSTEM" || this.kindOf(current) === "USER") {
      if (visited.has(current)) return { via, landing: null };
      visited.add(current);
      via.push(current);
      let chosen: Transition | null = null;
      for (const transition of this.sc.transitions) {
        if (transition.source !== current || transition.trigger) continue;
        if (evalGuard(stack, transition.guard)) {
          chosen = transition;
          break;
        }
      }
      if (!chosen) return { via, landing: null };
      current = chosen.target;
    }
    return { via, landing: current };
  }

  /**
   * Process one user event: exactly one trace entry, committed atomically.
   * Events at a final state become rejected entries (nothing moves).
   */
  handleEvent(event: UserEvent): TraceEntry {
    if (this.atFinal) {
      return this.append(event, { result: "REJECTED", reason: "final state reached; event ignored" });
    }

    let prePath: string[] = [this.currentState];
    const kind = this.kindOf(this.currentState);
    if (kind === "SYSTEM" || kind === "USER") {
      const moved = this.settle();
      if (moved.length) prePath = moved;
      const after = this.kindOf(this.currentState);
      if (after === "SYSTEM" || after === "USER") {
        return this.append(
          event,
          { result: "REJECTED", reason: `blocked at state ${pyRepr(this.currentState)}` },
          this.currentState,
          prePath,
        );
      }
      if (after === "FINAL") {
        return this.append(
          event,
          { result: "REJECTED", reason: "final state reached; event ignored" },
          this.currentState,
          prePath,
        );
      }
    }

    const evaluatedAt = this.currentState;
    const { outcome, hops, note } = this.handleAtWindow(event);
    return this.append(event, outcome, evaluatedAt, [...prePath, ...hops], note);
  }

  private handleAtWindow(event: UserEvent): {
    outcome: Outcome;
    hops: string[];
    note?: string;
  } {
    const matches = this.sc.transitions.filter(
      (t) =>
        t.source === this.currentState &&
        t.trigger !== undefined &&
        t.trigger.element === event.element &&
        t.trigger.event === event.kind,
    );
    if (matches.length) return this.attemptTransition(matches);

    const element = this.elementInCurrentWindow(event.element);
    if (!element) {
      return {
        outcome: {
          result: "REJECTED",
          reason: `element ${pyRepr(event.element)} is not in the current window`,
        },
        hops: [],
      };
    }
    if (event.kind === "SELECT" && SELECTION_WIDGETS.has(element.widget)) {
      return this.recordSelection(element, event);
    }
    if (event.kind === "INPUT" && INPUT_WIDGETS.has(element.widget)) {
      return this.recordInput(element, event);
    }
    return {
      outcome: {
        result: "REJECTED",
        reason: `no transition matches ${event.kind} on ${pyRepr(event.element)}`,
      },
      hops: [],
    };
  }

  private recordSelection(element: CuiElement, event: UserEvent): { outcome: Outcome; hops: string[] } {
    const items = this.visibleItems(element.id);
    const index = event.payload;
    if (typeof index !== "number" || !Number.isInteger(index) || index < 0 || index >= items.length) {
      return {
        outcome: { result: "REJECTED", reason: `selection index ${pyRepr(index ?? null)} out of range` },
        hops: [],
      };
    }
    const binding = element.binding!;
    this.pendingSelections.set(binding.concept, {
      concept: binding.concept,
      kind: "SELECTED",
      values: { ...items[index]! },
      masked: new Set(),
    });
    return { outcome: { result: "RECORDED" }, hops: [] };
  }

  private recordInput(element: CuiElement, event: UserEvent): { outcome: Outcome; hops: string[] } {
    const binding = element.binding;
    if (!binding || binding.role !== "WRITES" || binding.attribute === undefined) {
      return { outcome: { result: "RECORDED" }, hops: [] };
    }
    const existing = this.pendingInputs.get(binding.concept);
    const values = existing ? { ...existing.values } : {};
    const masked = existing ? new Set(existing.masked) : new Set<string>();
    values[binding.attribute] = event.payload;
    if (element.widget === "PASSWORD_FIELD") masked.add(binding.attribute);
    this.pendingInputs.set(binding.concept, {
      concept: binding.concept,
      kind: "ENTERED",
      values,
      masked,
    });
    return { outcome: { result: "RECORDED" }, hops: [] };
  }

  private attemptTransition(matches: Transition[]): {
    outcome: Outcome;
    hops: string[];
    note?: string;
  } {
    const viable: { transition: Transition; staged: Frame[]; trial: Frame[] }[] = [];
    const failedGuards: string[] = [];
    for (const transition of matches) {
      const staged = this.resolvePushes(transition);
      const trial = this.stackAfter(transition, staged);
      if (evalGuard(trial, transition.guard)) {
        viable.push({ transition, staged, trial });
      } else {
        failedGuards.push(describeGuard(transition.guard));
      }
    }
    if (!viable.length) {
      return {
        outcome: { result: "REJECTED", reason: `guard ${failedGuards[0]} false` },
        hops: [],
      };
    }
    const note =
      viable.length > 1 ? "multiple transitions matched; first in serialized order taken" : undefined;
    const { transition, staged, trial } = viable[0]!;

    const { via, landing } = this.advanceFrom(transition.target, trial);
    if (landing === null) {
      const blocked = via.length ? via[via.length - 1]! : transition.target;
      return {
        outcome: { result: "REJECTED", reason: `blocked at state ${pyRepr(blocked)}` },
        hops: [],
        note,
      };
    }

    this.stack = trial;
    this.currentState = landing;
    if (transition.back) {
      this.popWindowEntries(transition.source);
    } else if (this.kindOf(landing) === "WINDOW") {
      this.enterWindow(landing, staged.length);
    }
    this.pendingSelections = new Map();
    this.pendingInputs = new Map();
    return { outcome: { result: "TRANSITIONED", target: landing }, hops: [...via, landing], note };
  }

  private resolvePushes(transition: Transition): Frame[] {
    const staged: Frame[] = [];
    if (transition.back) return staged;
    for (const link of transition.pushes ?? []) {
      const source = link.role === "SELECTS" ? this.pendingSelections : this.pendingInputs;
      if (link.role === "SELECTS" || link.role === "WRITES") {
        const frame = source.get(link.concept);
        if (frame) staged.push(frame);
      }
    }
    return staged;
  }

  private stackAfter(transition: Transition, staged: Frame[]): Frame[] {
    if (!transition.back) return [...this.stack, ...staged];
    let toPop = 0;
    for (let i = this.entries.length - 1; i >= 0; i -= 1) {
      if (this.entries[i]!.stateId !== this.currentState) break;
      toPop += this.entries[i]!.framesPushed;
    }
    const kept = this.stack.length - Math.min(toPop, this.stack.length);
    return this.stack.slice(0, kept);
  }

  private enterWindow(stateId: string, framesPushed: number): void {
    const top = this.entries[this.entries.length - 1];
    if (top && top.stateId === stateId) {
      top.framesPushed += framesPushed;
    } else {
      this.entries.push({ stateId, framesPushed });
    }
  }

  private popWindowEntries(stateId: string): void {
    while (this.entries.length && this.entries[this.entries.length - 1]!.stateId === stateId) {
      this.entries.pop();
    }
  }

  // -- tracing ----------------------------------------------------------------

  private append(
    event: UserEvent | null,
    outcome: Outcome,
    state?: string,
    path?: string[],
    note?: string,
  ): TraceEntry {
    const entry: TraceEntry = {
      seq: this.trace.length + 1,
      ts: this.clock(),
      state: state ?? this.currentState,
      event: event
        ? {
            kind: event.kind,
            element: event.element,
            ...(event.payload !== undefined && event.payload !== null
              ? { payload: this.maskPayload(event) }
              : {}),
          }
        : null,
      outcome,
      path: path ?? [this.currentState],
      stack: this.stack.map((frame) => ({
        concept: frame.concept,
        entry: frame.kind,
        values: Object.fromEntries(
          Object.entries(frame.values).map(([key, value]) => [
            key,
            frame.masked.has(key) ? MASK : value,
          ]),
        ),
      })),
      ...(note ? { note } : {}),
    };
    this.trace.push(entry);
    return entry;
  }

  private maskPayload(event: UserEvent): unknown {
    if (event.kind !== "INPUT") return event.payload;
    const owner = this.elementIndex.get(event.element);
    if (owner && owner.element.widget === "PASSWORD_FIELD") return MASK;
    return event.payload;
  }
}

/** Fold a script through a machine; events at final become rejected entries. */
export function runScript(machine: Machine, events: UserEvent[]): TraceEntry[] {
  for (const event of events) {
    machine.handleEvent(event);
  }
  return machine.trace;
}

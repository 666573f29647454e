/**
 * Model documents the runtime loads: the concrete UI, the navigation state
 * chart, instance data and the extension manifest. Parsing is shape-checked
 * and validateIr re-checks the same invariants the compiler guarantees, so a
 * corrupt or hand-edited document fails fast with a named violation.
 */

export type Role = "READS" | "SELECTS" | "WRITES";

export type WidgetKind =
  | "TEXT_FIELD"
  | "PASSWORD_FIELD"
  | "TEXT_OUTPUT"
  | "BUTTON"
  | "RADIO_GROUP"
  | "COMBO_BOX"
  | "LIST_VIEW"
  | "FILTERED_LIST_VIEW"
  | "CHECKBOX"
  | "DATE_PICKER"
  | "GROUP"
  | "BREADCRUMB";

export const SELECTION_WIDGETS: ReadonlySet<WidgetKind> = new Set([
  "RADIO_GROUP",
  "COMBO_BOX",
  "LIST_VIEW",
  "FILTERED_LIST_VIEW",
]);

export const INPUT_WIDGETS: ReadonlySet<WidgetKind> = new Set([
  "TEXT_FIELD",
  "PASSWORD_FIELD",
  "CHECKBOX",
  "DATE_PICKER",
]);

export interface Binding {
  concept: string;
  attribute?: string;
  role: Role;
}

export interface CuiElement {
  id: string;
  widget: WidgetKind;
  label: string;
  binding?: Binding;
  origin_task: string;
  applied_rules?: string[];
  children?: CuiElement[];
}

export interface CuiWindow {
  id: string;
  title: string;
  children: CuiElement[];
}

export interface CuiModel {
  windows: CuiWindow[];
}

export type StateKind = "WINDOW" | "SYSTEM" | "USER" | "FINAL";

export interface ChartState {
  id: string;
  kind: StateKind;
  window_ref?: string;
  origin_task: string;
}

export interface GuardAtom {
  op: "HAS" | "EQUALS";
  concept: string;
  attribute?: string;
  value?: unknown;
}

export interface Trigger {
  element: string;
  event: "ACTIVATE" | "SELECT" | "SUBMIT";
}

export interface PushLink {
  concept: string;
  attribute?: string;
  role: Role;
}

export interface Transition {
  source: string;
  target: string;
  trigger?: Trigger;
  guard?: GuardAtom[];
  pushes?: PushLink[];
  back?: boolean;
}

export interface StateChart {
  initial: string;
  finals: string[];
  states: ChartState[];
  transitions: Transition[];
}

export type DataRecord = Record<string, unknown>;
export type InstanceData = Record<string, DataRecord[]>;

export interface Patch {
  op: "SET_ATTRIBUTE" | "ADD_CLASS" | "INSERT_STATIC";
  element?: string;
  name?: string;
  value?: string;
  class?: string;
  position?: "TOP" | "BOTTOM";
  markup?: string;
}

export interface ExtensionManifest {
  states: Record<string, Patch[]>;
}

export class ModelLoadError extends Error {}

function need<T>(value: T | undefined | null, what: string): T {
  if (value === undefined || value === null) {
    throw new ModelLoadError(`missing ${what}`);
  }
  return value;
}

export function parseCui(raw: unknown): CuiModel {
  const doc = raw as { windows?: unknown };
  const windows = need(doc.windows, "windows") as CuiWindow[];
  if (!Array.isArray(windows)) throw new ModelLoadError("windows must be an array");
  for (const win of windows) {
    need(win.id, "window id");
    need(win.title, `title of window ${win.id}`);
    win.children = win.children ?? [];
  }
  return { windows };
}

export function parseSc(raw: unknown): StateChart {
  const doc = raw as Partial<StateChart>;
  const chart: StateChart = {
    initial: need(doc.initial, "initial"),
    finals: need(doc.finals, "finals"),
    states: need(doc.states, "states"),
    transitions: need(doc.transitions, "transitions"),
  };
  for (const state of chart.states) {
    need(state.id, "state id");
    need(state.kind, `kind of state ${state.id}`);
  }
  return chart;
}

export function parseData(raw: unknown): InstanceData {
  const doc = raw as InstanceData;
  for (const [concept, records] of Object.entries(doc)) {
    if (!Array.isArray(records)) {
      throw new ModelLoadError(`concept ${concept} must map to a list of records`);
    }
  }
  return doc;
}

export function parseExtensions(raw: unknown): ExtensionManifest {
  const doc = raw as Partial<ExtensionManifest>;
  return { states: doc.states ?? {} };
}

export function windowElements(win: CuiWindow): CuiElement[] {
  const out: CuiElement[] = [];
  const walk = (element: CuiElement): void => {
    out.push(element);
    for (const child of element.children ?? []) walk(child);
  };
  for (const child of win.children) walk(child);
  return out;
}

export interface Violation {
  code: string;
  element: string;
  message: string;
}

/** Same invariant list the compiler enforces, re-checked client-side. */
export function validateIr(cui: CuiModel, sc: StateChart): Violation[] {
  const out: Violation[] = [];
  const report = (code: string, element: string, message: string): void => {
    out.push({ code, element, message });
  };

  const windowIds = new Set<string>();
  const elementIds = new Set<string>();
  for (const win of cui.windows) {
    if (windowIds.has(win.id)) report("WINDOW_ID_DUP", win.id, "duplicate window id");
    windowIds.add(win.id);
    for (const element of windowElements(win)) {
      if (elementIds.has(element.id)) report("ELEMENT_ID_DUP", element.id, "duplicate element id");
      elementIds.add(element.id);
      if ((element.children?.length ?? 0) > 0 && element.widget !== "GROUP") {
        report("NON_GROUP_CHILDREN", element.id, "only GROUP elements may nest children");
      }
      if (SELECTION_WIDGETS.has(element.widget)) {
        const role = element.binding?.role;
        if (role !== "SELECTS" && role !== "READS") {
          report("BINDING_ROLE", element.id, `${element.widget} requires a SELECTS or READS binding`);
        }
      }
    }
  }

  const stateIds = new Set<string>();
  const kinds = new Map<string, StateKind>();
  for (const state of sc.states) {
    if (stateIds.has(state.id)) report("STATE_ID_DUP", state.id, "duplicate state id");
    stateIds.add(state.id);
    kinds.set(state.id, state.kind);
    if (state.kind === "WINDOW") {
      if (!state.window_ref) {
        report("WINDOW_REF_MISSING", state.id, "WINDOW state has no window_ref");
      } else if (!windowIds.has(state.window_ref)) {
        report("DANGLING_WINDOW_REF", state.id, `window ${state.window_ref} not in CUI model`);
      }
    } else if (state.window_ref) {
      report("WINDOW_REF_FORBIDDEN", state.id, "only WINDOW states carry a window_ref");
    }
  }

  if (!stateIds.has(sc.initial)) report("BAD_INITIAL", sc.initial, "initial state is not declared");
  const finalsByKind = sc.states.filter((s) => s.kind === "FINAL").map((s) => s.id);
  if (finalsByKind.length === 0) report("NO_FINAL", "<chart>", "chart declares no FINAL state");
  const declaredFinals = [...sc.finals].sort().join(",");
  if (declaredFinals !== [...finalsByKind].sort().join(",")) {
    report("FINALS_MISMATCH", "<chart>", "finals set does not match FINAL-kind states");
  }

  for (const transition of sc.transitions) {
    const where = `${transition.source}->${transition.target}`;
    for (const endpoint of [transition.source, transition.target]) {
      if (!stateIds.has(endpoint)) report("UNKNOWN_STATE", where, `undeclared state ${endpoint}`);
    }
    const sourceKind = kinds.get(transition.source);
    if (sourceKind === "WINDOW" && !transition.trigger) {
      report("TRIGGER_REQUIRED", where, "transitions out of WINDOW states need a trigger");
    }
    if ((sourceKind === "SYSTEM" || sourceKind === "USER") && transition.trigger) {
      report("TRIGGER_FORBIDDEN", where, `${sourceKind} states auto-advance`);
    }
    if (sourceKind === "FINAL") {
      report("TRANSITION_FROM_FINAL", where, "FINAL states have no outgoing transitions");
    }
    if (transition.trigger && !elementIds.has(transition.trigger.element)) {
      report("UNKNOWN_TRIGGER_ELEMENT", where, `trigger element ${transition.trigger.element} not in CUI model`);
    }
  }

  if (stateIds.has(sc.initial)) {
    const forward = new Map<string, string[]>();
    const reverse = new Map<string, string[]>();
    for (const t of sc.transitions) {
      forward.set(t.source, [...(forward.get(t.source) ?? []), t.target]);
      reverse.set(t.target, [...(reverse.get(t.target) ?? []), t.source]);
    }
    const reach = (seeds: string[], adjacency: Map<string, string[]>): Set<string> => {
      const seen = new Set<string>();
      const stack = [...seeds];
      while (stack.length) {
        const current = stack.pop()!;
        if (seen.has(current)) continue;
        seen.add(current);
        stack.push(...(adjacency.get(current) ?? []));
      }
      return seen;
    };
    const reachable = reach([sc.initial], forward);
    const canFinish = reach(finalsByKind, reverse);
    for (const state of sc.states) {
      if (!reachable.has(state.id)) {
        report("UNREACHABLE_STATE", state.id, "not reachable from the initial state");
      }
      if (state.kind !== "FINAL" && !canFinish.has(state.id)) {
        report("FINAL_UNREACHABLE", state.id, "no FINAL state reachable from here");
      }
    }
  }

  return out;
}

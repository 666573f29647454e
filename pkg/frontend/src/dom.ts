/**
 * Live-document renderer: one carrier element per CUI element (tagged with
 * data-cui-id), lists populated through the machine's visibility rules,
 * per-state extensions applied last. Rendering is a pure function of the
 * machine state, so every outcome simply re-renders the current window.
 */

import { Machine, UserEvent } from "./machine.js";
import { CuiElement, ExtensionManifest, Patch, SELECTION_WIDGETS } from "./models.js";

export type ActionSink = (event: UserEvent) => void;

const INPUT_TYPES: Record<string, string> = {
  TEXT_FIELD: "text",
  PASSWORD_FIELD: "password",
  CHECKBOX: "checkbox",
  DATE_PICKER: "date",
};

function recordLabel(record: Record<string, unknown>): string {
  const first = Object.values(record)[0];
  return first === undefined ? "(empty)" : String(first);
}

function carrier(doc: Document, tag: string, element: CuiElement, css?: string): HTMLElement {
  const node = doc.createElement(tag);
  if (css) node.className = css;
  node.setAttribute("data-cui-id", element.id);
  node.setAttribute("data-origin-task", element.origin_task);
  node.setAttribute("data-widget", element.widget);
  return node;
}

function buildElement(
  doc: Document,
  machine: Machine,
  element: CuiElement,
  onAction: ActionSink,
): HTMLElement {
  const widget = element.widget;

  if (widget === "BUTTON") {
    const button = carrier(doc, "button", element) as HTMLButtonElement;
    button.type = "button";
    button.textContent = element.label;
    button.addEventListener("click", () => onAction({ kind: "ACTIVATE", element: element.id }));
    return button;
  }

  if (widget in INPUT_TYPES) {
    const field = carrier(doc, "div", element, "field");
    const label = doc.createElement("label");
    label.textContent = element.label;
    label.htmlFor = `in.${element.id}`;
    const input = doc.createElement("input") as HTMLInputElement;
    input.type = INPUT_TYPES[widget]!;
    input.id = `in.${element.id}`;
    input.addEventListener("change", () => {
      const payload: unknown = widget === "CHECKBOX" ? input.checked : input.value;
      onAction({ kind: "INPUT", element: element.id, payload });
    });
    field.append(label, input);
    return field;
  }

  if (widget === "TEXT_OUTPUT") {
    const field = carrier(doc, "div", element, "field output");
    const label = doc.createElement("span");
    label.className = "label";
    label.textContent = element.label;
    const output = doc.createElement("output");
    const value = machine.boundValue(element);
    output.textContent = value === undefined ? "" : String(value);
    field.append(label, output);
    return field;
  }

  if (SELECTION_WIDGETS.has(widget)) {
    return buildSelection(doc, machine, element, onAction);
  }

  if (widget === "GROUP") {
    const group = carrier(doc, "fieldset", element, "group");
    const legend = doc.createElement("legend");
    legend.textContent = element.label;
    group.append(legend);
    for (const child of element.children ?? []) {
      group.append(buildElement(doc, machine, child, onAction));
    }
    return group;
  }

  // BREADCRUMB: the windows visited so far, oldest first
  const nav = carrier(doc, "nav", element, "breadcrumb");
  nav.setAttribute("aria-label", element.label);
  const trail = doc.createElement("ol");
  for (const stateId of machine.visitedWindows()) {
    const ref = machine.sc.states.find((s) => s.id === stateId)?.window_ref;
    const title = machine.cui.windows.find((w) => w.id === ref)?.title ?? stateId;
    const item = doc.createElement("li");
    item.textContent = title;
    trail.append(item);
  }
  nav.append(trail);
  return nav;
}

function buildSelection(
  doc: Document,
  machine: Machine,
  element: CuiElement,
  onAction: ActionSink,
): HTMLElement {
  const items = machine.visibleItems(element.id);
  const pending = element.binding ? machine.pendingSelection(element.binding.concept) : undefined;

  if (element.widget === "COMBO_BOX" || element.widget === "RADIO_GROUP") {
    const isCombo = element.widget === "COMBO_BOX";
    const box = carrier(doc, isCombo ? "div" : "fieldset", element, isCombo ? "field" : "radio-group");
    const label = doc.createElement(isCombo ? "label" : "legend");
    label.textContent = element.label;
    box.append(label);
    if (isCombo) {
      const select = doc.createElement("select") as HTMLSelectElement;
      const placeholder = doc.createElement("option");
      placeholder.textContent = "--";
      placeholder.value = "";
      select.append(placeholder);
      items.forEach((record, index) => {
        const option = doc.createElement("option");
        option.value = String(index);
        option.textContent = recordLabel(record);
        select.append(option);
      });
      select.addEventListener("change", () => {
        if (select.value !== "") {
          onAction({ kind: "SELECT", element: element.id, payload: Number(select.value) });
        }
      });
      box.append(select);
    } else {
      items.forEach((record, index) => {
        const option = doc.createElement("label");
        const radio = doc.createElement("input") as HTMLInputElement;
        radio.type = "radio";
        radio.name = element.id;
        radio.addEventListener("change", () =>
          onAction({ kind: "SELECT", element: element.id, payload: index }),
        );
        option.append(radio, doc.createTextNode(recordLabel(record)));
        box.append(option);
      });
    }
    return box;
  }

  // LIST_VIEW / FILTERED_LIST_VIEW
  const section = carrier(doc, "section", element, "list");
  const heading = doc.createElement("h2");
  heading.className = "label";
  heading.textContent = element.label;
  section.append(heading);
  const list = doc.createElement("ul");
  list.className = "items";
  if (element.widget === "FILTERED_LIST_VIEW") {
    const filter = doc.createElement("input") as HTMLInputElement;
    filter.type = "search";
    filter.className = "list-filter";
    filter.placeholder = "Filter";
    filter.setAttribute("data-filter-for", element.id);
    filter.addEventListener("input", () => {
      const needle = filter.value.toLowerCase();
      for (const item of Array.from(list.children) as HTMLElement[]) {
        item.hidden = needle !== "" && !(item.textContent ?? "").toLowerCase().includes(needle);
      }
    });
    section.append(filter);
  }
  items.forEach((record, index) => {
    const item = doc.createElement("li");
    item.textContent = recordLabel(record);
    item.setAttribute("data-index", String(index));
    if (pending && Object.values(pending.values)[0] === Object.values(record)[0]) {
      item.setAttribute("aria-selected", "true");
    }
    item.addEventListener("click", () =>
      onAction({ kind: "SELECT", element: element.id, payload: index }),
    );
    list.append(item);
  });
  section.append(list);
  return section;
}

function applyPatches(doc: Document, root: HTMLElement, patches: Patch[]): void {
  for (const patch of patches) {
    if (patch.op === "INSERT_STATIC") {
      root.insertAdjacentHTML(patch.position === "TOP" ? "afterbegin" : "beforeend", patch.markup ?? "");
      continue;
    }
    const target = root.querySelector(`[data-cui-id="${patch.element}"]`);
    if (!target) continue; // dangling targets are a validation-time concern
    if (patch.op === "SET_ATTRIBUTE") {
      target.setAttribute(patch.name!, patch.value ?? "");
    } else {
      target.classList.add(patch.class!);
    }
  }
}

/**
 * Replace root's content with the current window (or the completion panel).
 * Changes to machine state are made only through onAction.
 */
export function renderState(
  machine: Machine,
  root: HTMLElement,
  extensions: ExtensionManifest,
  onAction: ActionSink,
  feedback?: string,
): void {
  const doc = root.ownerDocument;
  root.textContent = "";

  if (machine.atFinal) {
    const done = doc.createElement("section");
    done.className = "finished";
    const heading = doc.createElement("h1");
    heading.textContent = "Session complete";
    done.append(heading);
    root.append(done);
    return;
  }

  const win = machine.currentWindow();
  if (!win) return; // nothing presentable yet (settle pending)

  const main = doc.createElement("main");
  main.setAttribute("data-window-id", win.id);
  const heading = doc.createElement("h1");
  heading.textContent = win.title;
  main.append(heading);
  if (feedback) {
    const alert = doc.createElement("div");
    alert.className = "feedback";
    alert.setAttribute("role", "alert");
    alert.textContent = feedback;
    main.append(alert);
  }
  for (const element of win.children) {
    main.append(buildElement(doc, machine, element, onAction));
  }
  applyPatches(doc, main, extensions.states[machine.currentState] ?? []);
  root.append(main);
}

/**
 * Single-page bootstrap: fetch the compiled model documents, validate them,
 * start the state machine at its initial state, and keep the document in sync
 * with it. Every user action is handled by the machine and shipped to the
 * log endpoint, rejected ones with inline feedback.
 */

import { renderState } from "./dom.js";
import { Machine, UserEvent } from "./machine.js";
import { fetchTransport, LogClient } from "./logclient.js";
import {
  ExtensionManifest,
  parseCui,
  parseData,
  parseExtensions,
  parseSc,
  validateIr,
} from "./models.js";

async function fetchJson(url: string): Promise<unknown> {
  const response = await fetch(url);
  if (!response.ok) throw new Error(`${url}: HTTP ${response.status}`);
  return response.json();
}

export interface RuntimeHandle {
  machine: Machine;
  extensions: ExtensionManifest;
  logger: LogClient;
}

export async function loadModels(baseUrl: string): Promise<RuntimeHandle> {
  const [cuiRaw, scRaw, dataRaw, extRaw] = await Promise.all([
    fetchJson(`${baseUrl}models/cui.json`),
    fetchJson(`${baseUrl}models/sc.json`),
    fetchJson(`${baseUrl}models/data.json`),
    fetchJson(`${baseUrl}models/extensions.json`),
  ]);
  const cui = parseCui(cuiRaw);
  const sc = parseSc(scRaw);
  const violations = validateIr(cui, sc);
  if (violations.length > 0) {
    const first = violations[0]!;
    throw new Error(
      `model validation failed: ${first.code} at ${first.element}: ${first.message}` +
        (violations.length > 1 ? ` (+${violations.length - 1} more)` : ""),
    );
  }
  const machine = new Machine(cui, sc, parseData(dataRaw));
  machine.settle();
  return {
    machine,
    extensions: parseExtensions(extRaw),
    logger: new LogClient(fetchTransport(`${baseUrl}log`)),
  };
}

function showError(message: string): void {
  const panel = document.getElementById("error-panel");
  if (panel) {
    panel.hidden = false;
    panel.textContent = message;
  }
  const app = document.getElementById("app");
  if (app) app.textContent = "";
}

export async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) return;
  let handle: RuntimeHandle;
  try {
    handle = await loadModels("./");
  } catch (error) {
    showError(error instanceof Error ? error.message : String(error));
    return;
  }
  const { machine, extensions, logger } = handle;

  const onAction = (event: UserEvent): void => {
    const entry = machine.handleEvent(event);
    void logger.send(entry);
    const feedback =
      entry.outcome.result === "REJECTED" ? `Not possible here: ${entry.outcome.reason}` : undefined;
    renderState(machine, root, extensions, onAction, feedback);
  };

  renderState(machine, root, extensions, onAction);
}

// auto-boot in the browser; tests import the pieces directly
if (typeof document !== "undefined" && document.getElementById("app")) {
  void boot();
}

// DOM wiring. All state lives in the view-model (model.ts); this file only
// forwards events into reduce() and repaints from renderFrame().

import {
  clearFaultsCommand,
  debounce,
  keyCommand,
  potCommand,
  presetCommand,
} from "./console.js";
import {
  AppEvent,
  AppState,
  Frame,
  initialState,
  reduce,
  renderFrame,
} from "./model.js";
import { fetchRegisterMeta, login, openStream, Stream } from "./net.js";
import { FAULT_KEYS } from "./types.js";

const baseUrl = window.location.origin;
let state: AppState = initialState();
let stream: Stream | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function dispatch(event: AppEvent): void {
  state = reduce(state, event);
  paint(renderFrame(state));
}

function paint(frame: Frame): void {
  el("login-view").hidden = frame.phase === "live";
  el("live-view").hidden = frame.phase !== "live";
  el("login-error").textContent = frame.loginError ?? frame.notice ?? "";
  el<HTMLButtonElement>("login-button").disabled = frame.phase === "connecting";

  if (frame.phase !== "live") return;

  const statusBox = el("status-box");
  statusBox.textContent = frame.status ?? "—";
  statusBox.className = frame.status === "SHUTDOWN" ? "status shutdown" : "status running";
  el("stale-banner").hidden = !frame.stale;
  el("command-error").textContent = frame.commandError ?? "";
  el("link-stats").textContent = frame.linkStats ?? "";

  const faultList = el("fault-list");
  faultList.replaceChildren(
    ...frame.faults.map((fault) => {
      const item = document.createElement("li");
      item.textContent = fault.key.replace(/_/g, " ");
      item.className = fault.active ? "fault active" : "fault";
      return item;
    }),
  );

  const tbody = el("measure-rows");
  tbody.replaceChildren(
    ...frame.measures.map((row) => {
      const tr = document.createElement("tr");
      for (const text of [row.code, row.label, row.description, row.display]) {
        const td = document.createElement("td");
        td.textContent = text;
        tr.appendChild(td);
      }
      return tr;
    }),
  );
}

function attachStream(sessionId: string): void {
  const makeSocket = (url: string) =>
    new WebSocket(url) as unknown as import("./net.js").SocketLike;
  stream = openStream(makeSocket, baseUrl, sessionId, {
    onOpen: () => dispatch({ kind: "stream-open" }),
    onMessage: (message) => dispatch({ kind: "message", message }),
    onClosed: (reason) => {
      stream = null;
      dispatch({ kind: "stream-closed", reason });
    },
  });
}

function buildConsole(): void {
  const keys = el("key-toggles");
  for (const key of FAULT_KEYS) {
    const label = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.addEventListener("change", () =>
      stream?.send(keyCommand(key, box.checked)),
    );
    label.append(box, ` ${key.replace(/_/g, " ")}`);
    keys.appendChild(label);
  }

  for (const [inputId, target] of [
    ["slider-st1", "ST1"],
    ["slider-su1", "SU1"],
  ] as const) {
    const slider = el<HTMLInputElement>(inputId);
    const send = debounce<number>((value) =>
      stream?.send(potCommand(target, value)),
    );
    slider.addEventListener("input", () => send(Number(slider.value)));
  }

  el("preset-form").addEventListener("submit", (event) => {
    event.preventDefault();
    const name = el<HTMLSelectElement>("preset-select").value;
    stream?.send(presetCommand(name));
  });
  el("clear-faults").addEventListener("click", () =>
    stream?.send(clearFaultsCommand()),
  );
}

async function main(): Promise<void> {
  state = initialState(await fetchRegisterMeta(baseUrl));
  paint(renderFrame(state));
  buildConsole();

  el("login-form").addEventListener("submit", async (event) => {
    event.preventDefault();
    const user = el<HTMLInputElement>("login-user").value;
    const password = el<HTMLInputElement>("login-password").value;
    dispatch({ kind: "login-submitted" });
    const result = await login(
      (url, init) => fetch(url, init),
      baseUrl,
      user,
      password,
    );
    if (!result.ok) {
      dispatch({ kind: "login-failed", error: result.error });
      return;
    }
    dispatch({ kind: "login-ok" });
    attachStream(result.sessionId);
  });
}

main().catch((error) => {
  el("login-error").textContent = String(error);
});

// Pure view-model. The app is a fold over an event stream: reduce() is the
// only way state changes, and renderFrame() derives everything the DOM
// layer paints. Replaying the same events therefore reproduces the same
// rendered frame, which is what the replay test pins down.

import {
  FAULT_KEYS,
  RegisterMeta,
  ServerMessage,
  Snapshot,
} from "./types.js";

export const POLL_PERIOD_MS = 500;
export const STALE_AFTER_MS = 3 * POLL_PERIOD_MS;

export type Phase = "login" | "connecting" | "live";

export interface AppState {
  phase: Phase;
  loginError: string | null;
  notice: string | null; // e.g. "session expired", shown on the login form
  meta: RegisterMeta[];
  snapshot: Snapshot | null;
  commandError: string | null;
}

export type AppEvent =
  | { kind: "login-submitted" }
  | { kind: "login-ok" }
  | { kind: "login-failed"; error: string }
  | { kind: "stream-open" }
  | { kind: "message"; message: ServerMessage }
  | { kind: "stream-closed"; reason: string };

export function initialState(meta: RegisterMeta[] = []): AppState {
  return {
    phase: "login",
    loginError: null,
    notice: null,
    meta,
    snapshot: null,
    commandError: null,
  };
}

export function reduce(state: AppState, event: AppEvent): AppState {
  switch (event.kind) {
    case "login-submitted":
      return { ...state, phase: "connecting", loginError: null, notice: null };
    case "login-ok":
      return { ...state, phase: "connecting", loginError: null };
    case "login-failed":
      return { ...state, phase: "login", loginError: event.error };
    case "stream-open":
      return { ...state, phase: "live", commandError: null };
    case "message":
      if (event.message.type === "snapshot") {
        return { ...state, snapshot: event.message };
      }
      if (event.message.type === "error") {
        return { ...state, commandError: event.message.message };
      }
      return { ...state, commandError: null }; // ack clears the last error
    case "stream-closed":
      return {
        ...initialState(state.meta),
        notice: event.reason || "connection lost",
      };
  }
}

// -- Rendered frame ----------------------------------------------------------

export interface MeasureRow {
  code: string;
  label: string;
  description: string;
  display: string; // value with unit, e.g. "54.50 °C", or "—"
}

export interface FaultRow {
  key: string;
  active: boolean;
}

export interface Frame {
  phase: Phase;
  loginError: string | null;
  notice: string | null;
  status: "RUNNING" | "SHUTDOWN" | null;
  stale: boolean;
  faults: FaultRow[];
  measures: MeasureRow[];
  commandError: string | null;
  linkStats: string | null;
}

function formatValue(value: number, unit: string): string {
  const text = value.toFixed(2);
  return unit ? `${text} ${unit}` : text;
}

export function measureRows(
  meta: RegisterMeta[],
  snapshot: Snapshot | null,
): MeasureRow[] {
  return meta.map((entry) => {
    const value = snapshot?.engineering[entry.plc_label];
    return {
      code: entry.code,
      label: entry.plc_label,
      description: entry.description,
      display: value === undefined ? "—" : formatValue(value, entry.unit),
    };
  });
}

export function faultRows(snapshot: Snapshot | null): FaultRow[] {
  const active = new Set(snapshot?.alarms ?? []);
  return FAULT_KEYS.map((key) => ({ key, active: active.has(key) }));
}

export function isStale(snapshot: Snapshot | null): boolean {
  return snapshot !== null && snapshot.staleness_ms > STALE_AFTER_MS;
}

export function renderFrame(state: AppState): Frame {
  const snapshot = state.snapshot;
  return {
    phase: state.phase,
    loginError: state.loginError,
    notice: state.notice,
    status: state.phase === "live" && snapshot ? snapshot.status : null,
    stale: state.phase === "live" && isStale(snapshot),
    faults: faultRows(state.phase === "live" ? snapshot : null),
    measures: measureRows(state.meta, state.phase === "live" ? snapshot : null),
    commandError: state.commandError,
    linkStats:
      state.phase === "live" && snapshot
        ? `${snapshot.link_stats.frames_sent} frames, ` +
          `${snapshot.link_stats.frames_dropped} dropped, ` +
          `${snapshot.link_stats.frames_corrupted} corrupted`
        : null,
  };
}

export function replay(events: AppEvent[], meta: RegisterMeta[] = []): Frame {
  return renderFrame(events.reduce(reduce, initialState(meta)));
}

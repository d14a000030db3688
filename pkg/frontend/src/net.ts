// Bridge client: login over HTTP, then the snapshot stream over WebSocket.
// Both transports are injected so the unit tests can drive the login gate
// and reconnect logic without a server.

import { Command, RegisterMeta, ServerMessage } from "./types.js";

export interface LoginOk {
  ok: true;
  sessionId: string;
}

export interface LoginFailed {
  ok: false;
  error: string; // "BadCredentials" or a transport-level description
}

export type FetchLike = (
  url: string,
  init: { method: string; headers: Record<string, string>; body: string },
) => Promise<{ status: number; json(): Promise<unknown> }>;

export async function login(
  fetchLike: FetchLike,
  baseUrl: string,
  user: string,
  password: string,
): Promise<LoginOk | LoginFailed> {
  let response;
  try {
    response = await fetchLike(`${baseUrl}/api/login`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ user, password }),
    });
  } catch {
    return { ok: false, error: "bridge unreachable" };
  }
  if (response.status !== 200) {
    // The bridge answers 401 identically for unknown users and wrong
    // passwords; pass that through without embellishment.
    return { ok: false, error: "BadCredentials" };
  }
  const body = (await response.json()) as { session_id?: string };
  if (!body.session_id) {
    return { ok: false, error: "malformed login response" };
  }
  return { ok: true, sessionId: body.session_id };
}

export async function fetchRegisterMeta(
  baseUrl: string,
): Promise<RegisterMeta[]> {
  const response = await fetch(`${baseUrl}/api/registers`);
  if (!response.ok) {
    throw new Error(`register map fetch failed: ${response.status}`);
  }
  return (await response.json()) as RegisterMeta[];
}

// Minimal shape of a WebSocket we rely on, so tests can fake one.
export interface SocketLike {
  onopen: (() => void) | null;
  onmessage: ((event: { data: string }) => void) | null;
  onclose: ((event: { code: number; reason: string }) => void) | null;
  send(data: string): void;
  close(): void;
}

export interface StreamHandlers {
  onOpen(): void;
  onMessage(message: ServerMessage): void;
  onClosed(reason: string): void;
}

export interface Stream {
  send(command: Command): void;
  close(): void;
}

export function openStream(
  makeSocket: (url: string) => SocketLike,
  baseUrl: string,
  sessionId: string,
  handlers: StreamHandlers,
): Stream {
  const wsBase = baseUrl.replace(/^http/, "ws");
  const socket = makeSocket(
    `${wsBase}/api/stream?session=${encodeURIComponent(sessionId)}`,
  );
  let closedByUs = false;

  socket.onopen = () => handlers.onOpen();
  socket.onmessage = (event) => {
    let message: ServerMessage;
    try {
      message = JSON.parse(event.data) as ServerMessage;
    } catch {
      return; // not ours to interpret
    }
    handlers.onMessage(message);
  };
  socket.onclose = (event) => {
    if (closedByUs) return;
    // 1008 is the bridge's policy-violation close for expired sessions.
    const reason =
      event.code === 1008 ? "session expired" : event.reason || "connection lost";
    handlers.onClosed(reason);
  };

  return {
    send(command) {
      socket.send(JSON.stringify(command));
    },
    close() {
      closedByUs = true;
      socket.close();
    },
  };
}

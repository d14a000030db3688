import { describe, expect, it } from "vitest";

import { FetchLike, login, openStream, SocketLike } from "../src/net.js";
import { ServerMessage } from "../src/types.js";

function fetchReturning(status: number, body: unknown): FetchLike {
  return async () => ({ status, json: async () => body });
}

describe("login gate", () => {
  it("success yields the session id", async () => {
    const result = await login(
      fetchReturning(200, { session_id: "abc123" }),
      "http://bridge", "operator", "dryair",
    );
    expect(result).toEqual({ ok: true, sessionId: "abc123" });
  });

  it("rejection is uniform regardless of which credential was wrong", async () => {
    const wrongPassword = await login(
      fetchReturning(401, { error: "BadCredentials" }),
      "http://bridge", "operator", "nope",
    );
    const unknownUser = await login(
      fetchReturning(401, { error: "BadCredentials" }),
      "http://bridge", "nobody", "nope",
    );
    expect(wrongPassword).toEqual({ ok: false, error: "BadCredentials" });
    expect(unknownUser).toEqual(wrongPassword);
  });

  it("network failure reports the bridge unreachable", async () => {
    const result = await login(
      async () => { throw new Error("refused"); },
      "http://bridge", "operator", "dryair",
    );
    expect(result).toEqual({ ok: false, error: "bridge unreachable" });
  });

  it("bad credentials never attach a stream", async () => {
    // The gate is structural: openStream needs a session id, and a failed
    // login never produces one. Drive the same sequence main.ts performs.
    let socketsOpened = 0;
    const result = await login(
      fetchReturning(401, { error: "BadCredentials" }),
      "http://bridge", "operator", "nope",
    );
    if (result.ok) {
      openStream(() => { socketsOpened += 1; return fakeSocket(); },
                 "http://bridge", result.sessionId,
                 { onOpen() {}, onMessage() {}, onClosed() {} });
    }
    expect(socketsOpened).toBe(0);
  });
});

function fakeSocket(): SocketLike & { sent: string[]; closed: boolean } {
  return {
    onopen: null,
    onmessage: null,
    onclose: null,
    sent: [],
    closed: false,
    send(data: string) { this.sent.push(data); },
    close() { this.closed = true; },
  };
}

describe("snapshot stream", () => {
  it("connects with the session token and forwards parsed messages", () => {
    let url = "";
    const socket = fakeSocket();
    const received: ServerMessage[] = [];
    openStream((u) => { url = u; return socket; }, "http://bridge", "tok en",
               { onOpen() {}, onMessage: (m) => received.push(m), onClosed() {} });
    expect(url).toBe("ws://bridge/api/stream?session=tok%20en");
    socket.onmessage!({ data: JSON.stringify({ type: "ack" }) });
    socket.onmessage!({ data: "not json" });
    expect(received).toEqual([{ type: "ack" }]);
  });

  it("serializes commands onto the socket", () => {
    const socket = fakeSocket();
    const stream = openStream(() => socket, "http://bridge", "t",
                              { onOpen() {}, onMessage() {}, onClosed() {} });
    stream.send({ type: "pot", target: "ST1", value: 54.5 });
    expect(JSON.parse(socket.sent[0]!)).toEqual(
      { type: "pot", target: "ST1", value: 54.5 });
  });

  it("policy close (1008) surfaces as session expiry", () => {
    const socket = fakeSocket();
    let reason = "";
    openStream(() => socket, "http://bridge", "t",
               { onOpen() {}, onMessage() {}, onClosed: (r) => { reason = r; } });
    socket.onclose!({ code: 1008, reason: "AuthExpired" });
    expect(reason).toBe("session expired");
  });

  it("a close we initiated is not reported", () => {
    const socket = fakeSocket();
    let closes = 0;
    const stream = openStream(() => socket, "http://bridge", "t",
                              { onOpen() {}, onMessage() {}, onClosed: () => { closes += 1; } });
    stream.close();
    socket.onclose!({ code: 1000, reason: "" });
    expect(socket.closed).toBe(true);
    expect(closes).toBe(0);
  });
});

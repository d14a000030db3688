// Bench console helpers: command constructors and the slider debounce.
// Commands are fire-and-forget; the UI never updates optimistically, it
// waits for the next snapshot to reflect the authoritative state.

import { Command } from "./types.js";

export function keyCommand(fault: string, pressed: boolean): Command {
  return { type: "key", fault, pressed };
}

export function potCommand(target: string, value: number): Command {
  return { type: "pot", target, value };
}

export function presetCommand(name: string): Command {
  return { type: "preset", name };
}

export function clearFaultsCommand(): Command {
  return { type: "clear_faults" };
}

export const SLIDER_DEBOUNCE_MS = 100;

/** Trailing-edge debounce: only the last value within the window fires. */
export function debounce<T>(
  fn: (value: T) => void,
  delayMs: number = SLIDER_DEBOUNCE_MS,
): (value: T) => void {
  let timer: ReturnType<typeof setTimeout> | null = null;
  return (value: T) => {
    if (timer !== null) clearTimeout(timer);
    timer = setTimeout(() => {
      timer = null;
      fn(value);
    }, delayMs);
  };
}

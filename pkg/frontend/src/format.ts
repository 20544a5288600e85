// Display formatting. Numbers shown in the UI are the service's values
// rendered at 6 significant digits; the client never derives new numbers
// from results.

import { VeWire } from "./types.js";

export function sig6(value: number): string {
  if (!Number.isFinite(value)) return String(value);
  return Number(value.toPrecision(6)).toString();
}

export function formatVe(value: VeWire | null): string {
  if (value === null) return "n/a";
  if (typeof value === "object") return "-∞";
  return sig6(value);
}

export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  waitMs: number,
): (...args: A) => void {
  let timer: ReturnType<typeof setTimeout> | undefined;
  return (...args: A) => {
    if (timer !== undefined) clearTimeout(timer);
    timer = setTimeout(() => fn(...args), waitMs);
  };
}

export function randomSeed(): number {
  return Math.floor(Math.random() * 2 ** 31);
}

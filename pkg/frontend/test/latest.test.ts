import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { debounce, LatestWins } from "../src/latest.js";

describe("debounce", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("coalesces rapid calls into the last one", () => {
    const calls: number[] = [];
    const d = debounce((v: number) => calls.push(v), 150);
    d.call(1);
    vi.advanceTimersByTime(100);
    d.call(2);
    vi.advanceTimersByTime(100);
    d.call(3);
    vi.advanceTimersByTime(200);
    expect(calls).toEqual([3]);
  });

  it("flush fires immediately, cancel drops", () => {
    const calls: number[] = [];
    const d = debounce((v: number) => calls.push(v), 150);
    d.call(7);
    d.flush();
    expect(calls).toEqual([7]);
    d.call(8);
    d.cancel();
    vi.advanceTimersByTime(300);
    expect(calls).toEqual([7]);
  });
});

describe("LatestWins", () => {
  it("returns results for the newest task only", async () => {
    const gate = new LatestWins();
    let resolveFirst!: (v: string) => void;
    const first = gate.run(
      () => new Promise<string>((resolve) => (resolveFirst = resolve)),
    );
    const second = gate.run(() => Promise.resolve("second"));
    resolveFirst("first");
    expect(await first).toBeNull();
    expect(await second).toBe("second");
  });

  it("aborts the previous task's signal", async () => {
    const gate = new LatestWins();
    let seen: AbortSignal | null = null;
    void gate.run((signal) => {
      seen = signal;
      return new Promise(() => {});
    });
    await gate.run(() => Promise.resolve(1));
    expect(seen!.aborted).toBe(true);
  });

  it("swallows failures from superseded tasks", async () => {
    const gate = new LatestWins();
    let rejectFirst!: (e: Error) => void;
    const first = gate.run(
      () => new Promise<string>((_, reject) => (rejectFirst = reject)),
    );
    const second = gate.run(() => Promise.resolve("ok"));
    rejectFirst(new Error("boom"));
    expect(await first).toBeNull();
    expect(await second).toBe("ok");
  });

  it("propagates failures from the current task", async () => {
    const gate = new LatestWins();
    await expect(gate.run(() => Promise.reject(new Error("real")))).rejects.toThrow("real");
  });
});

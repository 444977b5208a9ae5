// Debouncing and latest-wins request management for the preview strip.

export interface Debounced<A extends unknown[]> {
  call(...args: A): void;
  flush(): void;
  cancel(): void;
}

export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  ms: number,
): Debounced<A> {
  let timer: ReturnType<typeof setTimeout> | null = null;
  let pending: A | null = null;
  return {
    call(...args: A) {
      pending = args;
      if (timer !== null) {
        clearTimeout(timer);
      }
      timer = setTimeout(() => {
        timer = null;
        const args2 = pending!;
        pending = null;
        fn(...args2);
      }, ms);
    },
    flush() {
      if (timer !== null) {
        clearTimeout(timer);
        timer = null;
        const args = pending!;
        pending = null;
        fn(...args);
      }
    },
    cancel() {
      if (timer !== null) {
        clearTimeout(timer);
        timer = null;
        pending = null;
      }
    },
  };
}

/**
 * Runs at most one async task at a time; starting a new task aborts the
 * previous one and stale results resolve to null instead of surfacing.
 */
export class LatestWins {
  private serial = 0;
  private controller: AbortController | null = null;

  get inFlight(): boolean {
    return this.controller !== null;
  }

  async run<T>(task: (signal: AbortSignal) => Promise<T>): Promise<T | null> {
    const mySerial = ++this.serial;
    if (this.controller) {
      this.controller.abort();
    }
    const controller = new AbortController();
    this.controller = controller;
    try {
      const result = await task(controller.signal);
      return mySerial === this.serial ? result : null;
    } catch (err) {
      if (mySerial !== this.serial || controller.signal.aborted) {
        return null; // superseded: discard the stale failure too
      }
      throw err;
    } finally {
      if (mySerial === this.serial) {
        this.controller = null;
      }
    }
  }
}

import type { LabelRecord } from "./types.js";

export interface QueueState {
  pending: number;
  flushing: boolean;
  lastError: string | null;
}

/**
 * Optimistic label queue with a serialized flush.
 *
 * Labels enter the queue immediately (the UI moves on); one flush runs at
 * a time and posts the whole backlog as a single batch. On failure the
 * records stay queued for retry — a label is only dropped once the
 * service has acknowledged it.
 */
export class LabelQueue {
  private pending: LabelRecord[] = [];
  private flushing = false;
  private lastError: string | null = null;
  private waiters: Array<() => void> = [];

  constructor(
    private post: (labels: LabelRecord[]) => Promise<unknown>,
    private onChange: (state: QueueState) => void = () => {},
  ) {}

  get state(): QueueState {
    return { pending: this.pending.length, flushing: this.flushing, lastError: this.lastError };
  }

  add(record: LabelRecord): void {
    this.pending.push(record);
    this.notify();
    void this.flush();
  }

  /** Resolves when the queue has settled (empty, or a failed attempt finished). */
  flush(): Promise<void> {
    const settled = new Promise<void>((resolve) => this.waiters.push(resolve));
    void this.drain();
    return settled;
  }

  retry(): Promise<void> {
    return this.flush();
  }

  private async drain(): Promise<void> {
    if (this.flushing) return;
    this.flushing = true;
    this.notify();
    try {
      while (this.pending.length > 0) {
        const batch = this.pending.slice();
        try {
          await this.post(batch);
          this.pending = this.pending.slice(batch.length);
          this.lastError = null;
          this.notify();
        } catch (err) {
          this.lastError = err instanceof Error ? err.message : String(err);
          break; // keep records queued; caller retries explicitly
        }
      }
    } finally {
      this.flushing = false;
      this.notify();
      const waiters = this.waiters;
      this.waiters = [];
      for (const resolve of waiters) resolve();
    }
  }

  private notify(): void {
    this.onChange(this.state);
  }
}

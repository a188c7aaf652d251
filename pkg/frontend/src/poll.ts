// Polling with backoff, and the auto-advancing time window every live chart
// shares. The gateway stays stateless; freshness comes from asking again.

export interface PollerOptions {
  intervalMs?: number;
  maxBackoffMs?: number;
}

export class Poller {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private stopped = true;
  private backoff = 0;
  readonly intervalMs: number;
  readonly maxBackoffMs: number;
  onError: ((e: unknown) => void) | null = null;

  constructor(
    private tick: () => Promise<void>,
    options: PollerOptions = {},
  ) {
    this.intervalMs = options.intervalMs ?? 2000;
    this.maxBackoffMs = options.maxBackoffMs ?? 30_000;
  }

  get failing(): boolean {
    return this.backoff > 0;
  }

  start(): void {
    if (!this.stopped) return;
    this.stopped = false;
    void this.run();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  private async run(): Promise<void> {
    if (this.stopped) return;
    try {
      await this.tick();
      this.backoff = 0;
    } catch (e) {
      // double the wait after every consecutive failure, capped
      this.backoff = Math.min(this.backoff === 0 ? this.intervalMs : this.backoff * 2,
        this.maxBackoffMs);
      this.onError?.(e);
    }
    if (this.stopped) return;
    this.timer = setTimeout(() => void this.run(), this.intervalMs + this.backoff);
  }
}

// A [from, to) window that tracks "now" until the user zooms or pans, and
// resumes tracking when asked to.
export class LiveWindow {
  private widthMs: number;
  private pinnedTo: number | null = null;

  constructor(widthMs: number, private clock: () => number = Date.now) {
    this.widthMs = widthMs;
  }

  get live(): boolean {
    return this.pinnedTo === null;
  }

  get width(): number {
    return this.widthMs;
  }

  bounds(): { from: number; to: number } {
    const to = this.pinnedTo ?? this.clock();
    return { from: to - this.widthMs, to };
  }

  zoom(factor: number, aroundMs?: number): void {
    const { from, to } = this.bounds();
    const pivot = aroundMs ?? (from + to) / 2;
    this.widthMs = Math.max(1000, this.widthMs * factor);
    const frac = (to - pivot) / (to - from || 1);
    this.pinnedTo = pivot + this.widthMs * frac;
  }

  pan(deltaMs: number): void {
    const { to } = this.bounds();
    this.pinnedTo = to + deltaMs;
  }

  resumeLive(): void {
    this.pinnedTo = null;
  }
}

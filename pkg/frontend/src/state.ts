// Scenario exploration state: the current bitstring, an optional pinned
// reference, and an append-only history of visited scenarios.

export interface HistoryEntry {
  scenario: string;
  meanDepth: number;
  maxDepth: number;
  wetFraction: number;
  latencyMs: number;
}

export const HISTORY_CAP = 200;

export function isValidScenario(text: string, d_x: number): boolean {
  return text.length === d_x && /^[01]+$/.test(text);
}

export function allZeros(d_x: number): string {
  return "0".repeat(d_x);
}

export function toggleBit(scenario: string, segmentId: number): string {
  if (segmentId < 0 || segmentId >= scenario.length) {
    throw new RangeError(`segment ${segmentId} outside [0, ${scenario.length})`);
  }
  const flipped = scenario[segmentId] === "1" ? "0" : "1";
  return scenario.slice(0, segmentId) + flipped + scenario.slice(segmentId + 1);
}

export function summarize(scenario: string, depths: number[], latencyMs: number): HistoryEntry {
  const n = depths.length;
  let sum = 0;
  let max = 0;
  let wet = 0;
  for (const d of depths) {
    sum += d;
    if (d > max) max = d;
    if (d > 0) wet += 1;
  }
  return {
    scenario,
    meanDepth: n ? sum / n : 0,
    maxDepth: max,
    wetFraction: n ? wet / n : 0,
    latencyMs,
  };
}

export class ScenarioState {
  current: string;
  reference: string | null = null;
  history: HistoryEntry[] = [];

  constructor(public d_x: number, initial?: string) {
    const start = initial ?? allZeros(d_x);
    if (!isValidScenario(start, d_x)) {
      throw new Error(`invalid initial scenario "${start}" for d_x=${d_x}`);
    }
    this.current = start;
  }

  toggle(segmentId: number): string {
    this.current = toggleBit(this.current, segmentId);
    return this.current;
  }

  pinReference(): void {
    this.reference = this.current;
  }

  clearReference(): void {
    this.reference = null;
  }

  recordResult(scenario: string, depths: number[], latencyMs: number): HistoryEntry {
    const entry = summarize(scenario, depths, latencyMs);
    this.history.push(entry);
    if (this.history.length > HISTORY_CAP) {
      this.history.splice(0, this.history.length - HISTORY_CAP);
    }
    return entry;
  }

  historyCsv(): string {
    const header = "scenario,mean_depth_m,max_depth_m,wet_fraction,latency_ms";
    const rows = this.history.map(
      (e) => `${e.scenario},${e.meanDepth},${e.maxDepth},${e.wetFraction},${e.latencyMs}`,
    );
    return [header, ...rows].join("\n") + "\n";
  }
}

// Serializes rapid toggles: at most one request in flight, and only the
// latest requested scenario is resolved once the current flight lands.
export class LatestPredictionGate {
  private inFlight = false;
  private pending: string | null = null;

  constructor(private run: (scenario: string) => Promise<void>) {}

  async submit(scenario: string): Promise<void> {
    if (this.inFlight) {
      this.pending = scenario;
      return;
    }
    this.inFlight = true;
    try {
      await this.run(scenario);
    } finally {
      this.inFlight = false;
      if (this.pending !== null) {
        const next = this.pending;
        this.pending = null;
        await this.submit(next);
      }
    }
  }
}

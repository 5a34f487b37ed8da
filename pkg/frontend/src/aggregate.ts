import { ResultRow } from "./schema.js";

export type Mode = "algorithm" | "time";

/** One aggregated point: a series group at one x position. */
export interface AggregatePoint {
  domain: string;
  algo: string;
  budget_mode: string;
  budget: number;
  likelihood: string;
  amount: number;
  x: number; // uncertainty amount (algorithm mode) or budget (time mode)
  n: number;
  mean_steps: number;
  sem_steps: number;
}

export interface DroppedGroup {
  key: string;
  n: number;
}

/** Sample standard deviation (n - 1 denominator). */
export function sampleStd(values: number[]): number {
  const n = values.length;
  const mean = values.reduce((a, b) => a + b, 0) / n;
  const ss = values.reduce((a, b) => a + (b - mean) * (b - mean), 0);
  return Math.sqrt(ss / (n - 1));
}

/**
 * Collapse seeds into mean/SEM per configuration point. In algorithm mode the
 * x axis is the uncertainty amount; in time mode it is the planning budget.
 * Points backed by fewer than two seeds are dropped and reported.
 */
export function aggregate(rows: ResultRow[], mode: Mode):
    { points: AggregatePoint[]; dropped: DroppedGroup[] } {
  const buckets = new Map<string, ResultRow[]>();
  for (const r of rows) {
    const key = [r.domain, r.algo, r.budget_mode, r.budget, r.likelihood, r.amount].join("|");
    const bucket = buckets.get(key);
    if (bucket) bucket.push(r);
    else buckets.set(key, [r]);
  }
  const points: AggregatePoint[] = [];
  const dropped: DroppedGroup[] = [];
  for (const [key, bucket] of buckets) {
    if (bucket.length < 2) {
      dropped.push({ key, n: bucket.length });
      continue;
    }
    const steps = bucket.map((r) => r.steps);
    const mean = steps.reduce((a, b) => a + b, 0) / steps.length;
    const sem = sampleStd(steps) / Math.sqrt(steps.length);
    const first = bucket[0];
    points.push({
      domain: first.domain,
      algo: first.algo,
      budget_mode: first.budget_mode,
      budget: first.budget,
      likelihood: first.likelihood,
      amount: first.amount,
      x: mode === "algorithm" ? first.amount : first.budget,
      n: steps.length,
      mean_steps: mean,
      sem_steps: sem,
    });
  }
  points.sort((a, b) =>
    a.domain.localeCompare(b.domain) || a.algo.localeCompare(b.algo)
    || a.budget - b.budget || a.likelihood.localeCompare(b.likelihood)
    || a.amount - b.amount || a.x - b.x);
  return { points, dropped };
}

export const AGGREGATE_HEADER =
  "domain,algo,budget_mode,budget,likelihood,amount,x,n,mean_steps,sem_steps";

/** Deterministic sidecar CSV so numbers can be validated without rendering. */
export function aggregateCsv(points: AggregatePoint[]): string {
  const lines = [AGGREGATE_HEADER];
  for (const p of points) {
    lines.push([p.domain, p.algo, p.budget_mode, p.budget, p.likelihood, p.amount,
                p.x, p.n, p.mean_steps, p.sem_steps].join(","));
  }
  return lines.join("\n") + "\n";
}

/** Series label within a panel: algorithm plus budget, or locations per item. */
export function seriesLabel(p: AggregatePoint, mode: Mode): string {
  if (mode === "time") {
    return `${p.amount} locations`;
  }
  if (p.algo === "ffreplan") return "ffreplan";
  const unit = p.budget_mode === "secs" ? "s" : "it";
  return `${p.algo}@${p.budget}${unit}`;
}

/** Panel key: (domain, likelihood) for algorithm mode, domain for time mode. */
export function panelKey(p: AggregatePoint, mode: Mode): string {
  return mode === "algorithm" ? `${p.domain}_${p.likelihood}` : p.domain;
}

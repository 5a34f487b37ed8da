import { readFileSync } from "fs";
import Papa from "papaparse";

/** One benchmark episode, as written by the episode harness. */
export interface ResultRow {
  domain: string;
  algo: string;
  budget_mode: string;
  budget: number;
  amount: number;
  likelihood: string;
  particles: number;
  seed: number;
  steps: number;
  goal: boolean;
  planning_secs: number;
  plans_generated: number;
}

export const EXPECTED_HEADER = [
  "domain", "algo", "budget_mode", "budget", "amount", "likelihood",
  "particles", "seed", "steps", "goal", "planning_secs", "plans_generated",
] as const;

export class SchemaError extends Error {}

export function parseResults(csvText: string): ResultRow[] {
  const parsed = Papa.parse<string[]>(csvText.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`CSV parse failed: ${parsed.errors[0].message}`);
  }
  const rows = parsed.data;
  if (rows.length === 0) {
    throw new SchemaError("empty file: missing header row");
  }
  const header = rows[0];
  const missing = EXPECTED_HEADER.filter((c) => !header.includes(c));
  const extra = header.filter((c) => !(EXPECTED_HEADER as readonly string[]).includes(c));
  if (missing.length > 0 || extra.length > 0) {
    throw new SchemaError(
      `unexpected columns: missing [${missing.join(", ")}], unknown [${extra.join(", ")}]`,
    );
  }
  const idx = Object.fromEntries(header.map((c, i) => [c, i]));
  const num = (row: string[], col: string, line: number): number => {
    const v = Number(row[idx[col]]);
    if (!Number.isFinite(v)) {
      throw new SchemaError(`line ${line}: column ${col} is not a number: ${row[idx[col]]}`);
    }
    return v;
  };
  return rows.slice(1).map((row, i) => {
    const line = i + 2;
    if (row.length !== header.length) {
      throw new SchemaError(`line ${line}: expected ${header.length} fields, got ${row.length}`);
    }
    return {
      domain: row[idx.domain],
      algo: row[idx.algo],
      budget_mode: row[idx.budget_mode],
      budget: num(row, "budget", line),
      amount: num(row, "amount", line),
      likelihood: row[idx.likelihood],
      particles: num(row, "particles", line),
      seed: num(row, "seed", line),
      steps: num(row, "steps", line),
      goal: row[idx.goal] === "true",
      planning_secs: num(row, "planning_secs", line),
      plans_generated: num(row, "plans_generated", line),
    };
  });
}

/** Load rows from disk; failed episodes (goal=false) are kept unless dropFailed. */
export function loadResults(path: string, dropFailed = false): ResultRow[] {
  const rows = parseResults(readFileSync(path, "utf8"));
  return dropFailed ? rows.filter((r) => r.goal) : rows;
}

/**
 * Readers for the CSV artifacts the training CLI writes.
 *
 * Columns are a versioned interface: each reader checks the header and
 * throws MissingColumnError naming the first absent column, so a schema
 * drift fails loudly instead of plotting garbage. Floats arrive via repr
 * on the producing side; "nan" cells become NaN here and renderers skip
 * them point by point.
 */
import { readFileSync } from "node:fs";
import Papa from "papaparse";

export const CURVE_COLUMNS = [
  "run", "condition", "iteration", "samples_seen",
  "train_loss", "test_loss", "test_acc",
] as const;
export const SUMMARY_COLUMNS = [
  "condition", "measure", "mean", "std",
  "num_bootstraps", "values_per_bootstrap",
] as const;
export const SELECTIVITY_COLUMNS = [
  "variant", "run", "role", "timescale", "r_squared", "selectivity",
] as const;
export const FEATURE_COLUMNS = ["variant", "run", "timescale", "mse"] as const;
export const SCAN_COLUMNS = ["variant", "unit_role", "correlation", "runs"] as const;

export interface CurveRow {
  run: number;
  condition: string;
  iteration: number;
  samplesSeen: number;
  trainLoss: number;
  testLoss: number;
  testAcc: number;
}

export interface SummaryRow {
  condition: string;
  measure: string;
  mean: number;
  std: number;
  numBootstraps: number;
  valuesPerBootstrap: number;
}

export interface SelectivityRow {
  variant: string;
  run: number;
  role: string;
  timescale: string;
  rSquared: number;
  selectivity: number;
}

export interface FeatureRow {
  variant: string;
  run: number;
  timescale: string;
  mse: number;
}

export interface ScanRow {
  variant: string;
  unitRole: string;
  correlation: number;
  runs: number;
}

export class MissingColumnError extends Error {
  constructor(file: string, column: string) {
    super(`${file}: missing column "${column}"`);
    this.name = "MissingColumnError";
  }
}

type RawRow = Record<string, string>;

function parseRows(file: string, required: readonly string[]): RawRow[] {
  const text = readFileSync(file, "utf8");
  const parsed = Papa.parse<RawRow>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0]!;
    throw new Error(`${file}: row ${e.row}: ${e.message}`);
  }
  const fields = parsed.meta.fields ?? [];
  for (const column of required) {
    if (!fields.includes(column)) {
      throw new MissingColumnError(file, column);
    }
  }
  return parsed.data;
}

function toNumber(file: string, column: string, cell: string): number {
  if (cell === "nan") return NaN;
  if (cell === "inf") return Infinity;
  if (cell === "-inf") return -Infinity;
  const value = Number(cell);
  if (cell.trim() === "" || Number.isNaN(value)) {
    throw new Error(`${file}: column "${column}": unparseable value ${JSON.stringify(cell)}`);
  }
  return value;
}

export function readCurves(file: string): CurveRow[] {
  return parseRows(file, CURVE_COLUMNS).map((r) => ({
    run: toNumber(file, "run", r["run"]!),
    condition: r["condition"]!,
    iteration: toNumber(file, "iteration", r["iteration"]!),
    samplesSeen: toNumber(file, "samples_seen", r["samples_seen"]!),
    trainLoss: toNumber(file, "train_loss", r["train_loss"]!),
    testLoss: toNumber(file, "test_loss", r["test_loss"]!),
    testAcc: toNumber(file, "test_acc", r["test_acc"]!),
  }));
}

export function readSummary(file: string): SummaryRow[] {
  return parseRows(file, SUMMARY_COLUMNS).map((r) => ({
    condition: r["condition"]!,
    measure: r["measure"]!,
    mean: toNumber(file, "mean", r["mean"]!),
    std: toNumber(file, "std", r["std"]!),
    numBootstraps: toNumber(file, "num_bootstraps", r["num_bootstraps"]!),
    valuesPerBootstrap: toNumber(file, "values_per_bootstrap", r["values_per_bootstrap"]!),
  }));
}

export function readSelectivity(file: string): SelectivityRow[] {
  return parseRows(file, SELECTIVITY_COLUMNS).map((r) => ({
    variant: r["variant"]!,
    run: toNumber(file, "run", r["run"]!),
    role: r["role"]!,
    timescale: r["timescale"]!,
    rSquared: toNumber(file, "r_squared", r["r_squared"]!),
    selectivity: toNumber(file, "selectivity", r["selectivity"]!),
  }));
}

export function readFeatures(file: string): FeatureRow[] {
  return parseRows(file, FEATURE_COLUMNS).map((r) => ({
    variant: r["variant"]!,
    run: toNumber(file, "run", r["run"]!),
    timescale: r["timescale"]!,
    mse: toNumber(file, "mse", r["mse"]!),
  }));
}

export function readScan(file: string): ScanRow[] {
  return parseRows(file, SCAN_COLUMNS).map((r) => ({
    variant: r["variant"]!,
    unitRole: r["unit_role"]!,
    correlation: toNumber(file, "correlation", r["correlation"]!),
    runs: toNumber(file, "runs", r["runs"]!),
  }));
}

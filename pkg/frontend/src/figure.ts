/**
 * One FigureSpec in, one SVG out.
 *
 * A spec names an experiment output directory and a figure kind; the
 * renderer reads only the CSV artifacts in that directory. Rendering is a
 * pure string build, so callers can write the file only after the whole
 * figure succeeded and a failed figure leaves nothing behind.
 */
import { readdirSync } from "node:fs";
import { basename, join } from "node:path";
import {
  readCurves, readFeatures, readScan, readSelectivity, readSummary,
} from "./csv.js";
import type { CurveMetric } from "./transform.js";
import {
  curveSeries, featureBars, scanBars, selectivityBars,
} from "./transform.js";
import { barChart, lineChart } from "./svg.js";

export const FIGURE_KINDS = ["curves", "bars", "selectivity", "features", "scan"] as const;
export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface FigureSpec {
  kind: FigureKind;
  dir: string;
  title?: string;
  metric: CurveMetric;
  smooth: number;
  measure?: string;
  conditions?: string[];
  width: number;
  height: number;
}

export const SPEC_DEFAULTS = {
  metric: "test_loss" as CurveMetric,
  smooth: 1,
  width: 760,
  height: 440,
};

export function listCurveFiles(dir: string): string[] {
  return readdirSync(dir)
    .filter((name) => name.startsWith("curves_") && name.endsWith(".csv"))
    .sort()
    .map((name) => join(dir, name));
}

function renderCurves(spec: FigureSpec): string {
  const files = listCurveFiles(spec.dir);
  if (files.length === 0) throw new Error(`${spec.dir}: no curves_*.csv files`);
  let perFile = files.map((file) => readCurves(file));
  if (spec.conditions) {
    const available = perFile.map((rows) => rows[0]?.condition ?? "");
    for (const wanted of spec.conditions) {
      if (!available.includes(wanted)) {
        throw new Error(
          `condition "${wanted}" not found; have: ${available.join(", ")}`,
        );
      }
    }
    perFile = perFile.filter((rows) => spec.conditions!.includes(rows[0]!.condition));
  }
  const series = perFile.map((rows) => curveSeries(rows, spec.metric, spec.smooth));
  return lineChart(series, {
    width: spec.width,
    height: spec.height,
    title: spec.title ?? `${basename(spec.dir)} curves`,
    xLabel: "training iteration",
    yLabel: spec.smooth > 1 ? `${spec.metric} (smoothed over ${spec.smooth})` : spec.metric,
  });
}

function renderBars(spec: FigureSpec): string {
  const rows = readSummary(join(spec.dir, "summary.csv"));
  const measures: string[] = [];
  for (const row of rows) {
    if (!measures.includes(row.measure)) measures.push(row.measure);
  }
  let measure = spec.measure;
  if (measure === undefined) {
    if (measures.length !== 1) {
      throw new Error(`pick --measure, summary.csv has: ${measures.join(", ")}`);
    }
    measure = measures[0]!;
  } else if (!measures.includes(measure)) {
    throw new Error(`measure "${measure}" not found; have: ${measures.join(", ")}`);
  }
  const picked = rows.filter((row) => row.measure === measure);
  return barChart(
    picked.map((row) => ({
      group: row.condition,
      member: measure!,
      value: row.mean,
      spread: row.std,
    })),
    {
      width: spec.width,
      height: spec.height,
      title: spec.title ?? `${basename(spec.dir)} ${measure}`,
      xLabel: "condition",
      yLabel: `${measure} (bootstrap mean and std)`,
    },
  );
}

export function renderFigure(spec: FigureSpec): string {
  const base = {
    width: spec.width,
    height: spec.height,
    xLabel: "variant",
  };
  switch (spec.kind) {
    case "curves":
      return renderCurves(spec);
    case "bars":
      return renderBars(spec);
    case "selectivity":
      return barChart(selectivityBars(readSelectivity(join(spec.dir, "selectivity.csv"))), {
        ...base,
        title: spec.title ?? `${basename(spec.dir)} selectivity`,
        yLabel: "selectivity (mean and std over runs)",
      });
    case "features":
      return barChart(featureBars(readFeatures(join(spec.dir, "features.csv"))), {
        ...base,
        title: spec.title ?? `${basename(spec.dir)} per-timescale error`,
        yLabel: "reconstruction mse (mean and std over runs)",
      });
    case "scan":
      return barChart(scanBars(readScan(join(spec.dir, "scan.csv"))), {
        ...base,
        title: spec.title ?? `${basename(spec.dir)} interference scan`,
        yLabel: "coupling correlation",
      });
  }
}

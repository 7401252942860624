/**
 * Usage:
 *   plot --kind curves --dir out/fig2a --out fig2a.svg
 *        [--metric test_loss|test_acc|train_loss] [--smooth N]
 *        [--conditions k1,k5] [--title T] [--width W] [--height H]
 *   plot --kind bars --dir out/fig2c --out f.svg [--measure NAME]
 *   plot --kind selectivity|features|scan --dir out/fig3 --out f.svg
 *
 * Exit codes: 0 written, 1 data or rendering problem, 2 bad flags.
 * The output file is only touched after the figure rendered fully.
 */
import { mkdirSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";
import type { FigureKind, FigureSpec } from "./figure.js";
import { FIGURE_KINDS, SPEC_DEFAULTS, renderFigure } from "./figure.js";
import type { CurveMetric } from "./transform.js";

const METRICS = ["train_loss", "test_loss", "test_acc"] as const;

class UsageError extends Error {}

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const name = argv[i]!;
    const value = argv[i + 1];
    if (!name.startsWith("--")) throw new UsageError(`expected a --flag, got "${name}"`);
    if (value === undefined) throw new UsageError(`flag ${name} needs a value`);
    if (flags.has(name.slice(2))) throw new UsageError(`flag ${name} given twice`);
    flags.set(name.slice(2), value);
  }
  return flags;
}

function positiveInt(flags: Map<string, string>, name: string, fallback: number): number {
  const raw = flags.get(name);
  if (raw === undefined) return fallback;
  const value = Number(raw);
  if (!Number.isInteger(value) || value < 1) {
    throw new UsageError(`--${name} must be a positive integer, got "${raw}"`);
  }
  return value;
}

export function specFromArgs(argv: string[]): { spec: FigureSpec; out: string } {
  const flags = parseFlags(argv);
  const known = [
    "kind", "dir", "out", "title", "metric", "smooth", "measure",
    "conditions", "width", "height",
  ];
  for (const name of flags.keys()) {
    if (!known.includes(name)) throw new UsageError(`unknown flag --${name}`);
  }
  for (const name of ["kind", "dir", "out"]) {
    if (!flags.has(name)) throw new UsageError(`--${name} is required`);
  }
  const kind = flags.get("kind")!;
  if (!(FIGURE_KINDS as readonly string[]).includes(kind)) {
    throw new UsageError(`--kind must be one of ${FIGURE_KINDS.join(", ")}`);
  }
  const metric = flags.get("metric") ?? SPEC_DEFAULTS.metric;
  if (!(METRICS as readonly string[]).includes(metric)) {
    throw new UsageError(`--metric must be one of ${METRICS.join(", ")}`);
  }
  const spec: FigureSpec = {
    kind: kind as FigureKind,
    dir: flags.get("dir")!,
    title: flags.get("title"),
    metric: metric as CurveMetric,
    smooth: positiveInt(flags, "smooth", SPEC_DEFAULTS.smooth),
    measure: flags.get("measure"),
    conditions: flags.get("conditions")?.split(",").map((s) => s.trim()),
    width: positiveInt(flags, "width", SPEC_DEFAULTS.width),
    height: positiveInt(flags, "height", SPEC_DEFAULTS.height),
  };
  return { spec, out: flags.get("out")! };
}

export function main(argv: string[]): number {
  let spec: FigureSpec;
  let out: string;
  try {
    ({ spec, out } = specFromArgs(argv));
  } catch (e) {
    process.stderr.write(`usage error: ${(e as Error).message}\n`);
    return 2;
  }
  let svg: string;
  try {
    svg = renderFigure(spec);
  } catch (e) {
    process.stderr.write(`error: ${(e as Error).message}\n`);
    return 1;
  }
  mkdirSync(dirname(out), { recursive: true });
  writeFileSync(out, svg);
  process.stdout.write(`wrote ${out}\n`);
  return 0;
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}

/**
 * Hand-rolled SVG output. No DOM, no randomness, fixed number formatting,
 * so equal inputs give byte-equal files.
 */
import type { Bar, Series } from "./transform.js";

export interface ChartOptions {
  width: number;
  height: number;
  title: string;
  xLabel: string;
  yLabel: string;
}

const MARGIN = { top: 44, right: 156, bottom: 52, left: 64 };
const BAR_MARGIN = { top: 44, right: 24, bottom: 76, left: 64 };

export const PALETTE = [
  "#4269d0", "#efb118", "#ff725c", "#6cc5b0", "#3ca951",
  "#ff8ab7", "#a463f2", "#97bbf5", "#9c6b4e", "#9498a0",
] as const;

export function fmt(x: number): string {
  if (!Number.isFinite(x)) throw new Error(`cannot place non-finite coordinate ${x}`);
  const s = x.toFixed(2).replace(/\.?0+$/, "");
  return s === "-0" ? "0" : s;
}

export function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Tick positions covering [lo, hi] at a 1/2/5 step, d3-style. */
export function niceTicks(lo: number, hi: number, count = 6): number[] {
  if (lo === hi) {
    const pad = lo === 0 ? 1 : Math.abs(lo) * 0.1;
    lo -= pad;
    hi += pad;
  }
  const span = hi - lo;
  const raw = span / Math.max(1, count);
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = (norm >= 5 ? 10 : norm >= 2 ? 5 : norm >= 1 ? 2 : 1) * mag;
  const ticks: number[] = [];
  for (let t = Math.ceil(lo / step) * step; t <= hi + step * 1e-9; t += step) {
    ticks.push(Math.abs(t) < step * 1e-9 ? 0 : t);
  }
  return ticks;
}

function tickLabel(t: number): string {
  if (t !== 0 && (Math.abs(t) >= 1e5 || Math.abs(t) < 1e-3)) {
    return t.toExponential(1).replace("e+", "e");
  }
  const s = t.toFixed(4).replace(/\.?0+$/, "");
  return s === "-0" ? "0" : s;
}

interface Scale {
  lo: number;
  hi: number;
  a: number;
  b: number;
}

function linearScale(lo: number, hi: number, rangeLo: number, rangeHi: number): Scale {
  if (lo === hi) {
    const pad = lo === 0 ? 1 : Math.abs(lo) * 0.1;
    lo -= pad;
    hi += pad;
  }
  const a = (rangeHi - rangeLo) / (hi - lo);
  return { lo, hi, a, b: rangeLo - a * lo };
}

const px = (s: Scale, v: number) => s.a * v + s.b;

function open(width: number, height: number, title: string): string[] {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="sans-serif">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    `<text x="${fmt(width / 2)}" y="24" text-anchor="middle" font-size="15" font-weight="bold">${escapeXml(title)}</text>`,
  ];
}

function axes(
  parts: string[],
  xs: Scale,
  ys: Scale,
  left: number,
  right: number,
  top: number,
  bottom: number,
  xLabel: string,
  yLabel: string,
  xTicks: number[],
): void {
  for (const t of niceTicks(ys.lo, ys.hi)) {
    const y = px(ys, t);
    parts.push(`<line x1="${left}" y1="${fmt(y)}" x2="${right}" y2="${fmt(y)}" stroke="#ddd"/>`);
    parts.push(`<text x="${left - 7}" y="${fmt(y + 3.5)}" text-anchor="end" font-size="11">${tickLabel(t)}</text>`);
  }
  for (const t of xTicks) {
    const x = px(xs, t);
    parts.push(`<line x1="${fmt(x)}" y1="${bottom}" x2="${fmt(x)}" y2="${bottom + 5}" stroke="#333"/>`);
    parts.push(`<text x="${fmt(x)}" y="${bottom + 18}" text-anchor="middle" font-size="11">${tickLabel(t)}</text>`);
  }
  parts.push(`<line x1="${left}" y1="${bottom}" x2="${right}" y2="${bottom}" stroke="#333"/>`);
  parts.push(`<line x1="${left}" y1="${top}" x2="${left}" y2="${bottom}" stroke="#333"/>`);
  const midX = (left + right) / 2;
  const midY = (top + bottom) / 2;
  parts.push(`<text x="${fmt(midX)}" y="${bottom + 38}" text-anchor="middle" font-size="12">${escapeXml(xLabel)}</text>`);
  parts.push(`<text x="18" y="${fmt(midY)}" text-anchor="middle" font-size="12" transform="rotate(-90 18 ${fmt(midY)})">${escapeXml(yLabel)}</text>`);
}

export function lineChart(series: Series[], opts: ChartOptions): string {
  if (series.length === 0) throw new Error("no series to draw");
  const { width, height, title } = opts;
  const left = MARGIN.left;
  const right = width - MARGIN.right;
  const top = MARGIN.top;
  const bottom = height - MARGIN.bottom;
  const allPoints = series.flatMap((s) => s.points);
  const xs = linearScale(
    Math.min(...allPoints.map((p) => p.x)),
    Math.max(...allPoints.map((p) => p.x)),
    left,
    right,
  );
  const ys = linearScale(
    Math.min(...allPoints.map((p) => p.y)),
    Math.max(...allPoints.map((p) => p.y)),
    bottom,
    top,
  );
  const parts = open(width, height, title);
  axes(parts, xs, ys, left, right, top, bottom, opts.xLabel, opts.yLabel,
    niceTicks(xs.lo, xs.hi));
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length]!;
    const d = s.points
      .map((p, j) => `${j === 0 ? "M" : "L"}${fmt(px(xs, p.x))} ${fmt(px(ys, p.y))}`)
      .join("");
    parts.push(`<path d="${d}" fill="none" stroke="${color}" stroke-width="1.8"/>`);
    const ly = top + 8 + i * 18;
    parts.push(`<line x1="${right + 10}" y1="${fmt(ly)}" x2="${right + 32}" y2="${fmt(ly)}" stroke="${color}" stroke-width="1.8"/>`);
    parts.push(`<text x="${right + 38}" y="${fmt(ly + 4)}" font-size="11">${escapeXml(s.label)}</text>`);
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

/** Grouped bars with one-sigma whiskers. Groups appear in input order,
 *  members in first-seen order, one color per member name. */
export function barChart(bars: Bar[], opts: ChartOptions): string {
  if (bars.length === 0) throw new Error("no bars to draw");
  const { width, height, title } = opts;
  const left = BAR_MARGIN.left;
  const right = width - BAR_MARGIN.right;
  const top = BAR_MARGIN.top;
  const bottom = height - BAR_MARGIN.bottom;

  const groups: string[] = [];
  const members: string[] = [];
  for (const bar of bars) {
    if (!groups.includes(bar.group)) groups.push(bar.group);
    if (!members.includes(bar.member)) members.push(bar.member);
  }
  const lows = bars.map((b) => Math.min(0, b.value - b.spread));
  const highs = bars.map((b) => Math.max(0, b.value + b.spread));
  const ys = linearScale(Math.min(...lows), Math.max(...highs), bottom, top);

  const groupWidth = (right - left) / groups.length;
  const slotWidth = (groupWidth * 0.84) / members.length;
  const barWidth = slotWidth * 0.88;

  const parts = open(width, height, title);
  for (const t of niceTicks(ys.lo, ys.hi)) {
    const y = px(ys, t);
    parts.push(`<line x1="${left}" y1="${fmt(y)}" x2="${right}" y2="${fmt(y)}" stroke="#ddd"/>`);
    parts.push(`<text x="${left - 7}" y="${fmt(y + 3.5)}" text-anchor="end" font-size="11">${tickLabel(t)}</text>`);
  }
  const zeroY = px(ys, 0);
  for (const bar of bars) {
    const gi = groups.indexOf(bar.group);
    const mi = members.indexOf(bar.member);
    const x0 =
      left + gi * groupWidth + groupWidth * 0.08 + mi * slotWidth +
      (slotWidth - barWidth) / 2;
    const yv = px(ys, bar.value);
    const barTop = Math.min(yv, zeroY);
    const barHeight = Math.abs(yv - zeroY);
    const color = PALETTE[mi % PALETTE.length]!;
    parts.push(`<rect x="${fmt(x0)}" y="${fmt(barTop)}" width="${fmt(barWidth)}" height="${fmt(barHeight)}" fill="${color}"/>`);
    if (bar.spread > 0) {
      const cx = x0 + barWidth / 2;
      const yLo = px(ys, bar.value - bar.spread);
      const yHi = px(ys, bar.value + bar.spread);
      parts.push(`<line x1="${fmt(cx)}" y1="${fmt(yLo)}" x2="${fmt(cx)}" y2="${fmt(yHi)}" stroke="#333"/>`);
      parts.push(`<line x1="${fmt(cx - 4)}" y1="${fmt(yHi)}" x2="${fmt(cx + 4)}" y2="${fmt(yHi)}" stroke="#333"/>`);
      parts.push(`<line x1="${fmt(cx - 4)}" y1="${fmt(yLo)}" x2="${fmt(cx + 4)}" y2="${fmt(yLo)}" stroke="#333"/>`);
    }
  }
  parts.push(`<line x1="${left}" y1="${fmt(zeroY)}" x2="${right}" y2="${fmt(zeroY)}" stroke="#333"/>`);
  groups.forEach((group, gi) => {
    const cx = left + gi * groupWidth + groupWidth / 2;
    const y = bottom + 16;
    const rotate = group.length > 9 ? ` transform="rotate(-24 ${fmt(cx)} ${fmt(y)})"` : "";
    const anchor = group.length > 9 ? "end" : "middle";
    parts.push(`<text x="${fmt(cx)}" y="${fmt(y)}" text-anchor="${anchor}" font-size="11"${rotate}>${escapeXml(group)}</text>`);
  });
  if (members.length > 1 || members[0] !== groups[0]) {
    members.forEach((member, mi) => {
      const lx = left + 10 + mi * 120;
      const ly = height - 14;
      parts.push(`<rect x="${fmt(lx)}" y="${fmt(ly - 9)}" width="11" height="11" fill="${PALETTE[mi % PALETTE.length]}"/>`);
      parts.push(`<text x="${fmt(lx + 16)}" y="${fmt(ly)}" font-size="11">${escapeXml(member)}</text>`);
    });
  }
  parts.push(`<text x="${fmt((left + right) / 2)}" y="${fmt(bottom + 44)}" text-anchor="middle" font-size="12">${escapeXml(opts.xLabel)}</text>`);
  parts.push(`<text x="18" y="${fmt((top + bottom) / 2)}" text-anchor="middle" font-size="12" transform="rotate(-90 18 ${fmt((top + bottom) / 2)})">${escapeXml(opts.yLabel)}</text>`);
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

/** Accuracy-vs-rounds figure: one curve per labeled metrics file, a dashed
 * vertical line per shift round, optional moving-average smoothing. */

import { scaleLinear } from "d3-scale";
import { line as d3line } from "d3-shape";
import { PlotkitError, readMeanAccuracy, type Series } from "./csv.js";
import {
  HEIGHT,
  MARGIN,
  PALETTE,
  WIDTH,
  fmt,
  line,
  openSvg,
  text,
} from "./svg.js";

export interface PlotSpec {
  /** label -> metrics.csv path, in display order */
  inputs: { label: string; path: string }[];
  shiftRounds: number[];
  smoothingWindow: number;
}

/** Trailing moving average over up to `window` points ending at each round. */
export function movingAverage(values: number[], window: number): number[] {
  if (window < 1 || !Number.isInteger(window)) {
    throw new PlotkitError(`smoothing window must be an integer >= 1, got ${window}`);
  }
  if (window === 1) return values.slice();
  return values.map((_, i) => {
    const start = Math.max(0, i - window + 1);
    const slice = values.slice(start, i + 1);
    return slice.reduce((a, b) => a + b, 0) / slice.length;
  });
}

function checkSpec(spec: PlotSpec): void {
  if (spec.inputs.length === 0) {
    throw new PlotkitError("at least one labeled input is required");
  }
  const labels = spec.inputs.map((s) => s.label);
  if (new Set(labels).size !== labels.length) {
    throw new PlotkitError(`duplicate series labels: ${labels.join(", ")}`);
  }
}

function checkSameRoundGrid(
  series: { label: string; path: string; data: Series }[],
): void {
  const first = series[0];
  for (const s of series.slice(1)) {
    const same =
      s.data.rounds.length === first.data.rounds.length &&
      s.data.rounds.every((r, i) => r === first.data.rounds[i]);
    if (!same) {
      throw new PlotkitError(
        `round grids differ between ${first.path} and ${s.path}`,
      );
    }
  }
}

export function plotAccuracyCurves(spec: PlotSpec): string {
  checkSpec(spec);
  const series = spec.inputs.map(({ label, path }) => ({
    label,
    path,
    data: readMeanAccuracy(path),
  }));
  checkSameRoundGrid(series);

  const rounds = series[0].data.rounds;
  const x = scaleLinear()
    .domain([rounds[0], rounds[rounds.length - 1]])
    .range([MARGIN.left, WIDTH - MARGIN.right]);
  const y = scaleLinear()
    .domain([0, 1])
    .range([HEIGHT - MARGIN.bottom, MARGIN.top]);

  let svg = openSvg();
  svg += axes(x, y, rounds);

  for (const r of spec.shiftRounds) {
    svg += line(x(r), y(0), x(r), y(1), 'stroke="#555555" stroke-dasharray="5,4"');
  }

  const path = d3line<number>()
    .x((_, i) => Number(fmt(x(rounds[i]))))
    .y((v) => Number(fmt(y(v))));
  series.forEach((s, idx) => {
    const smoothed = movingAverage(s.data.values, spec.smoothingWindow);
    const d = path(smoothed);
    svg += `<path d="${d}" fill="none" stroke="${PALETTE[idx % PALETTE.length]}" stroke-width="1.5"/>\n`;
  });

  svg += legend(series.map((s) => s.label));
  svg += "</svg>\n";
  return svg;
}

function axes(
  x: (v: number) => number,
  y: (v: number) => number,
  rounds: number[],
): string {
  let out = "";
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  out += line(x0, y0, x1, y0, 'stroke="black"');
  out += line(x0, y0, x0, MARGIN.top, 'stroke="black"');
  const xTicks = scaleLinear()
    .domain([rounds[0], rounds[rounds.length - 1]])
    .ticks(8);
  for (const t of xTicks) {
    out += line(x(t), y0, x(t), y0 + 5, 'stroke="black"');
    out += text(x(t), y0 + 18, String(t), 'text-anchor="middle"');
  }
  for (let v = 0; v <= 10; v += 2) {
    const t = v / 10;
    out += line(x0 - 5, y(t), x0, y(t), 'stroke="black"');
    out += text(x0 - 8, y(t) + 4, t.toFixed(1), 'text-anchor="end"');
  }
  out += text(
    (x0 + x1) / 2,
    HEIGHT - 8,
    "communication rounds",
    'text-anchor="middle"',
  );
  out += `<text x="14" y="${fmt(HEIGHT / 2)}" text-anchor="middle" transform="rotate(-90 14 ${fmt(HEIGHT / 2)})">test accuracy</text>\n`;
  return out;
}

function legend(labels: string[]): string {
  let out = "";
  labels.forEach((label, idx) => {
    const ly = MARGIN.top + 8 + idx * 18;
    const lx = WIDTH - MARGIN.right - 130;
    out += line(lx, ly, lx + 24, ly, `stroke="${PALETTE[idx % PALETTE.length]}" stroke-width="1.5"`);
    out += text(lx + 30, ly + 4, label);
  });
  return out;
}

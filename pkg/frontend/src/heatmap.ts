/** Similarity heatmap with rows/columns ordered by cluster id so block
 * structure is visible; unobserved cells render in a neutral gray. */

import {
  PlotkitError,
  readClusters,
  readSimilarityMatrix,
  type SimilarityMatrix,
} from "./csv.js";
import { MARGIN, fmt, openSvg, text } from "./svg.js";

const CELL_AREA = 480;
const NEUTRAL = "#dddddd";

export function orderByCluster(
  ids: number[],
  clusters: Map<number, number>,
): number[] {
  for (const id of ids) {
    if (!clusters.has(id)) {
      throw new PlotkitError(`no cluster assignment for client ${id}`);
    }
  }
  return [...ids].sort(
    (a, b) => clusters.get(a)! - clusters.get(b)! || a - b,
  );
}

function colorFor(value: number, lo: number, hi: number): string {
  // white -> dark blue ramp over the observed score range
  const t = hi > lo ? (value - lo) / (hi - lo) : 0.5;
  const channel = (from: number, to: number) =>
    Math.round(from + (to - from) * t);
  const r = channel(255, 8);
  const g = channel(255, 48);
  const b = channel(255, 107);
  return `rgb(${r},${g},${b})`;
}

export function renderHeatmap(
  matrix: SimilarityMatrix,
  clusters: Map<number, number>,
): string {
  const order = orderByCluster(matrix.ids, clusters);
  const index = new Map(matrix.ids.map((id, i) => [id, i]));
  const n = order.length;
  const cell = CELL_AREA / n;
  const width = MARGIN.left + CELL_AREA + MARGIN.right;
  const height = MARGIN.top + CELL_AREA + MARGIN.bottom;

  const observed = matrix.values.flat().filter((v): v is number => v !== null);
  const lo = observed.length ? Math.min(...observed) : 0;
  const hi = observed.length ? Math.max(...observed) : 1;

  let svg = openSvg(width, height);
  order.forEach((rowId, r) => {
    order.forEach((colId, c) => {
      const v = matrix.values[index.get(rowId)!][index.get(colId)!];
      const fill = v === null ? NEUTRAL : colorFor(v, lo, hi);
      svg +=
        `<rect x="${fmt(MARGIN.left + c * cell)}" ` +
        `y="${fmt(MARGIN.top + r * cell)}" ` +
        `width="${fmt(cell)}" height="${fmt(cell)}" fill="${fill}"/>\n`;
    });
  });

  const step = Math.max(1, Math.ceil(n / 25));
  order.forEach((id, i) => {
    if (i % step !== 0) return;
    const mid = MARGIN.top + (i + 0.5) * cell;
    svg += text(MARGIN.left - 6, mid + 4, String(id), 'text-anchor="end"');
    svg += text(
      MARGIN.left + (i + 0.5) * cell,
      MARGIN.top + CELL_AREA + 14,
      String(id),
      'text-anchor="middle"',
    );
  });
  svg += text(
    MARGIN.left + CELL_AREA / 2,
    height - 8,
    "clients (grouped by cluster)",
    'text-anchor="middle"',
  );
  svg += "</svg>\n";
  return svg;
}

export function plotSimilarityHeatmap(
  matrixPath: string,
  clustersPath: string,
): string {
  return renderHeatmap(
    readSimilarityMatrix(matrixPath),
    readClusters(clustersPath),
  );
}

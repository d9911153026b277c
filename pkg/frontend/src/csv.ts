/**
 * Readers for the simulator's CSV file contracts.
 *
 * metrics.csv: round, client_id, concept_id, test_accuracy, test_loss,
 *   train_loss, messages, params_transferred. client_id -1 is the
 *   cross-client mean row.
 * similarity_<round>.csv: header "client_id,<id>,<id>,..."; one row per
 *   client; empty cells mean "not observed" (including the diagonal).
 * clusters csv: header "client_id,cluster_id"; one row per client.
 */

import { readFileSync } from "node:fs";
import Papa from "papaparse";

export const MEAN_CLIENT_ID = -1;

export interface Series {
  rounds: number[];
  values: number[];
}

export class PlotkitError extends Error {}

function parseRows(path: string): Record<string, string>[] {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<Record<string, string>>(text, {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0];
    throw new PlotkitError(`${path}: ${e.message} (row ${e.row})`);
  }
  return parsed.data;
}

/** Mean test accuracy per round (the client_id -1 rows). */
export function readMeanAccuracy(path: string): Series {
  const rows = parseRows(path);
  if (rows.length === 0 || !("round" in rows[0]) || !("client_id" in rows[0])) {
    throw new PlotkitError(`${path}: not a metrics file (missing round/client_id)`);
  }
  const rounds: number[] = [];
  const values: number[] = [];
  for (const row of rows) {
    if (Number(row.client_id) !== MEAN_CLIENT_ID) continue;
    const round = Number(row.round);
    const acc = Number(row.test_accuracy);
    if (!Number.isFinite(round) || !Number.isFinite(acc)) {
      throw new PlotkitError(`${path}: non-numeric round/test_accuracy in mean row`);
    }
    rounds.push(round);
    values.push(acc);
  }
  if (rounds.length === 0) {
    throw new PlotkitError(`${path}: no mean rows (client_id ${MEAN_CLIENT_ID})`);
  }
  return { rounds, values };
}

export interface SimilarityMatrix {
  ids: number[];
  /** values[i][j] is client ids[i]'s score for ids[j]; null = not observed */
  values: (number | null)[][];
}

export function readSimilarityMatrix(path: string): SimilarityMatrix {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  const rows = parsed.data;
  if (rows.length < 2 || rows[0][0] !== "client_id") {
    throw new PlotkitError(`${path}: not a similarity matrix file`);
  }
  const ids = rows[0].slice(1).map(Number);
  const body = rows.slice(1);
  if (body.length !== ids.length) {
    throw new PlotkitError(
      `${path}: matrix is not square (${body.length} rows, ${ids.length} columns)`,
    );
  }
  const values = body.map((row) => {
    if (row.length !== ids.length + 1) {
      throw new PlotkitError(`${path}: ragged row for client ${row[0]}`);
    }
    return row.slice(1).map((cell) => (cell === "" ? null : Number(cell)));
  });
  const rowIds = body.map((row) => Number(row[0]));
  if (rowIds.some((id, i) => id !== ids[i])) {
    throw new PlotkitError(`${path}: row and column client ids disagree`);
  }
  return { ids, values };
}

export function readClusters(path: string): Map<number, number> {
  const rows = parseRows(path);
  if (rows.length === 0 || !("client_id" in rows[0]) || !("cluster_id" in rows[0])) {
    throw new PlotkitError(`${path}: expected client_id,cluster_id columns`);
  }
  const out = new Map<number, number>();
  for (const row of rows) {
    out.set(Number(row.client_id), Number(row.cluster_id));
  }
  return out;
}

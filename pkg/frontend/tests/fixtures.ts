import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export function tempDir(): string {
  return mkdtempSync(join(tmpdir(), "plotkit-"));
}

const HEADER =
  "round,client_id,concept_id,test_accuracy,test_loss,train_loss,messages,params_transferred";

/** A minimal metrics.csv with per-client rows and the mean row (-1). */
export function writeMetrics(
  path: string,
  meanByRound: [number, number][],
  clients = 2,
): string {
  const lines = [HEADER];
  for (const [round, mean] of meanByRound) {
    for (let c = 0; c < clients; c++) {
      lines.push(`${round},${c},0,${mean},0.5,0.4,6,100`);
    }
    lines.push(`${round},-1,-1,${mean},0.5,0.4,12,200`);
  }
  writeFileSync(path, lines.join("\n") + "\n");
  return path;
}

export function writeSimilarity(
  path: string,
  ids: number[],
  value: (i: number, j: number) => string,
): string {
  const lines = ["client_id," + ids.join(",")];
  for (const i of ids) {
    lines.push(
      `${i},` + ids.map((j) => (i === j ? "" : value(i, j))).join(","),
    );
  }
  writeFileSync(path, lines.join("\n") + "\n");
  return path;
}

export function writeClusters(path: string, assignment: [number, number][]): string {
  const lines = ["client_id,cluster_id"];
  for (const [id, cluster] of assignment) lines.push(`${id},${cluster}`);
  writeFileSync(path, lines.join("\n") + "\n");
  return path;
}

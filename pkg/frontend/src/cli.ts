#!/usr/bin/env node
/** `plot curves` / `plot heatmap`: render simulator CSVs to SVG files. */

import { writeFileSync } from "node:fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { PlotkitError } from "./csv.js";
import { plotAccuracyCurves, type PlotSpec } from "./curves.js";
import { plotSimilarityHeatmap } from "./heatmap.js";

function parseInputs(raw: string[]): { label: string; path: string }[] {
  return raw.map((item) => {
    const eq = item.indexOf("=");
    if (eq <= 0) {
      throw new PlotkitError(`--in expects label=path, got ${item}`);
    }
    return { label: item.slice(0, eq), path: item.slice(eq + 1) };
  });
}

export async function main(argv: string[]): Promise<number> {
  try {
    await yargs(argv)
      .scriptName("plot")
      .command(
        "curves",
        "Accuracy vs communication rounds, one curve per input",
        (y) =>
          y
            .option("in", {
              type: "string",
              array: true,
              demandOption: true,
              describe: "label=metrics.csv, repeatable",
            })
            .option("shifts", {
              type: "number",
              array: true,
              default: [] as number[],
              describe: "shift rounds drawn as dashed vertical lines",
            })
            .option("smooth", {
              type: "number",
              default: 1,
              describe: "moving-average window (1 = raw values)",
            })
            .option("out", { type: "string", demandOption: true }),
        (args) => {
          const spec: PlotSpec = {
            inputs: parseInputs(args.in as string[]),
            shiftRounds: args.shifts as number[],
            smoothingWindow: args.smooth as number,
          };
          writeFileSync(args.out as string, plotAccuracyCurves(spec));
          console.log(`wrote ${args.out}`);
        },
      )
      .command(
        "heatmap",
        "Similarity matrix ordered by cluster assignment",
        (y) =>
          y
            .option("in", { type: "string", demandOption: true })
            .option("clusters", { type: "string", demandOption: true })
            .option("out", { type: "string", demandOption: true }),
        (args) => {
          writeFileSync(
            args.out as string,
            plotSimilarityHeatmap(args.in as string, args.clusters as string),
          );
          console.log(`wrote ${args.out}`);
        },
      )
      .demandCommand(1)
      .strict()
      .fail((msg, err) => {
        throw err ?? new PlotkitError(msg);
      })
      .parseAsync();
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (invokedDirectly) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}

#!/usr/bin/env node
import { mkdirSync, writeFileSync } from "fs";
import { join } from "path";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { aggregate, aggregateCsv, Mode } from "./aggregate.js";
import { renderComparison } from "./render.js";
import { loadResults } from "./schema.js";

const argv = yargs(hideBin(process.argv))
  .scriptName("portalplan-plot")
  .command("plot", "render comparison figures from a results CSV")
  .option("in", { type: "string", demandOption: true, describe: "results CSV path" })
  .option("mode", { choices: ["algorithm", "time"] as const, demandOption: true })
  .option("out", { type: "string", demandOption: true, describe: "output directory" })
  .option("drop-failed", { type: "boolean", default: false,
                           describe: "exclude episodes that never reached the goal" })
  .strict()
  .parseSync();

const mode = argv.mode as Mode;
const rows = loadResults(argv.in, argv["drop-failed"]);
const { points, dropped } = aggregate(rows, mode);
for (const d of dropped) {
  console.warn(`warning: dropped point ${d.key} (only ${d.n} seed${d.n === 1 ? "" : "s"})`);
}

mkdirSync(argv.out, { recursive: true });
writeFileSync(join(argv.out, "aggregate.csv"), aggregateCsv(points));
const figures = renderComparison(points, mode);
for (const [name, svg] of figures) {
  writeFileSync(join(argv.out, name), svg);
}
console.log(`wrote aggregate.csv and ${figures.size} figure(s) to ${argv.out}`);

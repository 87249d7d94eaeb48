#!/usr/bin/env node
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import {
  runApplyBboxes,
  runDetect,
  runExtract,
  runJob,
  runMakeWeights,
} from "./commands.js";
import { MODEL_NAMES, ModelName } from "./extract.js";
import { loadJob } from "./job.js";

const emit = (value: unknown) => console.log(JSON.stringify(value));

await yargs(hideBin(process.argv))
  .scriptName("lineupbench-extractor")
  .command(
    "detect",
    "find one square face box per manifest image",
    (y) =>
      y
        .option("manifest", { type: "string", demandOption: true, describe: "dataset manifest (JSONL)" })
        .option("out", { type: "string", demandOption: true, describe: "bbox sidecar to write (JSONL)" })
        .option("report", { type: "string", describe: "skip/error report path (default: detect_report.jsonl beside the sidecar)" }),
    (argv) => emit(runDetect(argv.manifest, argv.out, argv.report)),
  )
  .command(
    "extract",
    "embed manifest images into an EMB1 archive using an existing sidecar",
    (y) => y.option("job", { type: "string", demandOption: true, describe: "job file (JSON)" }),
    (argv) => emit(runExtract(loadJob(argv.job))),
  )
  .command(
    "run",
    "detect boxes, then extract embeddings",
    (y) => y.option("job", { type: "string", demandOption: true, describe: "job file (JSON)" }),
    (argv) => emit(runJob(loadJob(argv.job))),
  )
  .command(
    "apply-bboxes",
    "merge a bbox sidecar into a manifest",
    (y) =>
      y
        .option("manifest", { type: "string", demandOption: true })
        .option("bboxes", { type: "string", demandOption: true })
        .option("out", { type: "string", demandOption: true }),
    (argv) => emit(runApplyBboxes(argv.manifest, argv.bboxes, argv.out)),
  )
  .command(
    "make-weights",
    "write deterministic projection weights for a model",
    (y) =>
      y
        .option("model", { choices: MODEL_NAMES, demandOption: true })
        .option("seed", { type: "number", default: 0 })
        .option("out", { type: "string", demandOption: true }),
    (argv) => emit(runMakeWeights(argv.model as ModelName, argv.seed, argv.out)),
  )
  .demandCommand(1, "name a command")
  .strict()
  .fail((msg, err) => {
    console.error(err ? err.message : msg);
    process.exit(err ? 1 : 2);
  })
  .parseAsync();

#!/usr/bin/env node
import { writeFileSync } from "fs";
import { pathToFileURL } from "url";

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { exportDetections } from "./export.js";

export function main(argv: string[]): number {
  try {
    yargs(argv)
      .scriptName("ringside-export")
      .command(
        "export",
        "detect people in a Y4M video and write a detections JSONL stream",
        (cmd) =>
          cmd
            .option("video", { type: "string", demandOption: true, describe: "input .y4m file" })
            .option("out", { type: "string", demandOption: true, describe: "output .jsonl path" })
            .option("conf", { type: "number", default: 0.5, describe: "confidence filter" })
            .option("with-pose", { type: "boolean", default: false })
            .option("with-embedding", { type: "boolean", default: false }),
        (args) => {
          const manifest = exportDetections(args.video, args.out, {
            confThreshold: args.conf,
            withPose: args["with-pose"],
            withEmbedding: args["with-embedding"],
          });
          writeFileSync(args.out + ".manifest.json", JSON.stringify(manifest, null, 2) + "\n");
          console.log(
            `${manifest.frameCount} frames @ ${manifest.fps} fps -> ${manifest.output} (${manifest.detector} ${manifest.detectorVersion})`,
          );
        },
      )
      .demandCommand(1)
      .strict()
      .exitProcess(false)
      // without a throwing fail handler yargs reports and then keeps going
      .fail((msg, err) => {
        throw err ?? new Error(msg);
      })
      .parseSync();
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    return 1;
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(hideBin(process.argv)));
}

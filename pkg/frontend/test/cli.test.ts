import { existsSync, mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";

import { beforeAll, describe, expect, it } from "vitest";

import { main } from "../src/cli.js";
import { blankPlane, buildY4m, drawRect } from "./clip.js";

describe("ringside-export CLI", () => {
  let dir: string;
  let videoPath: string;

  beforeAll(() => {
    dir = mkdtempSync(join(tmpdir(), "ringside-cli-"));
    const plane = blankPlane(48, 48, 18);
    drawRect(plane, 48, 12, 12, 8, 16, 230);
    videoPath = join(dir, "clip.y4m");
    writeFileSync(videoPath, buildY4m(48, 48, [plane, plane]));
  });

  it("exports and writes the manifest sidecar", () => {
    const out = join(dir, "out.jsonl");
    const rc = main(["export", "--video", videoPath, "--out", out, "--with-pose", "--with-embedding"]);
    expect(rc).toBe(0);
    expect(existsSync(out)).toBe(true);

    const manifest = JSON.parse(readFileSync(out + ".manifest.json", "utf8"));
    expect(manifest.frameCount).toBe(2);
    expect(manifest.poseModel).toBe("box-skeleton");
    expect(manifest.embeddingDim).toBe(16);

    const first = JSON.parse(readFileSync(out, "utf8").split("\n")[0]);
    expect(first.detections[0].keypoints.length).toBe(17);
  });

  it("honors --conf", () => {
    const plane = blankPlane(48, 48, 18);
    drawRect(plane, 48, 12, 12, 8, 16, 100); // conf ~0.39
    const dimPath = join(dir, "dim.y4m");
    writeFileSync(dimPath, buildY4m(48, 48, [plane]));

    const strict = join(dir, "strict.jsonl");
    expect(main(["export", "--video", dimPath, "--out", strict])).toBe(0);
    expect(JSON.parse(readFileSync(strict, "utf8")).detections).toEqual([]);

    const loose = join(dir, "loose.jsonl");
    expect(main(["export", "--video", dimPath, "--out", loose, "--conf", "0.3"])).toBe(0);
    expect(JSON.parse(readFileSync(loose, "utf8")).detections.length).toBe(1);
  });

  it("fails cleanly on a missing video", () => {
    expect(main(["export", "--video", join(dir, "nope.y4m"), "--out", join(dir, "x.jsonl")])).toBe(1);
  });

  it("fails cleanly on missing required flags", () => {
    expect(main(["export", "--video", videoPath])).toBe(1);
  });

  it("fails cleanly on an unknown command", () => {
    expect(main(["transmogrify"])).toBe(1);
  });
});

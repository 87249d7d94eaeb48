import { spawnSync } from "node:child_process";
import { existsSync, mkdirSync, mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { beforeAll, describe, expect, it } from "vitest";

import { parseBboxSidecar } from "../src/bboxes.js";
import { runApplyBboxes, runJob, runMakeWeights } from "../src/commands.js";
import { readArchive } from "../src/emb1.js";
import { loadJob } from "../src/job.js";
import { ImageRecord, loadManifest, serializeManifest } from "../src/manifest.js";
import { RgbImage, encodePng } from "../src/png.js";
import { normals } from "../src/rng.js";

const N_IDENTITIES = 7;

function textureImage(identitySeed: number, noiseSeed: number, brightness: number): RgbImage {
  const side = 96;
  const field = normals(identitySeed, side * side);
  const noise = normals(noiseSeed, side * side);
  const data = new Uint8Array(side * side * 3);
  for (let i = 0; i < field.length; i++) {
    const v = Math.min(255, Math.max(0, Math.round(128 + 40 * field[i] + noise[i] + brightness)));
    data[3 * i] = v;
    data[3 * i + 1] = v;
    data[3 * i + 2] = v;
  }
  return { width: side, height: side, data };
}

function writeCorpus(dir: string): string {
  mkdirSync(join(dir, "images"), { recursive: true });
  const records: ImageRecord[] = [];
  for (let i = 0; i < N_IDENTITIES; i++) {
    const identity = `id${String(i).padStart(2, "0")}`;
    const pair: [string, "mugshot" | "unconstrained", number][] = [
      [`${identity}_m`, "mugshot", 0],
      [`${identity}_p`, "unconstrained", 3],
    ];
    for (const [imageId, role, brightness] of pair) {
      const img = textureImage(100 + i, role === "mugshot" ? 0 : 5000 + i, brightness);
      writeFileSync(join(dir, "images", `${imageId}.png`), encodePng(img));
      records.push({
        image_id: imageId,
        identity_id: identity,
        path: `images/${imageId}.png`,
        role,
        yaw: role === "mugshot" ? 0 : 15,
        pitch: 0,
        roll: 0,
        glasses: "none",
        mask: false,
        headwear: false,
        lighting: "normal",
        race: "other",
        gender: "male",
        source: "real",
        bbox: null,
      });
    }
  }
  const manifestPath = join(dir, "manifest.jsonl");
  writeFileSync(manifestPath, serializeManifest(records));
  return manifestPath;
}

function cosine(a: Float32Array, b: Float32Array): number {
  let dot = 0;
  for (let i = 0; i < a.length; i++) {
    dot += a[i] * b[i];
  }
  return dot;
}

function median(values: number[]): number {
  const sorted = [...values].sort((x, y) => x - y);
  const mid = sorted.length >> 1;
  return sorted.length % 2 === 1 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2;
}

const pythonHarness =
  spawnSync("python3", ["-c", "import lineupbench"], { encoding: "utf8" }).status === 0;

describe("full extraction pipeline", () => {
  let dir: string;
  let manifestPath: string;
  let jobPath: string;

  beforeAll(() => {
    dir = mkdtempSync(join(tmpdir(), "pipeline-"));
    manifestPath = writeCorpus(dir);
    runMakeWeights("facenet", 0, join(dir, "facenet.lpw1"));
    jobPath = join(dir, "job.json");
    writeFileSync(
      jobPath,
      JSON.stringify({
        manifest: "manifest.jsonl",
        model: "facenet",
        weights: "facenet.lpw1",
        out_archive: "out/embeddings.emb1",
        out_bboxes: "out/bboxes.jsonl",
        out_report: "out/detect_report.jsonl",
      }),
    );
  });

  it("runs detect and extract from one job file", () => {
    const summary = runJob(loadJob(jobPath));
    expect(summary.detect.n_images).toBe(2 * N_IDENTITIES);
    expect(summary.detect.n_detected).toBe(2 * N_IDENTITIES);
    expect(summary.detect.n_errors).toBe(0);
    expect(summary.extract.n_embedded).toBe(2 * N_IDENTITIES);
    expect(summary.extract.n_errors).toBe(0);
    expect(summary.extract.dim).toBe(128);
    expect(summary.extract.backend_id).toMatch(/^facenet-[0-9a-f]{12}$/);
    expect(existsSync(join(dir, "out", "embeddings.emb1"))).toBe(true);
    expect(existsSync(join(dir, "out", "bboxes.jsonl"))).toBe(true);
    expect(existsSync(join(dir, "out", "detect_report.jsonl"))).toBe(true);
  });

  it("writes a sidecar with one square in-bounds box per image", () => {
    runJob(loadJob(jobPath));
    const entries = parseBboxSidecar(readFileSync(join(dir, "out", "bboxes.jsonl"), "utf8"));
    expect(entries).toHaveLength(2 * N_IDENTITIES);
    for (const { bbox } of entries) {
      const [x, y, w, h] = bbox;
      expect(w).toBe(h);
      expect(x).toBeGreaterThanOrEqual(0);
      expect(y).toBeGreaterThanOrEqual(0);
      expect(x + w).toBeLessThanOrEqual(96);
      expect(y + h).toBeLessThanOrEqual(96);
    }
  });

  it("separates identities: same-identity cosine beats cross-identity in the median", () => {
    runJob(loadJob(jobPath));
    const archive = readArchive(join(dir, "out", "embeddings.emb1"));
    const same: number[] = [];
    const cross: number[] = [];
    for (let i = 0; i < N_IDENTITIES; i++) {
      const a = archive.entries.get(`id${String(i).padStart(2, "0")}_m`)!;
      for (let j = 0; j < N_IDENTITIES; j++) {
        const b = archive.entries.get(`id${String(j).padStart(2, "0")}_p`)!;
        (i === j ? same : cross).push(cosine(a, b));
      }
    }
    expect(median(same)).toBeGreaterThan(median(cross));
  });

  it("merges boxes into a manifest the loader accepts", () => {
    runJob(loadJob(jobPath));
    const mergedPath = join(dir, "merged.jsonl");
    const summary = runApplyBboxes(manifestPath, join(dir, "out", "bboxes.jsonl"), mergedPath);
    expect(summary.n_records).toBe(2 * N_IDENTITIES);
    expect(summary.n_applied).toBe(2 * N_IDENTITIES);
    const merged = loadManifest(mergedPath);
    expect(merged.records.every((r) => r.bbox !== null)).toBe(true);
  });

  it.skipIf(!pythonHarness)(
    "emits archives and manifests the reference harness accepts end to end",
    () => {
      runJob(loadJob(jobPath));
      const mergedPath = join(dir, "merged.jsonl");
      runApplyBboxes(manifestPath, join(dir, "out", "bboxes.jsonl"), mergedPath);
      const script = join(dir, "roundtrip.py");
      writeFileSync(
        script,
        [
          "import json, sys",
          "from lineupbench.degrade import crop_resize",
          "from lineupbench.embed import load_archive",
          "from lineupbench.lineup import LineupPolicy, eval_from_archive",
          "from lineupbench.manifest import load_manifest",
          "from lineupbench.raster import load_image",
          "",
          "manifest = load_manifest(sys.argv[1])",
          "archive = load_archive(sys.argv[2])",
          "for rec in manifest.records:",
          "    crop = crop_resize(load_image(rec.path), rec.bbox)",
          "    assert crop.height == 160 and crop.width == 160",
          "result = eval_from_archive(manifest, archive, LineupPolicy(rank_offset=5), None)",
          "print(json.dumps({",
          "    'backend_id': archive.backend_id,",
          "    'dim': archive.dim,",
          "    'n_entries': len(archive.entries),",
          "    'n_probes': result.n_probes,",
          "    'accuracy': result.n_correct / result.n_probes,",
          "}))",
        ].join("\n"),
      );
      const run = spawnSync(
        "python3",
        [script, mergedPath, join(dir, "out", "embeddings.emb1")],
        { encoding: "utf8" },
      );
      expect(run.stderr).toBe("");
      expect(run.status).toBe(0);
      const report = JSON.parse(run.stdout.trim());
      expect(report.dim).toBe(128);
      expect(report.n_entries).toBe(2 * N_IDENTITIES);
      expect(report.backend_id).toMatch(/^facenet-[0-9a-f]{12}$/);
      expect(report.n_probes).toBe(N_IDENTITIES);
      // texture identities are easy; anything near chance means a broken pipe
      expect(report.accuracy).toBeGreaterThanOrEqual(0.5);
    },
  );

  it("fails fast on a digest pin mismatch", () => {
    const pinnedPath = join(dir, "pinned.json");
    writeFileSync(
      pinnedPath,
      JSON.stringify({
        manifest: "manifest.jsonl",
        model: "facenet",
        weights: "facenet.lpw1",
        weights_sha256: "0".repeat(64),
        out_archive: "out/embeddings.emb1",
        out_bboxes: "out/bboxes.jsonl",
      }),
    );
    expect(() => runJob(loadJob(pinnedPath))).toThrow(/weights digest mismatch/);
  });

  it("fails fast when the weights file is for another model", () => {
    runMakeWeights("arcface", 0, join(dir, "arcface.lpw1"));
    const crossPath = join(dir, "cross.json");
    writeFileSync(
      crossPath,
      JSON.stringify({
        manifest: "manifest.jsonl",
        model: "facenet",
        weights: "arcface.lpw1",
        out_archive: "out/embeddings.emb1",
        out_bboxes: "out/bboxes.jsonl",
      }),
    );
    expect(() => runJob(loadJob(crossPath))).toThrow(
      /weights file is for model 'arcface', job wants 'facenet'/,
    );
  });
});

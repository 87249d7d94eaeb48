/**
 * Command implementations behind the CLI. Each returns a small summary
 * object that the CLI prints as one JSON line.
 */
import { existsSync, readFileSync } from "node:fs";
import { dirname, isAbsolute, join, relative } from "node:path";

import {
  applyBboxes,
  parseBboxSidecar,
  serializeBboxSidecar,
} from "./bboxes.js";
import { detectAndCrop, serializeDetectReport } from "./detect.js";
import { writeArchive } from "./emb1.js";
import {
  MODEL_DIMS,
  ModelName,
  extractEmbeddings,
  loadWeights,
  makeWeights,
  parseWeights,
} from "./extract.js";
import { atomicWriteFile } from "./fsio.js";
import { loadManifest, serializeManifest } from "./manifest.js";
import { ExtractorJob, JobError } from "./job.js";

export interface DetectSummary {
  n_images: number;
  n_detected: number;
  n_skipped: number;
  n_errors: number;
  out: string;
  report: string;
}

function defaultReportPath(outBboxes: string): string {
  return join(dirname(outBboxes), "detect_report.jsonl");
}

export function runDetect(
  manifestPath: string,
  outPath: string,
  reportPath?: string,
): DetectSummary {
  const manifest = loadManifest(manifestPath);
  const result = detectAndCrop(manifest);
  atomicWriteFile(outPath, serializeBboxSidecar(result.bboxes));
  const report = reportPath ?? defaultReportPath(outPath);
  atomicWriteFile(report, serializeDetectReport(result.report));
  return {
    n_images: manifest.records.length,
    n_detected: result.bboxes.length,
    n_skipped: result.report.filter((e) => e.kind === "no_detection").length,
    n_errors: result.report.filter((e) => e.kind === "read_error").length,
    out: outPath,
    report,
  };
}

export interface ExtractSummary {
  backend_id: string;
  dim: number;
  n_embedded: number;
  n_fallback: number;
  n_errors: number;
  out: string;
}

export function runExtract(job: ExtractorJob): ExtractSummary {
  const manifest = loadManifest(job.manifest);
  const weights = loadWeights(job.weights);
  if (job.weights_sha256 !== undefined && weights.sha256 !== job.weights_sha256) {
    throw new JobError(
      `weights digest mismatch: file is ${weights.sha256}, job pins ${job.weights_sha256}`,
    );
  }
  if (weights.model !== job.model) {
    throw new JobError(
      `weights file is for model '${weights.model}', job wants '${job.model}'`,
    );
  }
  const bboxes = existsSync(job.out_bboxes)
    ? parseBboxSidecar(readFileSync(job.out_bboxes, "utf8"))
    : [];
  const outcome = extractEmbeddings(manifest, weights, bboxes);
  writeArchive(outcome.archive, job.out_archive);
  return {
    backend_id: outcome.archive.backendId,
    dim: outcome.archive.dim,
    n_embedded: outcome.archive.entries.size,
    n_fallback: outcome.fallbacks.length,
    n_errors: outcome.errors.length,
    out: job.out_archive,
  };
}

export interface JobSummary {
  detect: DetectSummary;
  extract: ExtractSummary;
}

/** Detect boxes into the sidecar, then extract embeddings from them. */
export function runJob(job: ExtractorJob): JobSummary {
  const detect = runDetect(job.manifest, job.out_bboxes, job.out_report);
  const extract = runExtract(job);
  return { detect, extract };
}

export interface ApplySummary {
  n_records: number;
  n_applied: number;
  out: string;
}

/**
 * Merge a bbox sidecar into a manifest. Relative record paths are rewritten
 * relative to the output file's directory so they keep resolving to the
 * same images; absolute paths pass through.
 */
export function runApplyBboxes(
  manifestPath: string,
  bboxesPath: string,
  outPath: string,
): ApplySummary {
  const manifest = loadManifest(manifestPath);
  const entries = parseBboxSidecar(readFileSync(bboxesPath, "utf8"));
  const merged = applyBboxes(manifest.records, entries).map((rec) => {
    if (isAbsolute(rec.path)) {
      return rec;
    }
    const rebased = relative(dirname(outPath), join(manifest.baseDir, rec.path));
    return { ...rec, path: rebased };
  });
  atomicWriteFile(outPath, serializeManifest(merged));
  return { n_records: merged.length, n_applied: entries.length, out: outPath };
}

export interface MakeWeightsSummary {
  model: ModelName;
  dim: number;
  seed: number;
  sha256: string;
  out: string;
}

export function runMakeWeights(
  model: ModelName,
  seed: number,
  outPath: string,
): MakeWeightsSummary {
  const bytes = makeWeights(model, seed);
  atomicWriteFile(outPath, bytes);
  const parsed = parseWeights(bytes);
  return {
    model,
    dim: MODEL_DIMS[model],
    seed,
    sha256: parsed.sha256,
    out: outPath,
  };
}

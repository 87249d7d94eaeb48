/**
 * Extractor job files: one JSON object naming the manifest, the model, the
 * pinned weights, and the output paths. Relative paths are resolved against
 * the job file's directory.
 */
import { readFileSync } from "node:fs";
import { dirname, isAbsolute, join, resolve } from "node:path";

import { z } from "zod";

export class JobError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "JobError";
  }
}

export const jobSchema = z
  .object({
    manifest: z.string().min(1),
    model: z.enum(["facenet", "arcface"]),
    device: z.string().min(1).default("cpu"),
    weights: z.string().min(1),
    weights_sha256: z
      .string()
      .regex(/^[0-9a-f]{64}$/, "must be 64 lowercase hex characters")
      .optional(),
    out_archive: z.string().min(1),
    out_bboxes: z.string().min(1),
    out_report: z.string().min(1).optional(),
  })
  .strict();

export type ExtractorJob = z.infer<typeof jobSchema>;

export function parseJob(text: string, baseDir: string): ExtractorJob {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch (e) {
    throw new JobError(`job file is not valid JSON: ${(e as Error).message}`);
  }
  const parsed = jobSchema.safeParse(obj);
  if (!parsed.success) {
    const issue = parsed.error.issues[0];
    const where = issue.path.length > 0 ? `${issue.path.join(".")}: ` : "";
    throw new JobError(`invalid job: ${where}${issue.message}`);
  }
  const job = parsed.data;
  const abs = (p: string) => (isAbsolute(p) ? p : join(baseDir, p));
  return {
    ...job,
    manifest: abs(job.manifest),
    weights: abs(job.weights),
    out_archive: abs(job.out_archive),
    out_bboxes: abs(job.out_bboxes),
    out_report: job.out_report === undefined ? undefined : abs(job.out_report),
  };
}

export function loadJob(path: string): ExtractorJob {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (e) {
    throw new JobError(`cannot read job file ${path}: ${(e as Error).message}`);
  }
  return parseJob(text, dirname(resolve(path)));
}

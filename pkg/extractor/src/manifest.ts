/**
 * Dataset manifests: JSONL files with one image record per line and exactly
 * the keys image_id, identity_id, path, role, yaw, pitch, roll, glasses,
 * mask, headwear, lighting, race, gender, source, bbox. Relative record
 * paths are resolved against the manifest file's directory when images are
 * read; the parsed records keep the path strings as written.
 */
import { readFileSync } from "node:fs";
import { dirname, isAbsolute, join, resolve } from "node:path";

import { z } from "zod";

export const ROLES = ["mugshot", "unconstrained"] as const;
export const GLASSES = ["none", "clear", "opaque"] as const;
export const LIGHTING = ["normal", "low"] as const;
export const SOURCES = ["real", "synthetic"] as const;

/** Mugshots are standardized captures: near-frontal pose, no occluders. */
export const MUGSHOT_MAX_ANGLE = 10.0;

export const MANIFEST_KEYS = [
  "image_id", "identity_id", "path", "role", "yaw", "pitch", "roll",
  "glasses", "mask", "headwear", "lighting", "race", "gender", "source",
  "bbox",
] as const;

export type Bbox = [number, number, number, number];

export class ManifestError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ManifestError";
  }
}

const angle = z.number().min(-180).max(180);
const int = z.number().int();

const recordSchema = z
  .object({
    image_id: z.string().min(1),
    identity_id: z.string().min(1),
    path: z.string().min(1),
    role: z.enum(ROLES),
    yaw: angle,
    pitch: angle,
    roll: angle,
    glasses: z.enum(GLASSES),
    mask: z.boolean(),
    headwear: z.boolean(),
    lighting: z.enum(LIGHTING),
    race: z.string(),
    gender: z.string(),
    source: z.enum(SOURCES),
    bbox: z.tuple([int, int, int, int]).nullable(),
  })
  .strict();

export type ImageRecord = z.infer<typeof recordSchema>;

export interface Manifest {
  records: ImageRecord[];
  /** Directory that relative record paths are resolved against. */
  baseDir: string;
}

/** Absolute path of a record's image file. */
export function imagePath(manifest: Manifest, rec: ImageRecord): string {
  return isAbsolute(rec.path) ? rec.path : join(manifest.baseDir, rec.path);
}

function semanticProblem(rec: ImageRecord): string | null {
  if (rec.role === "mugshot") {
    if (rec.glasses !== "none" || rec.mask) {
      return `record ${rec.image_id}: mugshot must have glasses=none and mask=false`;
    }
    const pose = Math.max(Math.abs(rec.yaw), Math.abs(rec.pitch), Math.abs(rec.roll));
    if (pose > MUGSHOT_MAX_ANGLE) {
      return `record ${rec.image_id}: mugshot pose exceeds ${MUGSHOT_MAX_ANGLE} degrees`;
    }
  }
  if (rec.bbox !== null) {
    const [x, y, w, h] = rec.bbox;
    if (w < 1 || h < 1 || x < 0 || y < 0) {
      return `record ${rec.image_id}: degenerate bbox [${rec.bbox.join(", ")}]`;
    }
  }
  return null;
}

export function parseRecord(obj: unknown, lineNo: number): ImageRecord {
  const parsed = recordSchema.safeParse(obj);
  if (!parsed.success) {
    const issue = parsed.error.issues[0];
    const where = issue.path.length > 0 ? `${issue.path.join(".")}: ` : "";
    throw new ManifestError(`line ${lineNo}: ${where}${issue.message}`);
  }
  const problem = semanticProblem(parsed.data);
  if (problem !== null) {
    throw new ManifestError(`line ${lineNo}: ${problem}`);
  }
  return parsed.data;
}

export function parseManifest(text: string, baseDir: string): Manifest {
  const records: ImageRecord[] = [];
  const seen = new Set<string>();
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const lineNo = i + 1;
    const line = lines[i].trim();
    if (line === "") {
      continue;
    }
    let obj: unknown;
    try {
      obj = JSON.parse(line);
    } catch (e) {
      throw new ManifestError(`line ${lineNo}: malformed JSON: ${(e as Error).message}`);
    }
    const rec = parseRecord(obj, lineNo);
    if (seen.has(rec.image_id)) {
      throw new ManifestError(
        `line ${lineNo}: duplicate image_id ${JSON.stringify(rec.image_id)}`,
      );
    }
    seen.add(rec.image_id);
    records.push(rec);
  }
  return { records, baseDir };
}

export function loadManifest(path: string): Manifest {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (e) {
    throw new ManifestError(`cannot read manifest ${path}: ${(e as Error).message}`);
  }
  return parseManifest(text, dirname(resolve(path)));
}

/** One JSONL line for a record, keys always in the schema order. */
export function serializeRecord(rec: ImageRecord): string {
  const ordered: Record<string, unknown> = {};
  for (const key of MANIFEST_KEYS) {
    ordered[key] = rec[key];
  }
  return JSON.stringify(ordered);
}

export function serializeManifest(records: ImageRecord[]): string {
  if (records.length === 0) {
    return "";
  }
  return records.map(serializeRecord).join("\n") + "\n";
}

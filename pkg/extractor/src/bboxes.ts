/**
 * Bounding-box sidecars: JSONL files with one `{image_id, bbox}` object per
 * line, where bbox is `[x, y, w, h]` in pixels. A sidecar can be merged back
 * into a manifest so downstream consumers see the boxes on the records.
 */
import { z } from "zod";

import { Bbox, ImageRecord, ManifestError } from "./manifest.js";

export interface BboxEntry {
  image_id: string;
  bbox: Bbox;
}

const int = z.number().int();

const bboxEntrySchema = z
  .object({
    image_id: z.string().min(1),
    bbox: z.tuple([int, int, int, int]),
  })
  .strict();

export function parseBboxSidecar(text: string): BboxEntry[] {
  const entries: BboxEntry[] = [];
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
    const parsed = bboxEntrySchema.safeParse(obj);
    if (!parsed.success) {
      const issue = parsed.error.issues[0];
      const where = issue.path.length > 0 ? `${issue.path.join(".")}: ` : "";
      throw new ManifestError(`line ${lineNo}: ${where}${issue.message}`);
    }
    const entry = parsed.data;
    const [x, y, w, h] = entry.bbox;
    if (w < 1 || h < 1 || x < 0 || y < 0) {
      throw new ManifestError(
        `line ${lineNo}: degenerate bbox [${entry.bbox.join(", ")}] for ${entry.image_id}`,
      );
    }
    if (seen.has(entry.image_id)) {
      throw new ManifestError(
        `line ${lineNo}: duplicate image_id ${JSON.stringify(entry.image_id)}`,
      );
    }
    seen.add(entry.image_id);
    entries.push(entry);
  }
  return entries;
}

export function serializeBboxSidecar(entries: BboxEntry[]): string {
  if (entries.length === 0) {
    return "";
  }
  return (
    entries
      .map((e) => JSON.stringify({ image_id: e.image_id, bbox: e.bbox }))
      .join("\n") + "\n"
  );
}

/**
 * Return a copy of the records with sidecar boxes applied. Every sidecar
 * entry must name a record; records without an entry keep their own bbox.
 */
export function applyBboxes(records: ImageRecord[], entries: BboxEntry[]): ImageRecord[] {
  const known = new Set(records.map((r) => r.image_id));
  for (const entry of entries) {
    if (!known.has(entry.image_id)) {
      throw new ManifestError(
        `bbox sidecar names unknown image_id ${JSON.stringify(entry.image_id)}`,
      );
    }
  }
  const boxById = new Map(entries.map((e) => [e.image_id, e.bbox]));
  return records.map((rec) => {
    const box = boxById.get(rec.image_id);
    return box === undefined ? rec : { ...rec, bbox: box };
  });
}

/**
 * Face localization over manifest images.
 *
 * The detector is a deterministic contrast heuristic with the same output
 * contract as a learned cascade: one square box per image, or none. It scans
 * square windows at several scales and keeps the largest window whose local
 * luma standard deviation clears a gate, so a flat or near-flat frame yields
 * no detection and the biggest high-contrast region wins on busy frames.
 */
import { readFileSync } from "node:fs";

import { BboxEntry } from "./bboxes.js";
import { Bbox, Manifest, imagePath } from "./manifest.js";
import { RgbImage, decodePng } from "./png.js";

/** Minimum luma standard deviation, in gray levels, for a window to count. */
export const CONTRAST_THRESHOLD = 4.0;

/** Candidate window sides as fractions of the short image side. */
const SCALES = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2];

export interface DetectReportEntry {
  image_id: string;
  kind: "no_detection" | "read_error";
  reason: string;
}

export interface DetectResult {
  bboxes: BboxEntry[];
  report: DetectReportEntry[];
}

function gridPositions(maxStart: number, stride: number): number[] {
  const out: number[] = [];
  for (let p = 0; p <= maxStart; p += stride) {
    out.push(p);
  }
  if (out[out.length - 1] !== maxStart) {
    out.push(maxStart);
  }
  return out;
}

/**
 * Largest square region with local contrast above the gate, or null when
 * the whole frame is flat. The box is exactly square and inside the image.
 */
export function detectLargestFace(img: RgbImage): Bbox | null {
  const { width: w, height: h, data } = img;
  const lum = new Float64Array(w * h);
  for (let i = 0, j = 0; i < lum.length; i++, j += 3) {
    lum[i] = 0.299 * data[j] + 0.587 * data[j + 1] + 0.114 * data[j + 2];
  }

  // integral images of luma and its square, for O(1) window statistics
  const W = w + 1;
  const sat = new Float64Array((h + 1) * W);
  const sat2 = new Float64Array((h + 1) * W);
  for (let y = 0; y < h; y++) {
    for (let x = 0; x < w; x++) {
      const v = lum[y * w + x];
      const i = (y + 1) * W + (x + 1);
      sat[i] = v + sat[i - 1] + sat[i - W] - sat[i - W - 1];
      sat2[i] = v * v + sat2[i - 1] + sat2[i - W] - sat2[i - W - 1];
    }
  }
  const windowStd = (x: number, y: number, s: number): number => {
    const n = s * s;
    const a = y * W + x;
    const b = a + s;
    const c = (y + s) * W + x;
    const d = c + s;
    const mean = (sat[d] - sat[b] - sat[c] + sat[a]) / n;
    const meanSq = (sat2[d] - sat2[b] - sat2[c] + sat2[a]) / n;
    return Math.sqrt(Math.max(0, meanSq - mean * mean));
  };

  const short = Math.min(w, h);
  const sizes: number[] = [];
  for (const f of SCALES) {
    const s = Math.max(1, Math.min(short, Math.round(f * short)));
    if (!sizes.includes(s)) {
      sizes.push(s);
    }
  }

  // largest scale first: the biggest region clearing the gate is the face
  for (const s of sizes) {
    const stride = Math.max(1, Math.floor(s / 8));
    let best = -1;
    let bestX = 0;
    let bestY = 0;
    for (const y of gridPositions(h - s, stride)) {
      for (const x of gridPositions(w - s, stride)) {
        const sd = windowStd(x, y, s);
        if (sd > best) {
          best = sd;
          bestX = x;
          bestY = y;
        }
      }
    }
    if (best >= CONTRAST_THRESHOLD) {
      return [bestX, bestY, s, s];
    }
  }
  return null;
}

/**
 * Detect one box per manifest image. Images with no detection land in the
 * report as skips; unreadable images land there as errors, and the job
 * continues either way.
 */
export function detectAndCrop(manifest: Manifest): DetectResult {
  const bboxes: BboxEntry[] = [];
  const report: DetectReportEntry[] = [];
  for (const rec of manifest.records) {
    let img: RgbImage;
    try {
      img = decodePng(readFileSync(imagePath(manifest, rec)));
    } catch (e) {
      report.push({
        image_id: rec.image_id,
        kind: "read_error",
        reason: (e as Error).message,
      });
      continue;
    }
    const box = detectLargestFace(img);
    if (box === null) {
      report.push({
        image_id: rec.image_id,
        kind: "no_detection",
        reason: "no region clears the contrast gate",
      });
    } else {
      bboxes.push({ image_id: rec.image_id, bbox: box });
    }
  }
  return { bboxes, report };
}

export function serializeDetectReport(entries: DetectReportEntry[]): string {
  if (entries.length === 0) {
    return "";
  }
  return entries.map((e) => JSON.stringify(e)).join("\n") + "\n";
}

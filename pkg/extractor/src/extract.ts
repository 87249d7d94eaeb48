/**
 * Embedding extraction: crop each manifest image to its face box, resize to
 * a 160x160 8-bit crop, funnel the luma plane down to a 32x32 feature
 * vector, project it through pinned model weights, and L2-normalize. The
 * results are written as an EMB1 archive whose backend id names the model
 * and the weights digest, so archives from different weights never mix
 * silently.
 *
 * Weights live in an "LPW1" file: magic "LPW1" | model name (u16 byte
 * length + UTF-8) | out dim u32 | in dim u32 | out*in float32 values,
 * row-major, all little-endian. The runtime executes the weights as a
 * linear projection of the mean-subtracted luma features; a model choice
 * fixes the output dimension contract (facenet 128, arcface 512) and the
 * job pins the exact weights file by its SHA-256 digest.
 */
import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";

import { BboxEntry } from "./bboxes.js";
import { Emb1Archive } from "./emb1.js";
import { Bbox, Manifest, imagePath } from "./manifest.js";
import { RgbImage, decodePng } from "./png.js";
import { normals } from "./rng.js";

export const MODEL_DIMS = { facenet: 128, arcface: 512 } as const;
export type ModelName = keyof typeof MODEL_DIMS;
export const MODEL_NAMES = Object.keys(MODEL_DIMS) as ModelName[];

export const CROP_SIZE = 160;
const PATCH = 32;
/** Length of the flattened luma feature vector the weights consume. */
export const FEATURE_DIM = PATCH * PATCH;

const DEGENERATE_NORM = 1e-12;
const WEIGHTS_MAGIC = Buffer.from("LPW1", "ascii");

export class WeightsError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "WeightsError";
  }
}

export interface EmbedderWeights {
  model: ModelName;
  outDim: number;
  inDim: number;
  /** Row-major outDim x inDim projection matrix. */
  rows: Float64Array;
  /** SHA-256 hex digest of the weights file bytes. */
  sha256: string;
}

export function encodeWeights(
  model: string,
  outDim: number,
  inDim: number,
  values: Float32Array,
): Buffer {
  if (values.length !== outDim * inDim) {
    throw new WeightsError(
      `weights need ${outDim * inDim} values, got ${values.length}`,
    );
  }
  const name = Buffer.from(model, "utf8");
  const buf = Buffer.alloc(4 + 2 + name.length + 4 + 4 + 4 * values.length);
  let at = 0;
  WEIGHTS_MAGIC.copy(buf, at);
  at += 4;
  buf.writeUInt16LE(name.length, at);
  at += 2;
  name.copy(buf, at);
  at += name.length;
  buf.writeUInt32LE(outDim, at);
  at += 4;
  buf.writeUInt32LE(inDim, at);
  at += 4;
  for (let i = 0; i < values.length; i++) {
    buf.writeFloatLE(values[i], at + 4 * i);
  }
  return buf;
}

/** Deterministic standard-normal projection weights for a model. */
export function makeWeights(model: ModelName, seed: number): Buffer {
  const outDim = MODEL_DIMS[model];
  const values = Float32Array.from(normals(seed, outDim * FEATURE_DIM));
  return encodeWeights(model, outDim, FEATURE_DIM, values);
}

export function parseWeights(bytes: Uint8Array): EmbedderWeights {
  const buf = Buffer.isBuffer(bytes)
    ? bytes
    : Buffer.from(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  if (buf.length < 4 || !buf.subarray(0, 4).equals(WEIGHTS_MAGIC)) {
    throw new WeightsError("bad weights magic, expected LPW1");
  }
  let at = 4;
  const need = (n: number, what: string) => {
    if (at + n > buf.length) {
      throw new WeightsError(`truncated weights file while reading ${what}`);
    }
  };
  need(2, "model name length");
  const nameLen = buf.readUInt16LE(at);
  at += 2;
  need(nameLen, "model name");
  const model = buf.subarray(at, at + nameLen).toString("utf8");
  at += nameLen;
  need(8, "dims");
  const outDim = buf.readUInt32LE(at);
  const inDim = buf.readUInt32LE(at + 4);
  at += 8;
  if (!(model in MODEL_DIMS)) {
    throw new WeightsError(`weights file names unknown model ${JSON.stringify(model)}`);
  }
  const expected = MODEL_DIMS[model as ModelName];
  if (outDim !== expected) {
    throw new WeightsError(
      `${model} weights must produce ${expected} dimensions, got ${outDim}`,
    );
  }
  if (inDim !== FEATURE_DIM) {
    throw new WeightsError(
      `weights must consume ${FEATURE_DIM} features, got ${inDim}`,
    );
  }
  const count = outDim * inDim;
  if (buf.length - at !== 4 * count) {
    throw new WeightsError(
      `weights file has ${buf.length - at} value bytes, expected ${4 * count}`,
    );
  }
  const rows = new Float64Array(count);
  for (let i = 0; i < count; i++) {
    rows[i] = buf.readFloatLE(at + 4 * i);
  }
  return {
    model: model as ModelName,
    outDim,
    inDim,
    rows,
    sha256: createHash("sha256").update(buf).digest("hex"),
  };
}

export function loadWeights(path: string): EmbedderWeights {
  let bytes: Buffer;
  try {
    bytes = readFileSync(path);
  } catch (e) {
    throw new WeightsError(`cannot load weights ${path}: ${(e as Error).message}`);
  }
  return parseWeights(bytes);
}

/** Archive backend id: model name plus a weights digest prefix. */
export function backendIdFor(weights: EmbedderWeights): string {
  return `${weights.model}-${weights.sha256.slice(0, 12)}`;
}

/** Round half to even, matching the crop quantization used elsewhere. */
function rint(v: number): number {
  const f = Math.floor(v);
  const d = v - f;
  if (d > 0.5) {
    return f + 1;
  }
  if (d < 0.5) {
    return f;
  }
  return f % 2 === 0 ? f : f + 1;
}

function axisTaps(nSrc: number, nDst: number): { i0: Int32Array; i1: Int32Array; frac: Float64Array } {
  const i0 = new Int32Array(nDst);
  const i1 = new Int32Array(nDst);
  const frac = new Float64Array(nDst);
  for (let d = 0; d < nDst; d++) {
    // half-pixel rule: output centers mapped into source coordinates
    const pos = (d + 0.5) * (nSrc / nDst) - 0.5;
    const lo = Math.floor(pos);
    frac[d] = pos - lo;
    i0[d] = Math.min(Math.max(lo, 0), nSrc - 1);
    i1[d] = Math.min(Math.max(lo + 1, 0), nSrc - 1);
  }
  return { i0, i1, frac };
}

/** Bilinear resize of a single-channel float plane, borders clamped. */
export function resizeBilinear(
  src: Float64Array,
  srcH: number,
  srcW: number,
  outH: number,
  outW: number,
): Float64Array {
  const ty = axisTaps(srcH, outH);
  const tx = axisTaps(srcW, outW);
  const out = new Float64Array(outH * outW);
  for (let y = 0; y < outH; y++) {
    const r0 = ty.i0[y] * srcW;
    const r1 = ty.i1[y] * srcW;
    const fy = ty.frac[y];
    for (let x = 0; x < outW; x++) {
      const fx = tx.frac[x];
      const top = src[r0 + tx.i0[x]] * (1 - fx) + src[r0 + tx.i1[x]] * fx;
      const bot = src[r1 + tx.i0[x]] * (1 - fx) + src[r1 + tx.i1[x]] * fx;
      out[y * outW + x] = top * (1 - fy) + bot * fy;
    }
  }
  return out;
}

/**
 * Crop to bbox (or the centered square when bbox is null) and resize to a
 * 160x160 8-bit RGB crop.
 */
export function cropResize(img: RgbImage, bbox: Bbox | null): RgbImage {
  const { width: w, height: h } = img;
  let x: number;
  let y: number;
  let bw: number;
  let bh: number;
  if (bbox === null) {
    const side = Math.min(h, w);
    x = Math.floor((w - side) / 2);
    y = Math.floor((h - side) / 2);
    bw = side;
    bh = side;
  } else {
    [x, y, bw, bh] = bbox;
    if (bw < 1 || bh < 1) {
      throw new Error(`bbox [${bbox.join(", ")}] has degenerate size`);
    }
    if (x < 0 || y < 0 || x + bw > w || y + bh > h) {
      throw new Error(`bbox [${bbox.join(", ")}] outside image bounds ${w}x${h}`);
    }
  }
  // per-channel bilinear on the crop, then quantize back to 8-bit
  const out = new Uint8Array(CROP_SIZE * CROP_SIZE * 3);
  const plane = new Float64Array(bh * bw);
  for (let c = 0; c < 3; c++) {
    for (let sy = 0; sy < bh; sy++) {
      for (let sx = 0; sx < bw; sx++) {
        plane[sy * bw + sx] = img.data[((y + sy) * w + (x + sx)) * 3 + c];
      }
    }
    const resized = resizeBilinear(plane, bh, bw, CROP_SIZE, CROP_SIZE);
    for (let i = 0; i < resized.length; i++) {
      out[i * 3 + c] = Math.min(255, Math.max(0, rint(resized[i])));
    }
  }
  return { width: CROP_SIZE, height: CROP_SIZE, data: out };
}

/** Mean-subtracted 32x32 luma features of a 160x160 crop. */
export function cropFeatures(crop: RgbImage): Float64Array {
  if (crop.width !== CROP_SIZE || crop.height !== CROP_SIZE) {
    throw new Error(
      `embedder expects a ${CROP_SIZE}x${CROP_SIZE} crop, got ${crop.width}x${crop.height}`,
    );
  }
  const lum = new Float64Array(CROP_SIZE * CROP_SIZE);
  for (let i = 0, j = 0; i < lum.length; i++, j += 3) {
    lum[i] =
      0.299 * crop.data[j] + 0.587 * crop.data[j + 1] + 0.114 * crop.data[j + 2];
  }
  const thumb = resizeBilinear(lum, CROP_SIZE, CROP_SIZE, PATCH, PATCH);
  let mean = 0;
  for (let i = 0; i < thumb.length; i++) {
    mean += thumb[i];
  }
  mean /= thumb.length;
  for (let i = 0; i < thumb.length; i++) {
    thumb[i] -= mean;
  }
  return thumb;
}

/** Project features through the weights and L2-normalize to float32. */
export function embedFeatures(features: Float64Array, weights: EmbedderWeights): Float32Array {
  if (features.length !== weights.inDim) {
    throw new Error(
      `weights consume ${weights.inDim} features, got ${features.length}`,
    );
  }
  const raw = new Float64Array(weights.outDim);
  for (let r = 0; r < weights.outDim; r++) {
    let acc = 0;
    const base = r * weights.inDim;
    for (let k = 0; k < weights.inDim; k++) {
      acc += weights.rows[base + k] * features[k];
    }
    raw[r] = acc;
  }
  let norm = 0;
  for (let r = 0; r < raw.length; r++) {
    norm += raw[r] * raw[r];
  }
  norm = Math.sqrt(norm);
  if (norm < DEGENERATE_NORM) {
    // featureless input: fall back to the first basis vector
    const basis = new Float32Array(weights.outDim);
    basis[0] = 1;
    return basis;
  }
  const out = new Float32Array(weights.outDim);
  for (let r = 0; r < raw.length; r++) {
    out[r] = raw[r] / norm;
  }
  let check = 0;
  for (let r = 0; r < out.length; r++) {
    check += out[r] * out[r];
  }
  if (Math.abs(Math.sqrt(check) - 1) > 1e-6) {
    throw new Error(`embedding norm ${Math.sqrt(check)} not within 1e-6 of 1`);
  }
  return out;
}

export function embedImage(
  img: RgbImage,
  bbox: Bbox | null,
  weights: EmbedderWeights,
): Float32Array {
  return embedFeatures(cropFeatures(cropResize(img, bbox)), weights);
}

export interface ExtractOutcome {
  archive: Emb1Archive;
  /** Image ids embedded from the centered square because no bbox was known. */
  fallbacks: string[];
  errors: { image_id: string; reason: string }[];
}

/**
 * Embed every manifest record. Sidecar boxes win over manifest boxes; a
 * record with neither gets the centered-square fallback and is flagged.
 * Per-image read or crop failures become error entries and the job
 * continues.
 */
export function extractEmbeddings(
  manifest: Manifest,
  weights: EmbedderWeights,
  bboxes: BboxEntry[],
): ExtractOutcome {
  const boxById = new Map(bboxes.map((e) => [e.image_id, e.bbox]));
  const entries = new Map<string, Float32Array>();
  const fallbacks: string[] = [];
  const errors: { image_id: string; reason: string }[] = [];
  for (const rec of manifest.records) {
    try {
      const img = decodePng(readFileSync(imagePath(manifest, rec)));
      const bbox = boxById.get(rec.image_id) ?? rec.bbox;
      if (bbox === null || bbox === undefined) {
        fallbacks.push(rec.image_id);
      }
      entries.set(rec.image_id, embedImage(img, bbox ?? null, weights));
    } catch (e) {
      errors.push({ image_id: rec.image_id, reason: (e as Error).message });
    }
  }
  return {
    archive: { backendId: backendIdFor(weights), dim: weights.outDim, entries },
    fallbacks,
    errors,
  };
}

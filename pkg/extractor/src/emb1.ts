/**
 * The EMB1 embedding archive: a little-endian binary table of unit-norm
 * float32 vectors keyed by image id.
 *
 * Layout: magic "EMB1" | dim u32 | record count u64 | backend_id (u16 byte
 * length + UTF-8) | records. Each record is a u16 id byte length, the UTF-8
 * id, then dim float32 values. Records are sorted by the UTF-8 bytes of the
 * id, which is the same order as a codepoint sort of the strings.
 */
import { readFileSync } from "node:fs";

import { atomicWriteFile } from "./fsio.js";

/** Malformed archive bytes; `offset` is where the problem was found. */
export class FormatError extends Error {
  readonly offset: number;

  constructor(message: string, offset: number) {
    super(message);
    this.name = "FormatError";
    this.offset = offset;
  }
}

export interface Emb1Archive {
  backendId: string;
  dim: number;
  entries: Map<string, Float32Array>;
}

const MAGIC = Buffer.from("EMB1", "ascii");

/** Tolerance on the L2 norm of stored vectors, after float32 quantization. */
export const NORM_TOLERANCE = 1e-4;

export function encodeArchive(archive: Emb1Archive): Buffer {
  if (!Number.isInteger(archive.dim) || archive.dim < 1) {
    throw new Error(`dim must be a positive integer, got ${archive.dim}`);
  }
  const backend = Buffer.from(archive.backendId, "utf8");
  if (backend.length > 0xffff) {
    throw new Error("backend_id too long for format");
  }
  const ids = Array.from(archive.entries.keys(), (id) => ({
    id,
    bytes: Buffer.from(id, "utf8"),
  }));
  ids.sort((a, b) => Buffer.compare(a.bytes, b.bytes));

  const header = Buffer.alloc(18);
  MAGIC.copy(header, 0);
  header.writeUInt32LE(archive.dim, 4);
  header.writeBigUInt64LE(BigInt(ids.length), 8);
  header.writeUInt16LE(backend.length, 16);
  const parts: Buffer[] = [header, backend];

  for (const { id, bytes } of ids) {
    if (bytes.length > 0xffff) {
      throw new Error(`image_id too long for format: ${JSON.stringify(id)}`);
    }
    const values = archive.entries.get(id)!;
    if (values.length !== archive.dim) {
      throw new Error(
        `entry ${JSON.stringify(id)} has ${values.length} values, archive dim is ${archive.dim}`,
      );
    }
    const rec = Buffer.alloc(2 + bytes.length + 4 * archive.dim);
    rec.writeUInt16LE(bytes.length, 0);
    bytes.copy(rec, 2);
    for (let k = 0; k < values.length; k++) {
      rec.writeFloatLE(values[k], 2 + bytes.length + 4 * k);
    }
    parts.push(rec);
  }
  return Buffer.concat(parts);
}

export function decodeArchive(data: Uint8Array): Emb1Archive {
  const buf = Buffer.isBuffer(data)
    ? data
    : Buffer.from(data.buffer, data.byteOffset, data.byteLength);
  let offset = 0;

  const take = (n: number, what: string): Buffer => {
    if (offset + n > buf.length) {
      throw new FormatError(`truncated archive while reading ${what}`, offset);
    }
    const chunk = buf.subarray(offset, offset + n);
    offset += n;
    return chunk;
  };
  const decoder = new TextDecoder("utf-8", { fatal: true });
  const decodeText = (chunk: Buffer, what: string, at: number): string => {
    try {
      return decoder.decode(chunk);
    } catch {
      throw new FormatError(`invalid UTF-8 in ${what}`, at);
    }
  };

  if (!take(4, "magic").equals(MAGIC)) {
    throw new FormatError("bad magic, expected EMB1", 0);
  }
  const dim = take(4, "dim").readUInt32LE(0);
  if (dim < 1) {
    throw new FormatError("dim must be >= 1", 4);
  }
  const bigCount = take(8, "count").readBigUInt64LE(0);
  if (bigCount > BigInt(Number.MAX_SAFE_INTEGER)) {
    throw new FormatError("record count too large", 8);
  }
  const count = Number(bigCount);
  const blen = take(2, "backend_id length").readUInt16LE(0);
  const backendAt = offset;
  const backendId = decodeText(take(blen, "backend_id"), "backend_id", backendAt);

  const entries = new Map<string, Float32Array>();
  for (let i = 0; i < count; i++) {
    const ilen = take(2, `record ${i} id length`).readUInt16LE(0);
    const idAt = offset;
    const imageId = decodeText(take(ilen, `record ${i} id`), `record ${i} id`, idAt);
    const raw = take(4 * dim, `record ${i} values`);
    const values = new Float32Array(dim);
    let sumSq = 0;
    for (let k = 0; k < dim; k++) {
      const v = raw.readFloatLE(4 * k);
      values[k] = v;
      sumSq += v * v;
    }
    const norm = Math.sqrt(sumSq);
    if (Math.abs(norm - 1.0) > NORM_TOLERANCE) {
      throw new FormatError(
        `record ${i} embedding norm ${norm} not within ${NORM_TOLERANCE} of 1`,
        offset,
      );
    }
    if (entries.has(imageId)) {
      throw new FormatError(
        `duplicate image_id ${JSON.stringify(imageId)} in archive`,
        offset,
      );
    }
    entries.set(imageId, values);
  }
  if (offset !== buf.length) {
    throw new FormatError("trailing bytes after last record", offset);
  }
  return { backendId, dim, entries };
}

export function writeArchive(archive: Emb1Archive, path: string): void {
  atomicWriteFile(path, encodeArchive(archive));
}

export function readArchive(path: string): Emb1Archive {
  return decodeArchive(readFileSync(path));
}

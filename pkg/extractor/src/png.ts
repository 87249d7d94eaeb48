import { readFileSync } from "node:fs";
import { PNG } from "pngjs";

/** Row-major interleaved RGB image, 3 bytes per pixel. */
export interface RgbImage {
  width: number;
  height: number;
  data: Uint8Array;
}

function asBuffer(bytes: Uint8Array): Buffer {
  return Buffer.isBuffer(bytes)
    ? bytes
    : Buffer.from(bytes.buffer, bytes.byteOffset, bytes.byteLength);
}

/**
 * Decode a PNG to RGB. Grayscale and palette images are expanded; an alpha
 * channel, if present, is dropped.
 */
export function decodePng(bytes: Uint8Array): RgbImage {
  const png = PNG.sync.read(asBuffer(bytes));
  const rgb = new Uint8Array(png.width * png.height * 3);
  for (let i = 0, j = 0; i < rgb.length; i += 3, j += 4) {
    rgb[i] = png.data[j];
    rgb[i + 1] = png.data[j + 1];
    rgb[i + 2] = png.data[j + 2];
  }
  return { width: png.width, height: png.height, data: rgb };
}

/** Encode an RGB image as a PNG without an alpha channel. */
export function encodePng(img: RgbImage): Buffer {
  if (img.data.length !== img.width * img.height * 3) {
    throw new Error(
      `image data has ${img.data.length} bytes, expected ${img.width * img.height * 3}`,
    );
  }
  const png = new PNG({ width: img.width, height: img.height });
  for (let i = 0, j = 0; j < png.data.length; i += 3, j += 4) {
    png.data[j] = img.data[i];
    png.data[j + 1] = img.data[i + 1];
    png.data[j + 2] = img.data[i + 2];
    png.data[j + 3] = 255;
  }
  return PNG.sync.write(png, { colorType: 2 });
}

export function readPng(path: string): RgbImage {
  return decodePng(readFileSync(path));
}

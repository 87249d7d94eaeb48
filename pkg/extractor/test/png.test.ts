import { describe, expect, it } from "vitest";

import { decodePng, encodePng } from "../src/png.js";
import { GRAY_PIXELS, GRAY_PNG_HEX, RGB_PIXELS, RGB_PNG_HEX, hexBytes } from "./goldens.js";

describe("decodePng", () => {
  it("expands the grayscale golden to matching RGB triplets", () => {
    const img = decodePng(hexBytes(GRAY_PNG_HEX));
    expect(img.width).toBe(6);
    expect(img.height).toBe(5);
    for (let y = 0; y < img.height; y++) {
      for (let x = 0; x < img.width; x++) {
        const i = (y * img.width + x) * 3;
        const v = GRAY_PIXELS[y][x];
        expect([img.data[i], img.data[i + 1], img.data[i + 2]]).toEqual([v, v, v]);
      }
    }
  });

  it("reads the RGB golden exactly", () => {
    const img = decodePng(hexBytes(RGB_PNG_HEX));
    expect(img.width).toBe(5);
    expect(img.height).toBe(4);
    for (let y = 0; y < img.height; y++) {
      for (let x = 0; x < img.width; x++) {
        const i = (y * img.width + x) * 3;
        expect([img.data[i], img.data[i + 1], img.data[i + 2]]).toEqual(RGB_PIXELS[y][x]);
      }
    }
  });

  it("rejects bytes that are not a PNG", () => {
    expect(() => decodePng(Buffer.from("not a png"))).toThrow();
  });
});

describe("encodePng", () => {
  it("round-trips pixel data", () => {
    const width = 7;
    const height = 3;
    const data = new Uint8Array(width * height * 3);
    for (let i = 0; i < data.length; i++) {
      data[i] = (i * 37 + 11) % 256;
    }
    const back = decodePng(encodePng({ width, height, data }));
    expect(back.width).toBe(width);
    expect(back.height).toBe(height);
    expect([...back.data]).toEqual([...data]);
  });

  it("rejects data of the wrong length", () => {
    expect(() => encodePng({ width: 2, height: 2, data: new Uint8Array(5) })).toThrow(
      /expected 12/,
    );
  });
});

/**
 * Deterministic random streams: SplitMix64 uniforms and Box-Muller normals.
 * Output i of the stream is fixed by the seed alone, so equal seeds give
 * bit-equal weights on any platform with IEEE-754 doubles.
 */
const MASK64 = (1n << 64n) - 1n;
const GOLDEN = 0x9e3779b97f4a7c15n;
const MIX1 = 0xbf58476d1ce4e5b9n;
const MIX2 = 0x94d049bb133111ebn;

const INV53 = 2 ** -53;

/** First `count` outputs of a SplitMix64 stream. */
export function splitmix64(seed: number | bigint, count: number): BigUint64Array {
  let state = BigInt(seed) & MASK64;
  const out = new BigUint64Array(count);
  for (let i = 0; i < count; i++) {
    state = (state + GOLDEN) & MASK64;
    let z = state;
    z = ((z ^ (z >> 30n)) * MIX1) & MASK64;
    z = ((z ^ (z >> 27n)) * MIX2) & MASK64;
    out[i] = z ^ (z >> 31n);
  }
  return out;
}

/**
 * `count` standard normals via Box-Muller pairs over the top 53 bits of the
 * stream: z[2j] = r cos(2 pi u2), z[2j+1] = r sin(2 pi u2) with
 * r = sqrt(-2 ln u1) and u1 nudged away from zero.
 */
export function normals(seed: number | bigint, count: number): Float64Array {
  const nPairs = (count + 1) >> 1;
  const raw = splitmix64(seed, 2 * nPairs);
  const out = new Float64Array(2 * nPairs);
  for (let j = 0; j < nPairs; j++) {
    const u1 = (Number(raw[2 * j] >> 11n) + 1) * INV53;
    const u2 = Number(raw[2 * j + 1] >> 11n) * INV53;
    const r = Math.sqrt(-2 * Math.log(u1));
    const theta = 2 * Math.PI * u2;
    out[2 * j] = r * Math.cos(theta);
    out[2 * j + 1] = r * Math.sin(theta);
  }
  return out.slice(0, count);
}

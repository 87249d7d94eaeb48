export * from "./bboxes.js";
export * from "./commands.js";
export * from "./detect.js";
export * from "./emb1.js";
export * from "./extract.js";
export * from "./fsio.js";
export * from "./job.js";
export * from "./manifest.js";
export * from "./png.js";
export * from "./rng.js";

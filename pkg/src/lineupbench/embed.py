"""Unit-norm embeddings, cosine similarity, the EMB1 archive, and a
deterministic baseline embedder.

The baseline embedder is a pipeline stand-in, not a face model: luma,
bilinear resize to 32x32, mean subtraction, then a fixed random projection
to 128 dimensions whose matrix is generated row-major from a seeded
SplitMix64/Box-Muller stream. It exists so the whole evaluation stack runs
and can be tested with zero model weights.

Archive binary format "EMB1":
  magic "EMB1" | dim u32 LE | count u64 LE | backend_id (u16 length + UTF-8)
  then `count` records of (u16 id length, UTF-8 id, dim * f32 LE).
Entries are written sorted by image_id so equal archives give equal bytes.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .degrade import DegradationSpec, apply_spec, crop_resize
from .errors import (
    ArchiveLookupError,
    DataIOError,
    FormatError,
    ParameterError,
)
from .fsio import atomic_write_bytes
from .manifest import DatasetManifest
from .raster import RasterImage, load_image, luma, resize_bilinear
from .rng import derive_seed, normals

BASELINE_DIM = 128
_PATCH = 32  # baseline embedder works on a 32x32 luma thumbnail
_DEGENERATE_NORM = 1e-12


@dataclass(frozen=True)
class Embedding:
    values: np.ndarray  # (dim,) float, unit L2 norm within 1e-6

    def __post_init__(self):
        v = self.values
        if v.ndim != 1 or v.size < 1:
            raise ParameterError("embedding must be a non-empty 1-D vector")
        norm = float(np.linalg.norm(v.astype(np.float64)))
        if abs(norm - 1.0) > 1e-6:
            raise ParameterError(f"embedding norm {norm} not within 1e-6 of 1")

    @property
    def dim(self) -> int:
        return int(self.values.size)


@dataclass
class EmbeddingArchive:
    backend_id: str
    dim: int
    entries: dict[str, Embedding] = field(default_factory=dict)

    def add(self, image_id: str, emb: Embedding) -> None:
        if not image_id:
            raise ParameterError("image_id must be non-empty")
        if emb.dim != self.dim:
            raise ParameterError(
                f"embedding dim {emb.dim} does not match archive dim {self.dim}"
            )
        self.entries[image_id] = emb

    def get(self, image_id: str) -> Embedding:
        try:
            return self.entries[image_id]
        except KeyError:
            raise ArchiveLookupError(
                f"image_id {image_id!r} not present in archive {self.backend_id!r}"
            ) from None


@dataclass(frozen=True)
class BackendDescriptor:
    """Either the built-in baseline embedder or a precomputed archive."""

    kind: str  # "baseline" | "archive"
    seed: int | None = None
    archive_path: str | None = None

    def __post_init__(self):
        if self.kind == "baseline":
            if self.seed is None or self.archive_path is not None:
                raise ParameterError("baseline backend takes a seed and no archive path")
        elif self.kind == "archive":
            if self.archive_path is None or self.seed is not None:
                raise ParameterError("archive backend takes an archive path and no seed")
        else:
            raise ParameterError(f"unknown backend kind {self.kind!r}")

    def backend_id(self) -> str:
        if self.kind == "baseline":
            return f"baseline-rp128-seed{self.seed}"
        return f"archive:{os.path.basename(str(self.archive_path))}"


def cosine_similarity(a: Embedding, b: Embedding) -> float:
    """Dot product after defensive renormalization, clamped to [-1, 1]."""
    if a.dim != b.dim:
        raise ParameterError(f"dimension mismatch: {a.dim} vs {b.dim}")
    va = a.values.astype(np.float64)
    vb = b.values.astype(np.float64)
    va = va / np.linalg.norm(va)
    vb = vb / np.linalg.norm(vb)
    return float(np.clip(np.dot(va, vb), -1.0, 1.0))


_projection_cache: dict[int, np.ndarray] = {}


def _projection_matrix(seed: int) -> np.ndarray:
    m = _projection_cache.get(seed)
    if m is None:
        m = normals(seed, BASELINE_DIM * _PATCH * _PATCH).reshape(
            BASELINE_DIM, _PATCH * _PATCH
        )
        _projection_cache[seed] = m
    return m


def baseline_embed(img: RasterImage, seed: int) -> Embedding:
    """Deterministic 128-D random-projection embedding of a 160x160 crop."""
    if img.height != 160 or img.width != 160:
        raise ParameterError(
            f"baseline embedder expects a 160x160 crop, got {img.width}x{img.height}"
        )
    thumb = resize_bilinear(luma(img), _PATCH, _PATCH).reshape(-1)
    thumb = thumb - thumb.mean()
    raw = _projection_matrix(seed) @ thumb
    norm = float(np.linalg.norm(raw))
    if norm < _DEGENERATE_NORM:
        basis = np.zeros(BASELINE_DIM, dtype=np.float64)
        basis[0] = 1.0
        return Embedding(basis)
    return Embedding(raw / norm)


def _quantize_f32(emb: Embedding) -> Embedding:
    return Embedding(emb.values.astype(np.float32))


def batch_embed(manifest: DatasetManifest, backend: BackendDescriptor,
                degradation: DegradationSpec | None = None,
                jobs: int = 1) -> EmbeddingArchive:
    """Embed every record; probes get the degradation, mugshots never do."""
    if backend.kind == "archive":
        stored = load_archive(backend.archive_path)
        out = EmbeddingArchive(backend_id=stored.backend_id, dim=stored.dim)
        for r in manifest.records:
            out.add(r.image_id, stored.get(r.image_id))
        return out

    out = EmbeddingArchive(backend_id=backend.backend_id(), dim=BASELINE_DIM)

    def embed_one(rec) -> tuple[str, Embedding]:
        try:
            img = load_image(rec.path)
        except DataIOError as e:
            raise DataIOError(f"image_id {rec.image_id!r}: {e}") from e
        crop = crop_resize(img, rec.bbox)
        if degradation is not None and rec.role == "unconstrained":
            spec = degradation
            if spec.family == "noise":
                # domain-separate the noise stream per image so probes get
                # independent noise fields under one configured seed
                spec = DegradationSpec(
                    spec.family, spec.level,
                    seed=derive_seed(spec.seed, rec.image_id),
                )
            crop = apply_spec(crop, spec)
        return rec.image_id, _quantize_f32(baseline_embed(crop, backend.seed))

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for image_id, emb in pool.map(embed_one, manifest.records):
                out.add(image_id, emb)
    else:
        for rec in manifest.records:
            image_id, emb = embed_one(rec)
            out.add(image_id, emb)
    return out


def save_archive(archive: EmbeddingArchive, path: str | os.PathLike) -> None:
    parts = [b"EMB1"]
    parts.append(struct.pack("<I", archive.dim))
    parts.append(struct.pack("<Q", len(archive.entries)))
    backend = archive.backend_id.encode("utf-8")
    if len(backend) > 0xFFFF:
        raise ParameterError("backend_id too long for format")
    parts.append(struct.pack("<H", len(backend)))
    parts.append(backend)
    for image_id in sorted(archive.entries):
        ident = image_id.encode("utf-8")
        if len(ident) > 0xFFFF:
            raise ParameterError(f"image_id too long for format: {image_id!r}")
        parts.append(struct.pack("<H", len(ident)))
        parts.append(ident)
        values = archive.entries[image_id].values.astype(np.float32)
        parts.append(values.astype("<f4").tobytes())
    atomic_write_bytes(path, b"".join(parts))


def load_archive(path: str | os.PathLike) -> EmbeddingArchive:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except FileNotFoundError as e:
        raise DataIOError(f"archive file not found: {path}") from e
    except OSError as e:
        raise DataIOError(f"cannot read archive {path}: {e}") from e

    offset = 0

    def take(n: int, what: str) -> bytes:
        nonlocal offset
        if offset + n > len(data):
            raise FormatError(f"truncated archive while reading {what}", offset)
        chunk = data[offset:offset + n]
        offset += n
        return chunk

    if take(4, "magic") != b"EMB1":
        raise FormatError("bad magic, expected EMB1", 0)
    dim = struct.unpack("<I", take(4, "dim"))[0]
    if dim < 1:
        raise FormatError("dim must be >= 1", 4)
    count = struct.unpack("<Q", take(8, "count"))[0]
    blen = struct.unpack("<H", take(2, "backend_id length"))[0]
    backend_id = take(blen, "backend_id").decode("utf-8")
    archive = EmbeddingArchive(backend_id=backend_id, dim=dim)
    for i in range(count):
        ilen = struct.unpack("<H", take(2, f"record {i} id length"))[0]
        image_id = take(ilen, f"record {i} id").decode("utf-8")
        raw = take(4 * dim, f"record {i} values")
        values = np.frombuffer(raw, dtype="<f4").astype(np.float32)
        if image_id in archive.entries:
            raise FormatError(f"duplicate image_id {image_id!r} in archive", offset)
        archive.add(image_id, Embedding(values))
    if offset != len(data):
        raise FormatError("trailing bytes after last record", offset)
    return archive

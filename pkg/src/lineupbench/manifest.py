"""Dataset manifests: records, validation, mugshot designation, probe filters.

A manifest is a JSONL file, one image record per line, with exactly these
keys: image_id, identity_id, path, role, yaw, pitch, roll, glasses, mask,
headwear, lighting, race, gender, source, bbox. Relative record paths are
resolved against the manifest file's directory at load time.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, replace
from typing import Iterable

from .errors import DataIOError, ParameterError, ValidationError
from .fsio import atomic_write_text

log = logging.getLogger(__name__)

ROLES = ("mugshot", "unconstrained")
GLASSES = ("none", "clear", "opaque")
LIGHTING = ("normal", "low")
SOURCES = ("real", "synthetic")

# mugshots are standardized: near-frontal pose, no occluders
MUGSHOT_MAX_ANGLE = 10.0

MANIFEST_KEYS = (
    "image_id", "identity_id", "path", "role", "yaw", "pitch", "roll",
    "glasses", "mask", "headwear", "lighting", "race", "gender", "source",
    "bbox",
)


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    identity_id: str
    path: str
    role: str
    yaw: float
    pitch: float
    roll: float
    glasses: str
    mask: bool
    headwear: bool
    lighting: str
    race: str
    gender: str
    source: str
    bbox: tuple[int, int, int, int] | None = None

    def max_abs_angle(self) -> float:
        return max(abs(self.yaw), abs(self.pitch), abs(self.roll))

    def validate(self) -> None:
        if not self.image_id:
            raise ValidationError("image_id must be non-empty")
        if not self.identity_id:
            raise ValidationError(f"record {self.image_id}: identity_id must be non-empty")
        if self.role not in ROLES:
            raise ValidationError(f"record {self.image_id}: unknown role {self.role!r}")
        if self.glasses not in GLASSES:
            raise ValidationError(f"record {self.image_id}: unknown glasses {self.glasses!r}")
        if self.lighting not in LIGHTING:
            raise ValidationError(f"record {self.image_id}: unknown lighting {self.lighting!r}")
        if self.source not in SOURCES:
            raise ValidationError(f"record {self.image_id}: unknown source {self.source!r}")
        for name in ("yaw", "pitch", "roll"):
            v = getattr(self, name)
            if not -180.0 <= v <= 180.0:
                raise ValidationError(
                    f"record {self.image_id}: {name}={v} outside [-180, 180]"
                )
        if self.role == "mugshot":
            if self.glasses != "none" or self.mask:
                raise ValidationError(
                    f"record {self.image_id}: mugshot must have glasses=none and mask=false"
                )
            if self.max_abs_angle() > MUGSHOT_MAX_ANGLE:
                raise ValidationError(
                    f"record {self.image_id}: mugshot pose exceeds "
                    f"{MUGSHOT_MAX_ANGLE} degrees"
                )
        if self.bbox is not None:
            x, y, w, h = self.bbox
            if w < 1 or h < 1 or x < 0 or y < 0:
                raise ValidationError(f"record {self.image_id}: degenerate bbox {self.bbox}")


@dataclass(frozen=True)
class DatasetManifest:
    dataset_id: str
    records: tuple[ImageRecord, ...]
    notes: str = ""

    def identities(self) -> list[str]:
        seen: dict[str, None] = {}
        for r in self.records:
            seen.setdefault(r.identity_id, None)
        return list(seen)

    def by_id(self) -> dict[str, ImageRecord]:
        return {r.image_id: r for r in self.records}


@dataclass(frozen=True)
class ProbeFilter:
    """Conjunction of probe-side scene conditions; empty selects everything."""

    occluded_only: bool = False
    rotated_only: bool = False
    low_light_only: bool = False
    rotation_threshold: float = 30.0

    def __post_init__(self):
        if self.rotation_threshold <= 0:
            raise ParameterError("rotation_threshold must be > 0")

    def matches(self, r: ImageRecord) -> bool:
        if self.occluded_only and not (r.glasses == "opaque" or r.mask):
            return False
        if self.rotated_only and r.max_abs_angle() <= self.rotation_threshold:
            return False
        if self.low_light_only and r.lighting != "low":
            return False
        return True


def _record_from_json(obj: dict, line_no: int, strict: bool) -> ImageRecord:
    unknown = [k for k in obj if k not in MANIFEST_KEYS]
    if unknown:
        if strict:
            raise ValidationError(f"line {line_no}: unknown key {unknown[0]!r}")
        log.warning("manifest line %d: ignoring unknown keys %s", line_no, unknown)
    missing = [k for k in MANIFEST_KEYS if k not in obj]
    if missing:
        raise ValidationError(f"line {line_no}: missing key {missing[0]!r}")
    bbox = obj["bbox"]
    if bbox is not None:
        if (not isinstance(bbox, list) or len(bbox) != 4
                or not all(isinstance(v, int) for v in bbox)):
            raise ValidationError(f"line {line_no}: bbox must be [x,y,w,h] integers")
        bbox = tuple(bbox)
    try:
        rec = ImageRecord(
            image_id=str(obj["image_id"]),
            identity_id=str(obj["identity_id"]),
            path=str(obj["path"]),
            role=str(obj["role"]),
            yaw=float(obj["yaw"]),
            pitch=float(obj["pitch"]),
            roll=float(obj["roll"]),
            glasses=str(obj["glasses"]),
            mask=bool(obj["mask"]),
            headwear=bool(obj["headwear"]),
            lighting=str(obj["lighting"]),
            race=str(obj["race"]),
            gender=str(obj["gender"]),
            source=str(obj["source"]),
            bbox=bbox,
        )
    except (TypeError, ValueError) as e:
        raise ValidationError(f"line {line_no}: bad field value: {e}") from e
    try:
        rec.validate()
    except ValidationError as e:
        raise ValidationError(f"line {line_no}: {e}") from e
    return rec


def load_manifest(path: str | os.PathLike, dataset_id: str | None = None,
                  strict: bool = True) -> DatasetManifest:
    """Parse a JSONL manifest; duplicate image_ids and bad lines are errors."""
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise DataIOError(f"manifest file not found: {path}")
    base = os.path.dirname(os.path.abspath(path))
    records: list[ImageRecord] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValidationError(f"line {line_no}: malformed JSON: {e.msg}") from e
            if not isinstance(obj, dict):
                raise ValidationError(f"line {line_no}: record must be a JSON object")
            rec = _record_from_json(obj, line_no, strict)
            if rec.image_id in seen:
                raise ValidationError(
                    f"line {line_no}: duplicate image_id {rec.image_id!r}"
                )
            seen.add(rec.image_id)
            if not os.path.isabs(rec.path):
                rec = replace(rec, path=os.path.join(base, rec.path))
            records.append(rec)
    if dataset_id is None:
        dataset_id = os.path.splitext(os.path.basename(path))[0]
    return DatasetManifest(dataset_id=dataset_id, records=tuple(records))


def save_manifest(manifest: DatasetManifest, path: str | os.PathLike,
                  relative_to: str | os.PathLike | None = None) -> None:
    """Write JSONL, one record per line, key order fixed by the schema."""
    rel_base = os.fspath(relative_to) if relative_to is not None else None
    lines = []
    for r in manifest.records:
        p = r.path
        if rel_base is not None:
            p = os.path.relpath(p, rel_base)
        obj = {
            "image_id": r.image_id, "identity_id": r.identity_id, "path": p,
            "role": r.role, "yaw": r.yaw, "pitch": r.pitch, "roll": r.roll,
            "glasses": r.glasses, "mask": r.mask, "headwear": r.headwear,
            "lighting": r.lighting, "race": r.race, "gender": r.gender,
            "source": r.source,
            "bbox": list(r.bbox) if r.bbox is not None else None,
        }
        lines.append(json.dumps(obj, separators=(",", ":"), sort_keys=False))
    atomic_write_text(path, "\n".join(lines) + "\n" if lines else "")


def select_mugshots(manifest: DatasetManifest) -> dict[str, ImageRecord]:
    """One designated mugshot per identity: lexicographically smallest image_id."""
    chosen: dict[str, ImageRecord] = {}
    for r in manifest.records:
        if r.role != "mugshot":
            continue
        cur = chosen.get(r.identity_id)
        if cur is None or r.image_id < cur.image_id:
            chosen[r.identity_id] = r
    return chosen


def filter_probes(manifest: DatasetManifest,
                  f: ProbeFilter | None = None) -> list[ImageRecord]:
    """Unconstrained records passing the filter conjunction, order preserved."""
    if f is None:
        f = ProbeFilter()
    return [r for r in manifest.records if r.role == "unconstrained" and f.matches(r)]


def require_lineup_feasible(manifest: DatasetManifest, min_identities: int = 6) -> None:
    """Lineup evaluation needs at least six identities with a mugshot each."""
    with_mugshot = {r.identity_id for r in manifest.records if r.role == "mugshot"}
    if len(with_mugshot) < min_identities:
        raise ValidationError(
            f"lineup evaluation needs >= {min_identities} identities with a "
            f"mugshot, found {len(with_mugshot)}"
        )

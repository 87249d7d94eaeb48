"""Map real-dataset degradation levels to synthetic-dataset levels that
produce matched lineup accuracy.

The construction is deliberately minimal and deterministic: both accuracy
curves are first projected to be non-increasing along severity (pool
adjacent violators), then each real level's accuracy is pushed through the
piecewise-linear inverse of the synthetic curve. Targets outside the
synthetic curve's accuracy range clamp to the nearest endpoint level.
Inside a flat segment the least severe level wins: prefer the mildest
degradation consistent with the target.

Gamma needs special handling because severity grows in both directions
away from g = 1; calibrate_curves() splits gamma curves into the g <= 1
and g >= 1 branches and calibrates each branch on its own.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .errors import ParameterError, RangeError
from .fsio import atomic_write_text
from .lineup import AccuracyCurve, CurvePoint


@dataclass(frozen=True)
class CalibrationRow:
    real_level: float
    calibrated_level: float
    target_accuracy: float
    achieved_accuracy: float
    clamped: bool


@dataclass(frozen=True)
class CalibrationTable:
    family: str
    rows: tuple[CalibrationRow, ...]

    def __post_init__(self):
        if not self.rows:
            raise ParameterError("calibration table needs at least one row")
        for r in self.rows:
            if not 0.0 <= r.achieved_accuracy <= 1.0:
                raise ParameterError(
                    f"achieved accuracy {r.achieved_accuracy} outside [0, 1]")


def fit_isotonic(curve: AccuracyCurve) -> AccuracyCurve:
    """Least-squares projection onto non-increasing accuracy sequences.

    Pool-adjacent-violators with unit weights: whenever a point rises above
    the running block mean, the blocks merge and share their mean.
    """
    blocks: list[list[float]] = []  # [sum, count]
    for p in curve.points:
        blocks.append([p.accuracy, 1.0])
        while len(blocks) > 1 and blocks[-2][0] / blocks[-2][1] < blocks[-1][0] / blocks[-1][1]:
            s, c = blocks.pop()
            blocks[-1][0] += s
            blocks[-1][1] += c
    fitted: list[float] = []
    for s, c in blocks:
        fitted.extend([s / c] * int(c))
    points = tuple(CurvePoint(level=p.level, accuracy=a, n_probes=p.n_probes)
                   for p, a in zip(curve.points, fitted))
    return AccuracyCurve(family=curve.family, points=points,
                         dataset_id=curve.dataset_id)


def _require_non_increasing(curve: AccuracyCurve) -> None:
    accs = curve.accuracies()
    for i in range(len(accs) - 1):
        if accs[i] < accs[i + 1]:
            raise ParameterError(
                "curve accuracy must be non-increasing along severity; "
                "run fit_isotonic first")


def invert_accuracy(curve: AccuracyCurve, a: float) -> tuple[float, bool]:
    """Level whose interpolated accuracy equals `a`, plus a clamp flag."""
    if not 0.0 <= a <= 1.0:
        raise ParameterError(f"target accuracy {a} outside [0, 1]")
    _require_non_increasing(curve)
    pts = curve.points
    if a > pts[0].accuracy:
        return pts[0].level, True
    if a < pts[-1].accuracy:
        return pts[-1].level, True
    for i, p in enumerate(pts):
        if p.accuracy == a:
            return p.level, False  # knot hit; flat runs resolve to first knot
        if i + 1 < len(pts) and pts[i].accuracy > a > pts[i + 1].accuracy:
            t = (pts[i].accuracy - a) / (pts[i].accuracy - pts[i + 1].accuracy)
            return pts[i].level + t * (pts[i + 1].level - pts[i].level), False
    raise ParameterError(f"accuracy {a} not bracketed by curve")  # unreachable


def build_table(real: AccuracyCurve, synth: AccuracyCurve) -> CalibrationTable:
    """One row per real level: the synthetic level matching its accuracy.

    Unclamped rows achieve the target exactly on the isotonic-projected
    synthetic curve, by construction of the piecewise-linear inverse.
    """
    if real.family != synth.family:
        raise ParameterError(
            f"family mismatch: {real.family!r} vs {synth.family!r}")
    real_iso = fit_isotonic(real)
    synth_iso = fit_isotonic(synth)
    rows = []
    for p in real_iso.points:
        level, clamped = invert_accuracy(synth_iso, p.accuracy)
        if clamped:
            edge = synth_iso.points[0] if p.accuracy > synth_iso.points[0].accuracy \
                else synth_iso.points[-1]
            achieved = edge.accuracy
        else:
            achieved = p.accuracy
        rows.append(CalibrationRow(
            real_level=p.level, calibrated_level=level,
            target_accuracy=p.accuracy, achieved_accuracy=achieved,
            clamped=clamped))
    return CalibrationTable(family=real.family, rows=tuple(rows))


def apply_table(table: CalibrationTable, real_level: float) -> float:
    """Calibrated level for a real level inside the table's range."""
    rows = table.rows
    for r in rows:
        if r.real_level == real_level:
            return r.calibrated_level
    for i in range(len(rows) - 1):
        lo, hi = rows[i].real_level, rows[i + 1].real_level
        if lo == hi:
            continue
        t = (real_level - lo) / (hi - lo)
        if 0.0 < t < 1.0:
            return rows[i].calibrated_level + t * (
                rows[i + 1].calibrated_level - rows[i].calibrated_level)
    span = sorted(r.real_level for r in rows)
    raise RangeError(
        f"real level {real_level} outside calibrated range "
        f"[{span[0]}, {span[-1]}]")


def split_gamma_branches(curve: AccuracyCurve) -> tuple[AccuracyCurve | None,
                                                        AccuracyCurve | None]:
    """Split a gamma curve at g = 1 into severity-ordered branches.

    Returns (shrink, grow): shrink holds g <= 1 ordered by decreasing g,
    grow holds g >= 1 ordered by increasing g. A branch with fewer than two
    points is returned as None.
    """
    if curve.family != "gamma":
        raise ParameterError(f"not a gamma curve: {curve.family!r}")
    shrink = sorted((p for p in curve.points if p.level <= 1.0),
                    key=lambda p: -p.level)
    grow = sorted((p for p in curve.points if p.level >= 1.0),
                  key=lambda p: p.level)

    def branch(points):
        if len(points) < 2:
            return None
        return AccuracyCurve(family="gamma", points=tuple(points),
                             dataset_id=curve.dataset_id)

    return branch(shrink), branch(grow)


def calibrate_curves(real: AccuracyCurve, synth: AccuracyCurve) -> CalibrationTable:
    """build_table, with gamma's two monotone branches handled separately."""
    if real.family != "gamma":
        return build_table(real, synth)
    real_lo, real_hi = split_gamma_branches(real)
    synth_lo, synth_hi = split_gamma_branches(synth)
    by_level: dict[float, CalibrationRow] = {}
    for rb, sb in ((real_lo, synth_lo), (real_hi, synth_hi)):
        if rb is None:
            continue
        if sb is None:
            raise ParameterError(
                "synthetic gamma curve lacks the branch needed to calibrate "
                f"real levels {rb.levels()}")
        for row in build_table(rb, sb).rows:
            by_level.setdefault(row.real_level, row)
    rows = tuple(by_level[p.level] for p in real.points if p.level in by_level)
    return CalibrationTable(family="gamma", rows=rows)


def write_calibration_csv(tables: list[CalibrationTable],
                          path: str | os.PathLike) -> None:
    lines = ["family,real_level,calibrated_level,target_acc,achieved_acc,clamped"]
    for table in tables:
        for r in table.rows:
            lines.append(
                f"{table.family},{r.real_level:.10g},{r.calibrated_level:.10g},"
                f"{r.target_accuracy:.4f},{r.achieved_accuracy:.4f},"
                f"{'true' if r.clamped else 'false'}")
    atomic_write_text(path, "\n".join(lines) + "\n")

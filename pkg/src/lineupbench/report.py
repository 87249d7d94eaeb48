"""Deterministic result artifacts: CSV tables, accuracy-curve SVG plots,
and JSON curve interchange files.

Every writer here is a pure function of its inputs: equal inputs produce
byte-identical files (timestamps never enter any artifact). Accuracy cells
are printed with four decimals, round-half-even.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .errors import DataIOError, ParameterError, ValidationError
from .fsio import atomic_write_text
from .lineup import CHANCE_LEVEL, AccuracyCurve, CurvePoint, EvalResult

SERIES = ("real", "synthetic", "calibrated")
SCENE_CONDITIONS = ("baseline", "occluded", "rotated", "low_light", "all_three")

# plot palette: filled markers for measured series, open for calibrated
_SERIES_STYLE = {
    "real": ("#1f77b4", True),
    "synthetic": ("#d62728", True),
    "calibrated": ("#c51b8a", False),
}


@dataclass(frozen=True)
class TaggedCurve:
    series: str
    curve: AccuracyCurve

    def __post_init__(self):
        if self.series not in SERIES:
            raise ParameterError(
                f"unknown series {self.series!r}, expected one of {SERIES}")


@dataclass(frozen=True)
class ReportBundle:
    curves: tuple[TaggedCurve, ...] = ()
    subgroups: dict[str, list[tuple[str, float, int]]] = field(default_factory=dict)
    scene: tuple[tuple[str, EvalResult], ...] = ()
    metadata: dict = field(default_factory=dict)

    def families(self) -> tuple[str, ...]:
        seen = []
        for tagged in self.curves:
            if tagged.curve.family not in seen:
                seen.append(tagged.curve.family)
        return tuple(seen)


def _fmt_level(level: float) -> str:
    return f"{level:.10g}"


def _fmt_acc(acc: float) -> str:
    return f"{acc:.4f}"


def write_results_csv(bundle: ReportBundle, path: str | os.PathLike) -> None:
    """One row per (series, family, level), sorted by series then family
    then severity index."""
    lines = ["series,family,level,accuracy,n"]
    for tagged in sorted(bundle.curves,
                         key=lambda t: (t.series, t.curve.family)):
        for p in tagged.curve.points:
            lines.append(f"{tagged.series},{tagged.curve.family},"
                         f"{_fmt_level(p.level)},{_fmt_acc(p.accuracy)},"
                         f"{p.n_probes}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_subgroups_csv(tables: dict[str, list[tuple[str, float, int]]],
                        path: str | os.PathLike) -> None:
    lines = ["key,group,accuracy,n"]
    for key in sorted(tables):
        for group, acc, n in tables[key]:
            lines.append(f"{key},{group},{_fmt_acc(acc)},{n}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_scene_table(results: list[tuple[str, EvalResult]],
                      path: str | os.PathLike) -> None:
    """CSV of per-condition accuracy; conditions come from the fixed
    vocabulary {baseline, occluded, rotated, low_light, all_three}."""
    if not results:
        raise ParameterError("scene table needs at least one condition")
    lines = ["condition,accuracy,n"]
    for label, result in results:
        if label not in SCENE_CONDITIONS:
            raise ParameterError(
                f"unknown scene condition {label!r}, expected one of "
                f"{SCENE_CONDITIONS}")
        lines.append(f"{label},{_fmt_acc(result.accuracy)},{result.n_probes}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_lineups_csv(result: EvalResult, path: str | os.PathLike) -> None:
    """Per-lineup dump: decoy ids are ';'-joined inside one CSV field."""
    lines = ["probe_id,target_id,decoy_ids,target_sim,max_decoy_sim,correct"]
    for o in result.outcomes:
        lineup = o.lineup
        lines.append(
            f"{lineup.probe_id},{lineup.target_id},"
            f"{';'.join(lineup.decoy_ids)},"
            f"{lineup.target_similarity:.6f},"
            f"{max(lineup.decoy_similarities):.6f},"
            f"{'true' if o.correct else 'false'}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def eval_summary(result: EvalResult) -> dict:
    return {
        "dataset_id": result.dataset_id,
        "n_probes": result.n_probes,
        "n_correct": result.n_correct,
        "accuracy": result.accuracy,
        "chance": CHANCE_LEVEL,
        "skipped": [list(pair) for pair in result.skipped],
    }


# ---------------------------------------------------------------- curves


def curve_to_json(curve: AccuracyCurve) -> dict:
    return {
        "family": curve.family,
        "dataset_id": curve.dataset_id,
        "points": [{"level": p.level, "accuracy": p.accuracy,
                    "n_probes": p.n_probes} for p in curve.points],
    }


def curve_from_json(obj: dict) -> AccuracyCurve:
    try:
        points = tuple(CurvePoint(level=float(p["level"]),
                                  accuracy=float(p["accuracy"]),
                                  n_probes=int(p["n_probes"]))
                       for p in obj["points"])
        return AccuracyCurve(family=str(obj["family"]), points=points,
                             dataset_id=str(obj.get("dataset_id", "")))
    except (KeyError, TypeError, ValueError) as e:
        raise ValidationError(f"malformed curve object: {e}") from e


def save_curve(curve: AccuracyCurve, path: str | os.PathLike) -> None:
    atomic_write_text(path, json.dumps(curve_to_json(curve), indent=2,
                                       sort_keys=True) + "\n")


def load_curve(path: str | os.PathLike) -> AccuracyCurve:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except FileNotFoundError as e:
        raise DataIOError(f"curve file not found: {path}") from e
    except OSError as e:
        raise DataIOError(f"cannot read curve file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ValidationError(f"curve file {path} is not valid JSON: {e.msg}") from e
    return curve_from_json(obj)


# ------------------------------------------------------------------ SVG

_W, _H = 640, 440
_ML, _MR, _MT, _MB = 70, 150, 40, 60
_PLOT_W = _W - _ML - _MR
_PLOT_H = _H - _MT - _MB


def _x(i: int, count: int) -> float:
    if count == 1:
        return _ML + _PLOT_W / 2.0
    return _ML + i * (_PLOT_W / (count - 1))


def _y(accuracy: float) -> float:
    return _MT + (1.0 - accuracy) * _PLOT_H


def render_curves_svg(bundle: ReportBundle, family: str,
                      path: str | os.PathLike) -> None:
    """Accuracy vs severity index for every series of one family: filled
    markers for real/synthetic, open for calibrated, dashed chance line."""
    tagged = [t for t in bundle.curves if t.curve.family == family]
    if not tagged:
        raise ParameterError(f"no curves for family {family!r} in bundle")
    tagged.sort(key=lambda t: SERIES.index(t.series))
    count = max(len(t.curve.points) for t in tagged)
    tick_levels = tagged[0].curve.levels()

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="#ffffff"/>',
        f'<text x="{_ML}" y="{_MT - 16}" font-size="14" '
        f'font-family="sans-serif">lineup accuracy vs {family} level</text>',
    ]
    # axes
    x0, x1 = _ML, _ML + _PLOT_W
    y0, y1 = _MT, _MT + _PLOT_H
    parts.append(f'<line x1="{x0}" y1="{y1}" x2="{x1}" y2="{y1}" '
                 f'stroke="#000000"/>')
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" '
                 f'stroke="#000000"/>')
    for i, level in enumerate(tick_levels):
        tx = _x(i, len(tick_levels))
        parts.append(f'<line x1="{tx:.2f}" y1="{y1}" x2="{tx:.2f}" '
                     f'y2="{y1 + 5}" stroke="#000000"/>')
        parts.append(f'<text x="{tx:.2f}" y="{y1 + 20}" font-size="11" '
                     f'font-family="sans-serif" text-anchor="middle">'
                     f'{level:g}</text>')
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        ty = _y(frac)
        parts.append(f'<line x1="{x0 - 5}" y1="{ty:.2f}" x2="{x0}" '
                     f'y2="{ty:.2f}" stroke="#000000"/>')
        parts.append(f'<text x="{x0 - 9}" y="{ty + 4:.2f}" font-size="11" '
                     f'font-family="sans-serif" text-anchor="end">'
                     f'{frac:g}</text>')
    parts.append(f'<text x="{(x0 + x1) / 2:.2f}" y="{_H - 14}" font-size="12" '
                 f'font-family="sans-serif" text-anchor="middle">'
                 f'{family} level (severity order)</text>')

    # chance reference at 1/6
    cy = _y(CHANCE_LEVEL)
    parts.append(f'<line x1="{x0}" y1="{cy:.2f}" x2="{x1}" y2="{cy:.2f}" '
                 f'stroke="#555555" stroke-dasharray="6,4"/>')
    parts.append(f'<text x="{x1 + 6}" y="{cy + 4:.2f}" font-size="11" '
                 f'font-family="sans-serif">chance = 1/6</text>')

    legend_y = _MT + 10
    for tagged_curve in tagged:
        series, curve = tagged_curve.series, tagged_curve.curve
        color, filled = _SERIES_STYLE[series]
        pts = [(_x(i, count), _y(p.accuracy))
               for i, p in enumerate(curve.points)]
        coords = " ".join(f"{px:.2f},{py:.2f}" for px, py in pts)
        parts.append(f'<polyline points="{coords}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        fill = color if filled else "none"
        for px, py in pts:
            parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="4" '
                         f'fill="{fill}" stroke="{color}" stroke-width="1.5"/>')
        lx = x1 + 14
        parts.append(f'<circle cx="{lx}" cy="{legend_y}" r="4" fill="{fill}" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{lx + 10}" y="{legend_y + 4}" font-size="11" '
                     f'font-family="sans-serif">{series}</text>')
        legend_y += 18

    parts.append("</svg>")
    atomic_write_text(path, "\n".join(parts) + "\n")

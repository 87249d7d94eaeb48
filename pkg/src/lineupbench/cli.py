"""Command-line pipeline driver.

One JSON config file feeds every stage; subcommands pick which stage runs.
The schema is strict: unknown keys anywhere are errors naming the dotted
key path, and defaults are materialized into the effective config that
every stage echoes back in summary.json, so a run is reproducible from
config plus inputs alone. All artifacts are written atomically (temp file
plus rename); a failed stage leaves no partial outputs.

Exit codes: 0 success, 2 config error, 3 data error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .calibrate import calibrate_curves, write_calibration_csv
from .degrade import DEFAULT_GRIDS, DegradationGrid, DegradationSpec
from .embed import BackendDescriptor, batch_embed, save_archive
from .errors import (
    ConfigError,
    DataIOError,
    EmptyEvaluationError,
    LineupBenchError,
    ParameterError,
)
from .fixture import gen_fixture
from .fsio import atomic_write_text
from .lineup import (
    AccuracyCurve,
    CurvePoint,
    LineupPolicy,
    eval_from_archive,
    run_eval,
    subgroup_accuracy,
    sweep_degradation,
    sweep_rank_offset,
    SUBGROUP_KEYS,
)
from .manifest import (
    DatasetManifest,
    ProbeFilter,
    load_manifest,
    require_lineup_feasible,
)
from .report import (
    ReportBundle,
    TaggedCurve,
    eval_summary,
    load_curve,
    render_curves_svg,
    save_curve,
    write_lineups_csv,
    write_results_csv,
    write_scene_table,
    write_subgroups_csv,
)

COMMANDS = ("gen-fixture", "embed", "eval", "sweep", "rank-sweep",
            "calibrate", "report")

_MISSING = object()


class RunConfig:
    """Validated effective configuration for one pipeline run."""

    def __init__(self, effective: dict):
        self.effective = effective
        self.manifest_path: str | None = effective["manifest"]
        self.out_dir: str = effective["out_dir"]
        self.jobs: int = effective["jobs"]
        b = effective["backend"]
        try:
            if b["kind"] == "baseline":
                self.backend = BackendDescriptor(kind="baseline", seed=b["seed"])
            else:
                self.backend = BackendDescriptor(kind="archive",
                                                 archive_path=b["archive_path"])
            self.policy = LineupPolicy(rank_offset=effective["policy"]["rank_offset"])
            f = effective["filter"]
            self.probe_filter = ProbeFilter(
                occluded_only=f["occluded_only"],
                rotated_only=f["rotated_only"],
                low_light_only=f["low_light_only"],
                rotation_threshold=f["rotation_threshold"],
            )
            d = effective["degradation"]
            self.degradation = None if d is None else DegradationSpec(
                family=d["family"], level=d["level"], seed=d["seed"])
            self.sweep_grids = {
                family: DegradationGrid(family=family, levels=tuple(levels))
                for family, levels in effective["sweep"]["grids"].items()
            }
        except ParameterError as e:
            raise ConfigError(str(e)) from e
        self.sweep_seed: int = effective["sweep"]["seed"]
        self.rank_offsets: tuple[int, ...] = tuple(effective["rank_sweep"]["offsets"])
        c = effective["calibrate"]
        self.calibrate_real = None if c is None else c["real_curve"]
        self.calibrate_synth = None if c is None else c["synth_curve"]
        fx = effective["fixture"]
        self.fixture_params = (fx["n_identities"], fx["images_per_identity"],
                               fx["seed"])


def _type_name(value) -> str:
    return type(value).__name__


def _check_unknown(obj: dict, prefix: str, allowed: tuple[str, ...]) -> None:
    for key in obj:
        if key not in allowed:
            dotted = f"{prefix}.{key}" if prefix else key
            raise ConfigError(f"unknown key {dotted!r}")


def _field(obj: dict, prefix: str, key: str, kind: str, default=_MISSING):
    dotted = f"{prefix}.{key}" if prefix else key
    value = obj.get(key)
    if value is None:
        if default is _MISSING:
            raise ConfigError(f"missing required key {dotted!r}")
        return default
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"key {dotted!r}: expected string, got {_type_name(value)}")
        return value
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"key {dotted!r}: expected integer, got {_type_name(value)}")
        return value
    if kind == "number":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"key {dotted!r}: expected number, got {_type_name(value)}")
        return float(value)
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"key {dotted!r}: expected boolean, got {_type_name(value)}")
        return value
    if kind == "list":
        if not isinstance(value, list):
            raise ConfigError(f"key {dotted!r}: expected list, got {_type_name(value)}")
        return value
    if kind == "dict":
        if not isinstance(value, dict):
            raise ConfigError(f"key {dotted!r}: expected object, got {_type_name(value)}")
        return value
    raise AssertionError(kind)


def _effective_config(raw: dict) -> dict:
    """Validate the raw JSON document and materialize every default."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    _check_unknown(raw, "", ("manifest", "out_dir", "backend", "policy",
                             "filter", "degradation", "sweep", "rank_sweep",
                             "calibrate", "fixture", "jobs"))
    out: dict = {}
    out["manifest"] = _field(raw, "", "manifest", "str", default=None)
    out["out_dir"] = _field(raw, "", "out_dir", "str")
    out["jobs"] = _field(raw, "", "jobs", "int", default=1)
    if out["jobs"] < 1:
        raise ConfigError("key 'jobs': must be >= 1")

    backend = raw.get("backend") or {}
    _check_unknown(backend, "backend", ("kind", "seed", "archive_path"))
    kind = _field(backend, "backend", "kind", "str", default="baseline")
    if kind == "baseline":
        if backend.get("archive_path") is not None:
            raise ConfigError("key 'backend.archive_path': not valid for the "
                              "baseline backend")
        out["backend"] = {"kind": "baseline",
                          "seed": _field(backend, "backend", "seed", "int",
                                         default=0)}
    elif kind == "archive":
        if backend.get("seed") is not None:
            raise ConfigError("key 'backend.seed': not valid for the archive "
                              "backend")
        out["backend"] = {"kind": "archive",
                          "archive_path": _field(backend, "backend",
                                                 "archive_path", "str")}
    else:
        raise ConfigError(f"key 'backend.kind': unknown backend {kind!r}")

    policy = raw.get("policy") or {}
    _check_unknown(policy, "policy", ("rank_offset",))
    out["policy"] = {"rank_offset": _field(policy, "policy", "rank_offset",
                                           "int", default=5)}

    filt = raw.get("filter") or {}
    _check_unknown(filt, "filter", ("occluded_only", "rotated_only",
                                    "low_light_only", "rotation_threshold"))
    out["filter"] = {
        "occluded_only": _field(filt, "filter", "occluded_only", "bool",
                                default=False),
        "rotated_only": _field(filt, "filter", "rotated_only", "bool",
                               default=False),
        "low_light_only": _field(filt, "filter", "low_light_only", "bool",
                                 default=False),
        "rotation_threshold": _field(filt, "filter", "rotation_threshold",
                                     "number", default=30.0),
    }

    degradation = raw.get("degradation")
    if degradation is None:
        out["degradation"] = None
    else:
        deg = _field(raw, "", "degradation", "dict")
        _check_unknown(deg, "degradation", ("family", "level", "seed"))
        out["degradation"] = {
            "family": _field(deg, "degradation", "family", "str"),
            "level": _field(deg, "degradation", "level", "number"),
            "seed": _field(deg, "degradation", "seed", "int", default=0),
        }

    sweep = raw.get("sweep") or {}
    _check_unknown(sweep, "sweep", ("grids", "seed"))
    grids_raw = sweep.get("grids")
    if grids_raw is None:
        grids = {family: list(levels) for family, levels in DEFAULT_GRIDS.items()}
    else:
        grids_raw = _field(sweep, "sweep", "grids", "dict")
        grids = {}
        for family, levels in grids_raw.items():
            if family not in DEFAULT_GRIDS:
                raise ConfigError(f"unknown key 'sweep.grids.{family}'")
            levels = _field(grids_raw, "sweep.grids", family, "list")
            for i, lv in enumerate(levels):
                if isinstance(lv, bool) or not isinstance(lv, (int, float)):
                    raise ConfigError(
                        f"key 'sweep.grids.{family}[{i}]': expected number, "
                        f"got {_type_name(lv)}")
            grids[family] = [float(lv) for lv in levels]
    out["sweep"] = {"grids": grids,
                    "seed": _field(sweep, "sweep", "seed", "int", default=0)}

    rank_sweep = raw.get("rank_sweep") or {}
    _check_unknown(rank_sweep, "rank_sweep", ("offsets",))
    offsets = _field(rank_sweep, "rank_sweep", "offsets", "list", default=[5])
    for i, n in enumerate(offsets):
        if isinstance(n, bool) or not isinstance(n, int):
            raise ConfigError(f"key 'rank_sweep.offsets[{i}]': expected "
                              f"integer, got {_type_name(n)}")
        if n < 5:
            raise ConfigError(f"key 'rank_sweep.offsets[{i}]': must be >= 5")
    out["rank_sweep"] = {"offsets": list(offsets)}

    calibrate = raw.get("calibrate")
    if calibrate is None:
        out["calibrate"] = None
    else:
        cal = _field(raw, "", "calibrate", "dict")
        _check_unknown(cal, "calibrate", ("real_curve", "synth_curve"))
        out["calibrate"] = {
            "real_curve": _field(cal, "calibrate", "real_curve", "str"),
            "synth_curve": _field(cal, "calibrate", "synth_curve", "str"),
        }

    fixture = raw.get("fixture") or {}
    _check_unknown(fixture, "fixture", ("n_identities", "images_per_identity",
                                        "seed"))
    out["fixture"] = {
        "n_identities": _field(fixture, "fixture", "n_identities", "int",
                               default=8),
        "images_per_identity": _field(fixture, "fixture",
                                      "images_per_identity", "int", default=2),
        "seed": _field(fixture, "fixture", "seed", "int", default=0),
    }
    return out


def _apply_override(raw: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form "
                          f"key.path=value")
    dotted, text = assignment.split("=", 1)
    keys = dotted.split(".")
    if not all(keys):
        raise ConfigError(f"override {assignment!r} has an empty key segment")
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text  # bare strings allowed unquoted
    node = raw
    for key in keys[:-1]:
        child = node.get(key)
        if child is None:
            child = {}
            node[key] = child
        if not isinstance(child, dict):
            raise ConfigError(f"override {dotted!r} descends into "
                              f"non-object key {key!r}")
        node = child
    node[keys[-1]] = value


def parse_config(path: str, overrides: list[str] | None = None) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e.msg} "
                          f"(line {e.lineno})") from e
    for assignment in overrides or []:
        _apply_override(raw, assignment)
    return RunConfig(_effective_config(raw))


# ----------------------------------------------------------------- stages


def _write_summary(cfg: RunConfig, command: str, payload: dict) -> None:
    obj = {"command": command, "config": cfg.effective}
    obj.update(payload)
    atomic_write_text(os.path.join(cfg.out_dir, "summary.json"),
                      json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_cfg_manifest(cfg: RunConfig) -> DatasetManifest:
    if cfg.manifest_path is None:
        raise ConfigError("missing required key 'manifest'")
    return load_manifest(cfg.manifest_path)


def _ensure_out_dir(cfg: RunConfig) -> None:
    try:
        os.makedirs(cfg.out_dir, exist_ok=True)
    except OSError as e:
        raise DataIOError(f"cannot create output directory {cfg.out_dir}: {e}") from e


def _stage_gen_fixture(cfg: RunConfig) -> dict:
    n, per, seed = cfg.fixture_params
    manifest = gen_fixture(n, per, seed, cfg.out_dir)
    return {
        "manifest": os.path.join(cfg.out_dir, "manifest.jsonl"),
        "n_records": len(manifest.records),
        "n_identities": len(manifest.identities()),
    }


def _stage_embed(cfg: RunConfig) -> dict:
    manifest = _load_cfg_manifest(cfg)
    archive = batch_embed(manifest, cfg.backend, cfg.degradation, jobs=cfg.jobs)
    out_path = os.path.join(cfg.out_dir, "embeddings.emb1")
    save_archive(archive, out_path)
    return {"archive": out_path, "backend_id": archive.backend_id,
            "dim": archive.dim, "n_entries": len(archive.entries)}


def _stage_eval(cfg: RunConfig) -> dict:
    manifest = _load_cfg_manifest(cfg)
    result = run_eval(manifest, cfg.backend, cfg.policy, cfg.probe_filter,
                      cfg.degradation, jobs=cfg.jobs)
    write_lineups_csv(result, os.path.join(cfg.out_dir, "lineups.csv"))
    return {"eval": eval_summary(result)}


def _stage_sweep(cfg: RunConfig) -> dict:
    manifest = _load_cfg_manifest(cfg)
    summary = {}
    for family in sorted(cfg.sweep_grids):
        curve = sweep_degradation(manifest, cfg.backend,
                                  cfg.sweep_grids[family], cfg.policy,
                                  seed=cfg.sweep_seed,
                                  probe_filter=cfg.probe_filter,
                                  jobs=cfg.jobs)
        save_curve(curve, os.path.join(cfg.out_dir, f"curve_{family}.json"))
        summary[family] = {"levels": list(curve.levels()),
                           "accuracies": list(curve.accuracies())}
    return {"curves": summary}


def _stage_rank_sweep(cfg: RunConfig) -> dict:
    manifest = _load_cfg_manifest(cfg)
    points = sweep_rank_offset(manifest, cfg.backend, cfg.policy,
                               list(cfg.rank_offsets),
                               probe_filter=cfg.probe_filter, jobs=cfg.jobs)
    lines = ["rank_offset,accuracy,mean_decoy_similarity,n"]
    for p in points:
        lines.append(f"{p.rank_offset},{p.accuracy:.4f},"
                     f"{p.mean_decoy_similarity:.6f},{p.n_probes}")
    atomic_write_text(os.path.join(cfg.out_dir, "rank_sweep.csv"),
                      "\n".join(lines) + "\n")
    return {"rank_sweep": [
        {"rank_offset": p.rank_offset, "accuracy": p.accuracy,
         "mean_decoy_similarity": p.mean_decoy_similarity,
         "n_probes": p.n_probes} for p in points]}


def _load_calibration(cfg: RunConfig):
    if cfg.calibrate_real is None or cfg.calibrate_synth is None:
        raise ConfigError("missing required key 'calibrate.real_curve' / "
                          "'calibrate.synth_curve'")
    real = load_curve(cfg.calibrate_real)
    synth = load_curve(cfg.calibrate_synth)
    return real, synth, calibrate_curves(real, synth)


def _stage_calibrate(cfg: RunConfig) -> dict:
    real, synth, table = _load_calibration(cfg)
    write_calibration_csv([table], os.path.join(cfg.out_dir, "calibration.csv"))
    return {"calibration": {
        "family": table.family,
        "rows": [{"real_level": r.real_level,
                  "calibrated_level": r.calibrated_level,
                  "target_acc": r.target_accuracy,
                  "achieved_acc": r.achieved_accuracy,
                  "clamped": r.clamped} for r in table.rows]}}


def _scene_conditions(cfg: RunConfig) -> list[tuple[str, ProbeFilter]]:
    threshold = cfg.probe_filter.rotation_threshold
    return [
        ("baseline", ProbeFilter(rotation_threshold=threshold)),
        ("occluded", ProbeFilter(occluded_only=True,
                                 rotation_threshold=threshold)),
        ("rotated", ProbeFilter(rotated_only=True,
                                rotation_threshold=threshold)),
        ("low_light", ProbeFilter(low_light_only=True,
                                  rotation_threshold=threshold)),
        ("all_three", ProbeFilter(occluded_only=True, rotated_only=True,
                                  low_light_only=True,
                                  rotation_threshold=threshold)),
    ]


def _stage_report(cfg: RunConfig) -> dict:
    manifest = _load_cfg_manifest(cfg)
    payload: dict = {}

    # one clean embedding pass feeds the base eval and every scene subset
    require_lineup_feasible(manifest)
    archive = batch_embed(manifest, cfg.backend, None, jobs=cfg.jobs)
    base = eval_from_archive(manifest, archive, cfg.policy, None)
    payload["eval"] = eval_summary(base)
    subgroups = {key: subgroup_accuracy(base, key) for key in SUBGROUP_KEYS}
    write_subgroups_csv(subgroups, os.path.join(cfg.out_dir, "subgroups.csv"))
    payload["subgroups"] = {
        key: [{"group": g, "accuracy": a, "n": n} for g, a, n in rows]
        for key, rows in subgroups.items()}

    scene: list = [("baseline", base)]
    omitted = []
    for label, condition in _scene_conditions(cfg)[1:]:
        try:
            scene.append((label, eval_from_archive(manifest, archive,
                                                   cfg.policy, condition)))
        except EmptyEvaluationError:
            omitted.append(label)
    write_scene_table(scene, os.path.join(cfg.out_dir, "scene.csv"))
    payload["scene"] = [{"condition": label, "accuracy": r.accuracy,
                         "n": r.n_probes} for label, r in scene]
    if omitted:
        payload["scene_omitted"] = omitted

    tagged = []
    for name in sorted(os.listdir(cfg.out_dir)):
        if name.startswith("curve_") and name.endswith(".json"):
            tagged.append(TaggedCurve(
                series="real",
                curve=load_curve(os.path.join(cfg.out_dir, name))))
    if cfg.calibrate_real is not None:
        real, synth, table = _load_calibration(cfg)
        write_calibration_csv([table],
                              os.path.join(cfg.out_dir, "calibration.csv"))
        tagged.append(TaggedCurve(series="synthetic", curve=synth))
        if len(table.rows) >= 2:
            n_by_level = {p.level: p.n_probes for p in real.points}
            tagged.append(TaggedCurve(series="calibrated", curve=AccuracyCurve(
                family=table.family,
                points=tuple(CurvePoint(level=r.calibrated_level,
                                        accuracy=r.achieved_accuracy,
                                        n_probes=n_by_level.get(r.real_level, 0))
                             for r in table.rows),
                dataset_id=synth.dataset_id)))

    bundle = ReportBundle(curves=tuple(tagged), subgroups=subgroups,
                          scene=tuple(scene),
                          metadata={"backend_id": cfg.backend.backend_id(),
                                    "rank_offset": cfg.policy.rank_offset})
    write_results_csv(bundle, os.path.join(cfg.out_dir, "results.csv"))
    rendered = []
    for family in bundle.families():
        svg_path = os.path.join(cfg.out_dir, f"curve_{family}.svg")
        render_curves_svg(bundle, family, svg_path)
        rendered.append(svg_path)
    payload["artifacts"] = sorted(
        ["results.csv", "subgroups.csv", "scene.csv"]
        + (["calibration.csv"] if cfg.calibrate_real is not None else [])
        + [os.path.basename(p) for p in rendered])
    return payload


_STAGES = {
    "gen-fixture": _stage_gen_fixture,
    "embed": _stage_embed,
    "eval": _stage_eval,
    "sweep": _stage_sweep,
    "rank-sweep": _stage_rank_sweep,
    "calibrate": _stage_calibrate,
    "report": _stage_report,
}


def dispatch(command: str, cfg: RunConfig) -> None:
    if command not in _STAGES:
        raise ConfigError(f"unknown command {command!r}")
    _ensure_out_dir(cfg)
    payload = _STAGES[command](cfg)
    _write_summary(cfg, command, payload)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="lineupbench",
        description="six-person lineup evaluation harness")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--stage-override", action="append", default=[],
                       metavar="KEY.PATH=VALUE",
                       help="override one config value (repeatable)")
        p.add_argument("--jobs", type=int, default=None,
                       help="parallel workers for embedding")
    args = parser.parse_args(argv)
    try:
        overrides = list(args.stage_override)
        if args.jobs is not None:
            overrides.append(f"jobs={args.jobs}")
        cfg = parse_config(args.config, overrides)
        dispatch(args.command, cfg)
        return 0
    except ConfigError as e:
        print(f"lineupbench: ConfigError: {e}", file=sys.stderr)
        return 2
    except DataIOError as e:
        print(f"lineupbench: DataIOError: {e}", file=sys.stderr)
        return 4
    except LineupBenchError as e:
        print(f"lineupbench: {type(e).__name__}: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Manifest schema, JSONL round trips, mugshot designation, probe filters."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lineupbench.errors import DataIOError, ValidationError
from lineupbench.manifest import (
    DatasetManifest,
    ImageRecord,
    ProbeFilter,
    filter_probes,
    load_manifest,
    require_lineup_feasible,
    save_manifest,
    select_mugshots,
)

from conftest import make_record


def test_record_validation_rules():
    make_record("a", "i").validate()
    with pytest.raises(ValidationError):
        make_record("", "i").validate()
    with pytest.raises(ValidationError):
        make_record("a", "").validate()
    with pytest.raises(ValidationError):
        make_record("a", "i", role="selfie").validate()
    with pytest.raises(ValidationError):
        make_record("a", "i", glasses="monocle").validate()
    with pytest.raises(ValidationError):
        make_record("a", "i", lighting="noon").validate()
    with pytest.raises(ValidationError):
        make_record("a", "i", source="scanned").validate()
    with pytest.raises(ValidationError):
        make_record("a", "i", yaw=200.0).validate()
    with pytest.raises(ValidationError):
        make_record("a", "i", bbox=(0, 0, 0, 5)).validate()


def test_mugshot_standardization_enforced():
    # mugshots must be unoccluded and near-frontal
    with pytest.raises(ValidationError):
        make_record("a", "i", role="mugshot", glasses="opaque").validate()
    with pytest.raises(ValidationError):
        make_record("a", "i", role="mugshot", mask=True).validate()
    with pytest.raises(ValidationError):
        make_record("a", "i", role="mugshot", yaw=11.0).validate()
    make_record("a", "i", role="mugshot", yaw=10.0).validate()
    # the same pose is fine on an unconstrained record
    make_record("a", "i", role="unconstrained", yaw=65.0,
                glasses="opaque").validate()


def _two_identity_manifest():
    return DatasetManifest(dataset_id="t", records=(
        make_record("a_m", "a", role="mugshot"),
        make_record("a_p", "a", role="unconstrained", yaw=45.0,
                    glasses="opaque", lighting="low"),
        make_record("b_m", "b", role="mugshot", bbox=(4, 4, 32, 32)),
        make_record("b_p", "b", role="unconstrained", mask=True),
    ))


def test_round_trip_is_lossless(tmp_path):
    manifest = _two_identity_manifest()
    path = tmp_path / "m.jsonl"
    save_manifest(manifest, path)
    back = load_manifest(path, dataset_id="t")
    assert back.records == manifest.records
    assert back.dataset_id == "t"
    # absolute record paths survive untouched
    assert back.records[0].path == "/data/a_m.png"


def test_round_trip_with_relative_paths(tmp_path):
    base = tmp_path / "ds"
    base.mkdir()
    rec = make_record("a_m", "a", path=str(base / "images" / "a_m.png"))
    manifest = DatasetManifest(dataset_id="d", records=(rec,))
    path = base / "manifest.jsonl"
    save_manifest(manifest, path, relative_to=base)
    text = path.read_text()
    assert '"path":"images/a_m.png"' in text.replace(" ", "")
    back = load_manifest(path)
    # relative paths resolve against the manifest directory
    assert back.records[0].path == str(base / "images" / "a_m.png")
    assert back.dataset_id == "manifest"  # defaults to the file stem


def test_line_numbers_in_errors(tmp_path):
    path = tmp_path / "m.jsonl"
    good = json.dumps({
        "image_id": "a_m", "identity_id": "a", "path": "x.png",
        "role": "mugshot", "yaw": 0, "pitch": 0, "roll": 0,
        "glasses": "none", "mask": False, "headwear": False,
        "lighting": "normal", "race": "other", "gender": "male",
        "source": "real", "bbox": None,
    })
    path.write_text(good + "\n{not json\n")
    with pytest.raises(ValidationError, match="line 2"):
        load_manifest(path)
    path.write_text(good + "\n" + good + "\n")
    with pytest.raises(ValidationError, match=r"line 2: duplicate image_id 'a_m'"):
        load_manifest(path)
    # blank lines do not advance record identity but keep line numbering
    path.write_text(good + "\n\n" + good + "\n")
    with pytest.raises(ValidationError, match="line 3"):
        load_manifest(path)


def test_unknown_key_strict_vs_lenient(tmp_path):
    obj = json.loads(json.dumps({
        "image_id": "a_m", "identity_id": "a", "path": "x.png",
        "role": "mugshot", "yaw": 0, "pitch": 0, "roll": 0,
        "glasses": "none", "mask": False, "headwear": False,
        "lighting": "normal", "race": "other", "gender": "male",
        "source": "real", "bbox": None,
    }))
    obj["haircolor"] = "brown"
    path = tmp_path / "m.jsonl"
    path.write_text(json.dumps(obj) + "\n")
    with pytest.raises(ValidationError, match="'haircolor'"):
        load_manifest(path)
    back = load_manifest(path, strict=False)
    assert len(back.records) == 1


def test_missing_key_named(tmp_path):
    obj = {
        "image_id": "a_m", "identity_id": "a", "path": "x.png",
        "role": "mugshot", "yaw": 0, "pitch": 0, "roll": 0,
        "glasses": "none", "mask": False, "headwear": False,
        "lighting": "normal", "race": "other", "gender": "male",
        "source": "real",
    }  # no bbox
    path = tmp_path / "m.jsonl"
    path.write_text(json.dumps(obj) + "\n")
    with pytest.raises(ValidationError, match="line 1: missing key 'bbox'"):
        load_manifest(path)


def test_load_missing_file(tmp_path):
    with pytest.raises(DataIOError):
        load_manifest(tmp_path / "absent.jsonl")


def test_select_mugshots_smallest_image_id():
    manifest = DatasetManifest(dataset_id="t", records=(
        make_record("m2", "a", role="mugshot"),
        make_record("m1", "a", role="mugshot"),
        make_record("p1", "a", role="unconstrained"),
        make_record("m9", "b", role="mugshot"),
    ))
    chosen = select_mugshots(manifest)
    assert chosen["a"].image_id == "m1"
    assert chosen["b"].image_id == "m9"
    assert set(chosen) == {"a", "b"}


def test_filter_probes_conjunction():
    manifest = _two_identity_manifest()
    probes = filter_probes(manifest, None)
    assert [r.image_id for r in probes] == ["a_p", "b_p"]
    # unconstrained-only: mugshots never pass any filter
    assert all(r.role == "unconstrained" for r in probes)
    occluded = filter_probes(manifest, ProbeFilter(occluded_only=True))
    assert [r.image_id for r in occluded] == ["a_p", "b_p"]  # glasses / mask
    rotated = filter_probes(manifest, ProbeFilter(rotated_only=True))
    assert [r.image_id for r in rotated] == ["a_p"]
    low = filter_probes(manifest, ProbeFilter(low_light_only=True))
    assert [r.image_id for r in low] == ["a_p"]
    both = filter_probes(manifest, ProbeFilter(rotated_only=True,
                                               low_light_only=True,
                                               occluded_only=True))
    assert [r.image_id for r in both] == ["a_p"]
    none = filter_probes(manifest, ProbeFilter(rotated_only=True,
                                               rotation_threshold=50.0))
    assert none == []


def test_rotation_threshold_is_strict():
    rec = make_record("p", "a", role="unconstrained", yaw=30.0)
    assert not ProbeFilter(rotated_only=True).matches(rec)  # 30 is not > 30
    assert ProbeFilter(rotated_only=True, rotation_threshold=29.9).matches(rec)
    from lineupbench.errors import ParameterError
    with pytest.raises(ParameterError):
        ProbeFilter(rotation_threshold=0.0)


def test_require_lineup_feasible():
    records = []
    for i in range(6):
        records.append(make_record(f"m{i}", f"id{i}", role="mugshot"))
    require_lineup_feasible(DatasetManifest(dataset_id="t",
                                            records=tuple(records)))
    with pytest.raises(ValidationError, match=">= 6"):
        require_lineup_feasible(DatasetManifest(dataset_id="t",
                                                records=tuple(records[:5])))


_id_chars = st.text(
    alphabet=st.characters(min_codepoint=48, max_codepoint=122,
                           categories=("Ll", "Lu", "Nd")),
    min_size=1, max_size=12)


@settings(max_examples=40, deadline=None)
@given(st.lists(_id_chars, min_size=1, max_size=6, unique=True),
       st.floats(-180, 180, allow_nan=False),
       st.sampled_from(["none", "clear", "opaque"]),
       st.booleans(), st.sampled_from(["normal", "low"]))
def test_round_trip_property(tmp_path_factory, ids, yaw, glasses, mask, light):
    records = tuple(
        make_record(f"{i}_{name}", name, role="unconstrained", yaw=yaw,
                    glasses=glasses, mask=mask, lighting=light)
        for i, name in enumerate(ids))
    manifest = DatasetManifest(dataset_id="prop", records=records)
    path = tmp_path_factory.mktemp("rt") / "m.jsonl"
    save_manifest(manifest, path)
    assert load_manifest(path, dataset_id="prop").records == records

"""Shared fixtures: tiny generated corpora (session-scoped, they cost
seconds) and helpers for building in-memory manifests and embeddings."""

import numpy as np
import pytest

from lineupbench.embed import Embedding
from lineupbench.fixture import gen_fixture
from lineupbench.manifest import DatasetManifest, ImageRecord
from lineupbench.rng import normals


@pytest.fixture(scope="session")
def corpus6(tmp_path_factory):
    """6 identities x 2 images, the smallest feasible lineup corpus."""
    out = tmp_path_factory.mktemp("corpus6")
    manifest = gen_fixture(6, 2, 3, out)
    return manifest, out


@pytest.fixture(scope="session")
def corpus8(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus8")
    manifest = gen_fixture(8, 2, 5, out)
    return manifest, out


def make_record(image_id, identity_id, role="mugshot", **kw):
    defaults = dict(
        path=f"/data/{image_id}.png",
        yaw=0.0, pitch=0.0, roll=0.0,
        glasses="none", mask=False, headwear=False,
        lighting="normal", race="other", gender="female",
        source="synthetic", bbox=None,
    )
    defaults.update(kw)
    return ImageRecord(image_id=image_id, identity_id=identity_id,
                       role=role, **defaults)


def make_pair_manifest(n_identities, dataset_id="synthetic-pairs"):
    """One mugshot (m) and one probe (p) per identity, no pixels behind them."""
    records = []
    for i in range(n_identities):
        ident = f"id{i:03d}"
        records.append(make_record(f"{ident}_m", ident, role="mugshot"))
        records.append(make_record(f"{ident}_p", ident, role="unconstrained",
                                   yaw=40.0))
    return DatasetManifest(dataset_id=dataset_id, records=tuple(records))


def unit(values):
    v = np.asarray(values, dtype=np.float64)
    return Embedding(v / np.linalg.norm(v))


def random_unit(seed, dim=32):
    return unit(normals(seed, dim))

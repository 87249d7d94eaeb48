"""Six-person lineup construction, the strict match rule, and evaluation
runners (single pass, degradation sweeps, rank-offset sweeps, subgroups).

A lineup pits one probe image against six gallery mugshots: the probe
identity's own mugshot plus five decoys. Decoys are the identities whose
mugshot embeddings rank (n-4)th through n-th most similar to the probe
embedding among all other identities, so rank_offset n = 5 picks the top
five and larger n picks progressively less similar decoys. The match is
correct only when the target similarity strictly exceeds every decoy
similarity; ties count as incorrect.
"""

from __future__ import annotations

from dataclasses import dataclass

from .degrade import DegradationGrid, DegradationSpec
from .embed import BackendDescriptor, EmbeddingArchive, batch_embed, cosine_similarity
from .errors import EmptyEvaluationError, ParameterError, SetupError
from .manifest import (
    DatasetManifest,
    ImageRecord,
    ProbeFilter,
    filter_probes,
    require_lineup_feasible,
    select_mugshots,
)

CHANCE_LEVEL = 1.0 / 6.0
DECOY_COUNT = 5

SUBGROUP_KEYS = ("race", "gender")


@dataclass(frozen=True)
class LineupPolicy:
    rank_offset: int = 5

    def __post_init__(self):
        if not isinstance(self.rank_offset, int) or self.rank_offset < 5:
            raise ParameterError(
                f"rank_offset must be an integer >= 5, got {self.rank_offset!r}")


@dataclass(frozen=True)
class Lineup:
    probe_id: str
    target_id: str
    decoy_ids: tuple[str, ...]
    target_similarity: float
    decoy_similarities: tuple[float, ...]

    def __post_init__(self):
        if self.probe_id == self.target_id:
            raise ParameterError("probe and target must be distinct images")
        if len(self.decoy_ids) != DECOY_COUNT:
            raise ParameterError(f"exactly {DECOY_COUNT} decoys required")
        if len(self.decoy_similarities) != DECOY_COUNT:
            raise ParameterError("one similarity per decoy required")
        if len(set(self.decoy_ids)) != DECOY_COUNT:
            raise ParameterError("decoy ids must be pairwise distinct")
        if self.target_id in self.decoy_ids or self.probe_id in self.decoy_ids:
            raise ParameterError("probe and target may not appear among decoys")
        for s in (self.target_similarity, *self.decoy_similarities):
            if not -1.0 <= s <= 1.0:
                raise ParameterError(f"similarity {s} outside [-1, 1]")


@dataclass(frozen=True)
class MatchOutcome:
    lineup: Lineup
    correct: bool
    margin: float  # target similarity minus best decoy similarity


@dataclass(frozen=True)
class EvalResult:
    n_correct: int
    n_probes: int
    outcomes: tuple[MatchOutcome, ...] = ()
    probes: tuple[ImageRecord, ...] = ()  # aligned with outcomes when present
    skipped: tuple[tuple[str, str], ...] = ()  # (probe_id, reason)
    dataset_id: str = ""

    def __post_init__(self):
        if self.n_probes < 1:
            raise ParameterError("evaluation needs at least one probe")
        if not 0 <= self.n_correct <= self.n_probes:
            raise ParameterError("n_correct outside [0, n_probes]")
        if self.outcomes:
            if len(self.outcomes) != self.n_probes:
                raise ParameterError("outcome count must equal n_probes")
            if sum(1 for o in self.outcomes if o.correct) != self.n_correct:
                raise ParameterError("n_correct disagrees with outcomes")
        if self.probes and len(self.probes) != self.n_probes:
            raise ParameterError("probe record count must equal n_probes")

    @property
    def accuracy(self) -> float:
        return self.n_correct / self.n_probes


@dataclass(frozen=True)
class CurvePoint:
    level: float
    accuracy: float
    n_probes: int

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ParameterError(f"accuracy {self.accuracy} outside [0, 1]")


@dataclass(frozen=True)
class AccuracyCurve:
    family: str
    points: tuple[CurvePoint, ...]
    dataset_id: str = ""

    def __post_init__(self):
        if len(self.points) < 2:
            raise ParameterError("a curve needs at least 2 points")

    def levels(self) -> tuple[float, ...]:
        return tuple(p.level for p in self.points)

    def accuracies(self) -> tuple[float, ...]:
        return tuple(p.accuracy for p in self.points)


@dataclass(frozen=True)
class RankSweepPoint:
    rank_offset: int
    accuracy: float
    mean_decoy_similarity: float
    n_probes: int


def build_lineup(probe: ImageRecord, archive: EmbeddingArchive,
                 mugshots: dict[str, ImageRecord],
                 policy: LineupPolicy) -> Lineup:
    """Rank every other identity's mugshot by similarity to the probe and
    take ranks (n-4)..n as decoys; ties break toward smaller identity_id."""
    target = mugshots.get(probe.identity_id)
    if target is None or target.image_id == probe.image_id:
        raise SetupError(
            f"probe {probe.image_id!r}: identity {probe.identity_id!r} has no "
            f"distinct mugshot")
    n = policy.rank_offset
    probe_emb = archive.get(probe.image_id)
    ranked = sorted(
        ((identity, cosine_similarity(probe_emb, archive.get(rec.image_id)), rec)
         for identity, rec in mugshots.items() if identity != probe.identity_id),
        key=lambda item: (-item[1], item[0]),
    )
    if len(ranked) < n:
        raise SetupError(
            f"probe {probe.image_id!r}: rank offset {n} needs {n} other "
            f"identities with mugshots, found {len(ranked)}")
    chosen = ranked[n - DECOY_COUNT:n]
    return Lineup(
        probe_id=probe.image_id,
        target_id=target.image_id,
        decoy_ids=tuple(rec.image_id for _, _, rec in chosen),
        target_similarity=cosine_similarity(probe_emb, archive.get(target.image_id)),
        decoy_similarities=tuple(sim for _, sim, _ in chosen),
    )


def evaluate_lineup(lineup: Lineup) -> MatchOutcome:
    margin = lineup.target_similarity - max(lineup.decoy_similarities)
    return MatchOutcome(lineup=lineup, correct=margin > 0.0, margin=margin)


def eval_from_archive(manifest: DatasetManifest, archive: EmbeddingArchive,
                       policy: LineupPolicy,
                       probe_filter: ProbeFilter | None) -> EvalResult:
    mugshots = select_mugshots(manifest)
    probes = filter_probes(manifest, probe_filter or ProbeFilter())
    if not probes:
        raise EmptyEvaluationError("no probes left after filtering")
    kept: list[tuple[ImageRecord, MatchOutcome]] = []
    skipped: list[tuple[str, str]] = []
    for probe in probes:
        target = mugshots.get(probe.identity_id)
        if target is None or target.image_id == probe.image_id:
            skipped.append((probe.image_id, "no distinct mugshot"))
            continue
        kept.append((probe, evaluate_lineup(build_lineup(probe, archive,
                                                         mugshots, policy))))
    if not kept:
        raise EmptyEvaluationError(
            f"all {len(skipped)} probes skipped (no distinct mugshots)")
    kept.sort(key=lambda pair: pair[0].image_id)
    outcomes = tuple(o for _, o in kept)
    return EvalResult(
        n_correct=sum(1 for o in outcomes if o.correct),
        n_probes=len(outcomes),
        outcomes=outcomes,
        probes=tuple(p for p, _ in kept),
        skipped=tuple(skipped),
        dataset_id=manifest.dataset_id,
    )


def run_eval(manifest: DatasetManifest, backend: BackendDescriptor,
             policy: LineupPolicy, probe_filter: ProbeFilter | None = None,
             degradation: DegradationSpec | None = None,
             jobs: int = 1) -> EvalResult:
    """Embed (probes degraded, mugshots clean), build one lineup per
    eligible probe, and aggregate. Probes without a distinct mugshot are
    skipped and reported, not silently dropped."""
    require_lineup_feasible(manifest)
    archive = batch_embed(manifest, backend, degradation, jobs=jobs)
    return eval_from_archive(manifest, archive, policy, probe_filter)


def sweep_degradation(manifest: DatasetManifest, backend: BackendDescriptor,
                      grid: DegradationGrid, policy: LineupPolicy,
                      seed: int = 0, probe_filter: ProbeFilter | None = None,
                      jobs: int = 1) -> AccuracyCurve:
    """One full evaluation per grid level, probes re-embedded after
    degradation at that level; points emitted in grid order."""
    points = []
    for level in grid.levels:
        spec = DegradationSpec(grid.family, level, seed=seed)
        result = run_eval(manifest, backend, policy, probe_filter,
                          degradation=spec, jobs=jobs)
        points.append(CurvePoint(level=float(level), accuracy=result.accuracy,
                                 n_probes=result.n_probes))
    return AccuracyCurve(family=grid.family, points=tuple(points),
                         dataset_id=manifest.dataset_id)


def sweep_rank_offset(manifest: DatasetManifest, backend: BackendDescriptor,
                      policy: LineupPolicy, offsets: list[int],
                      probe_filter: ProbeFilter | None = None,
                      jobs: int = 1) -> tuple[RankSweepPoint, ...]:
    """Evaluate undegraded lineups at several rank offsets from one shared
    embedding pass; reports mean probe-decoy similarity per offset."""
    if not offsets:
        raise ParameterError("at least one rank offset required")
    require_lineup_feasible(manifest)
    archive = batch_embed(manifest, backend, None, jobs=jobs)
    points = []
    for n in offsets:
        result = eval_from_archive(manifest, archive, LineupPolicy(rank_offset=n),
                                    probe_filter)
        sims = [s for o in result.outcomes for s in o.lineup.decoy_similarities]
        points.append(RankSweepPoint(
            rank_offset=n,
            accuracy=result.accuracy,
            mean_decoy_similarity=sum(sims) / len(sims),
            n_probes=result.n_probes,
        ))
    return tuple(points)


def subgroup_accuracy(result: EvalResult, key: str) -> list[tuple[str, float, int]]:
    """Per-group accuracy for an attribute key; empty groups are absent."""
    if key not in SUBGROUP_KEYS:
        raise ParameterError(
            f"unknown subgroup key {key!r}, expected one of {SUBGROUP_KEYS}")
    if not result.probes:
        raise ParameterError("result carries no probe records to group by")
    totals: dict[str, list[int]] = {}
    for rec, outcome in zip(result.probes, result.outcomes):
        group = getattr(rec, key)
        bucket = totals.setdefault(group, [0, 0])
        bucket[0] += 1 if outcome.correct else 0
        bucket[1] += 1
    return [(group, totals[group][0] / totals[group][1], totals[group][1])
            for group in sorted(totals)]

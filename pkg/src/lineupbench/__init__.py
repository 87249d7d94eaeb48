"""Forensic lineup evaluation harness for face-embedding backends.

Pipeline: manifest -> (optional degradation) -> embeddings -> six-person
lineups -> accuracy metrics, sweeps, calibration tables, and report files.
"""

from .calibrate import (
    CalibrationRow,
    CalibrationTable,
    apply_table,
    build_table,
    calibrate_curves,
    fit_isotonic,
    invert_accuracy,
    split_gamma_branches,
)
from .degrade import (
    CROP_SIZE,
    DEFAULT_GRIDS,
    DegradationGrid,
    DegradationSpec,
    apply_blur,
    apply_gamma,
    apply_jpeg,
    apply_noise,
    apply_scale,
    apply_spec,
    crop_resize,
    gaussian_kernel,
)
from .embed import (
    BASELINE_DIM,
    BackendDescriptor,
    Embedding,
    EmbeddingArchive,
    baseline_embed,
    batch_embed,
    cosine_similarity,
    load_archive,
    save_archive,
)
from .errors import (
    ArchiveLookupError,
    ConfigError,
    DataIOError,
    EmptyEvaluationError,
    FormatError,
    LineupBenchError,
    ParameterError,
    RangeError,
    SetupError,
    ValidationError,
)
from .fixture import gen_fixture
from .lineup import (
    CHANCE_LEVEL,
    DECOY_COUNT,
    AccuracyCurve,
    CurvePoint,
    EvalResult,
    Lineup,
    LineupPolicy,
    MatchOutcome,
    RankSweepPoint,
    build_lineup,
    eval_from_archive,
    evaluate_lineup,
    run_eval,
    subgroup_accuracy,
    sweep_degradation,
    sweep_rank_offset,
)
from .manifest import (
    DatasetManifest,
    ImageRecord,
    ProbeFilter,
    filter_probes,
    load_manifest,
    require_lineup_feasible,
    save_manifest,
    select_mugshots,
)
from .raster import RasterImage, load_image, luma, resize_bilinear, save_png
from .report import (
    ReportBundle,
    TaggedCurve,
    load_curve,
    render_curves_svg,
    save_curve,
    write_results_csv,
    write_scene_table,
)

__version__ = "0.1.0"

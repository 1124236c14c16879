"""votesr: human-feedback sample selection and ensembling for stochastic SR.

Turns a set of candidate super-resolution images into a single trustworthy
output: collect selection ballots, tally majority votes, pixel-average the
top-k candidates, and evaluate with bicubic-degradation-consistent metrics.
"""

from .ensemble import (
    Ballot,
    EnsembleResult,
    SampleSet,
    TallyResult,
    ensemble_pipeline,
    format_percent,
    label_consensus,
    pixel_average,
    select_top_k,
    tally,
    validate_ballot,
)
from .errors import (
    BallotRejected,
    EnsembleError,
    ImageError,
    MetricError,
    StoreError,
    StudyError,
    VotesrError,
)
from .image import (
    Image,
    ResampleSpec,
    ScaleFactor,
    bicubic_resize,
    crop,
    degrade,
    tile_replicate,
    to_luma,
)
from .io import load_png, save_png
from .metrics import (
    ExternalScoreTable,
    MetricReport,
    build_report,
    load_external_scores,
    lr_consistency,
    mse,
    psnr,
    ssim,
    write_report_csv,
)
from .shuffle import derive_permutation, invert_permutation
from .study import (
    RoundView,
    Session,
    StudyConfig,
    make_task1_config,
    make_task2_config,
    next_round,
    record_round_ballot,
)

__all__ = [
    "Image",
    "ScaleFactor",
    "ResampleSpec",
    "bicubic_resize",
    "degrade",
    "tile_replicate",
    "crop",
    "to_luma",
    "load_png",
    "save_png",
    "mse",
    "psnr",
    "ssim",
    "lr_consistency",
    "ExternalScoreTable",
    "load_external_scores",
    "MetricReport",
    "build_report",
    "write_report_csv",
    "SampleSet",
    "Ballot",
    "TallyResult",
    "EnsembleResult",
    "validate_ballot",
    "tally",
    "select_top_k",
    "pixel_average",
    "label_consensus",
    "format_percent",
    "ensemble_pipeline",
    "derive_permutation",
    "invert_permutation",
    "StudyConfig",
    "Session",
    "RoundView",
    "make_task1_config",
    "make_task2_config",
    "next_round",
    "record_round_ballot",
    "VotesrError",
    "ImageError",
    "MetricError",
    "EnsembleError",
    "BallotRejected",
    "StudyError",
    "StoreError",
]

__version__ = "0.1.0"

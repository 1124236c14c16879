"""Full-reference fidelity metrics plus ingestion of external perceptual scores.

PSNR, MSE, SSIM, and LR-consistency are computed natively on [0,1] pixel
buffers. Neural perceptual metrics (LPIPS, DISTS, PieAPP, NRQM, ...) need
pretrained networks and are never computed here; they arrive as externally
computed scores in a CSV and ride along in the report as opaque scalars.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import convolve2d

from .errors import MetricError
from .image import Image, ScaleFactor, degrade, to_luma

#: PSNR cap in dB, returned instead of infinity when the MSE is below
#: MSE_CAP_THRESHOLD (which sits below any representable 8-bit difference).
PSNR_CAP_DB = 100.0
MSE_CAP_THRESHOLD = 1e-10

#: Canonical SSIM parameterization (11x11 Gaussian window, sigma 1.5).
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_L = 1.0

EXTERNAL_CSV_HEADER = ("image_id", "score_name", "value")
REPORT_BASE_COLUMNS = ("image_id", "psnr_db", "ssim", "mse", "lr_consistency_db")

#: Sentinel image_id of the per-metric-means summary row in report CSVs.
MEAN_ROW_ID = "__mean__"


def _require_same_shape(a: Image, b: Image, op: str) -> None:
    if a.shape != b.shape:
        raise MetricError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def mse(a: Image, b: Image) -> float:
    """Mean over all samples of the squared difference."""
    _require_same_shape(a, b, "mse")
    diff = a.data - b.data
    return float(np.mean(diff * diff))


def psnr(a: Image, b: Image, on_luma: bool = False) -> float:
    """10*log10(1/mse) on [0,1] data, capped at PSNR_CAP_DB.

    Computed jointly over all RGB samples by default; on_luma converts
    3-channel inputs to BT.601 luma first (1-channel inputs pass through).
    """
    _require_same_shape(a, b, "psnr")
    if on_luma and a.channels == 3:
        a, b = to_luma(a), to_luma(b)
    m = mse(a, b)
    if m < MSE_CAP_THRESHOLD:
        return PSNR_CAP_DB
    return 10.0 * math.log10(1.0 / m)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size, dtype=np.float64) - half
    g1 = np.exp(-(coords**2) / (2.0 * sigma**2))
    win = np.outer(g1, g1)
    return win / win.sum()


def ssim(a: Image, b: Image) -> float:
    """Mean local SSIM over all fully-interior window positions.

    11x11 Gaussian window with sigma 1.5, K1=0.01, K2=0.03, dynamic range 1.0
    (the original parameterization). 3-channel inputs are compared on luma.
    """
    _require_same_shape(a, b, "ssim")
    if min(a.width, a.height) < SSIM_WINDOW:
        raise MetricError(
            f"ssim: image {a.width}x{a.height} smaller than {SSIM_WINDOW}x{SSIM_WINDOW} window"
        )
    if a.channels == 3:
        a, b = to_luma(a), to_luma(b)
    x = a.data[:, :, 0]
    y = b.data[:, :, 0]
    win = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)

    mu_x = convolve2d(x, win, mode="valid")
    mu_y = convolve2d(y, win, mode="valid")
    # weighted second moments; E[v^2]-E[v]^2 can go epsilon-negative in float
    var_x = convolve2d(x * x, win, mode="valid") - mu_x**2
    var_y = convolve2d(y * y, win, mode="valid") - mu_y**2
    cov = convolve2d(x * y, win, mode="valid") - mu_x * mu_y

    c1 = (SSIM_K1 * SSIM_L) ** 2
    c2 = (SSIM_K2 * SSIM_L) ** 2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def lr_consistency(sr: Image, lr: Image, factor: ScaleFactor) -> float:
    """PSNR between the antialiased-bicubic-degraded SR and the original LR.

    This pins down which degradation defines "consistency": the same
    a=-0.5 antialiased kernel used everywhere else in the pipeline.
    """
    f = factor.value
    if sr.width != lr.width * f or sr.height != lr.height * f:
        raise MetricError(
            f"lr_consistency: sr {sr.width}x{sr.height} is not lr "
            f"{lr.width}x{lr.height} times factor {f}"
        )
    if sr.channels != lr.channels:
        raise MetricError(
            f"lr_consistency: channel mismatch {sr.channels} vs {lr.channels}"
        )
    return psnr(degrade(sr, factor), lr)


@dataclass(frozen=True)
class ExternalScoreTable:
    """Immutable (image_id, score_name) -> value lookup of ingested scores."""

    rows: dict[tuple[str, str], float] = field(default_factory=dict)

    def get(self, image_id: str, score_name: str) -> float | None:
        return self.rows.get((image_id, score_name))

    def scores_for(self, image_id: str) -> dict[str, float]:
        return {name: v for (iid, name), v in self.rows.items() if iid == image_id}

    def score_names(self) -> list[str]:
        return sorted({name for (_iid, name) in self.rows})

    def __len__(self) -> int:
        return len(self.rows)


def load_external_scores(path: str | Path) -> ExternalScoreTable:
    """Parse the external-score CSV: header `image_id,score_name,value`."""
    path = Path(path)
    if not path.exists():
        raise MetricError(f"{path}: external-score file not found")
    rows: dict[tuple[str, str], float] = {}
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MetricError(f"{path}: empty file (header required)") from None
        if tuple(h.strip() for h in header) != EXTERNAL_CSV_HEADER:
            raise MetricError(
                f"{path}: bad header {header!r}, expected {','.join(EXTERNAL_CSV_HEADER)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue  # blank line
            if len(row) != 3:
                raise MetricError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            image_id, score_name, raw = (c.strip() for c in row)
            if not image_id or not score_name:
                raise MetricError(f"{path}:{lineno}: empty image_id or score_name")
            try:
                value = float(raw)
            except ValueError:
                raise MetricError(f"{path}:{lineno}: unparseable value {raw!r}") from None
            if not math.isfinite(value):
                raise MetricError(f"{path}:{lineno}: non-finite value {raw!r}")
            key = (image_id, score_name)
            if key in rows:
                raise MetricError(f"{path}:{lineno}: duplicate key {key}")
            rows[key] = value
    return ExternalScoreTable(rows)


@dataclass(frozen=True)
class MetricReport:
    """Per-image metric row: native metrics plus attached external scores."""

    image_id: str
    psnr_db: float
    ssim: float
    mse: float
    lr_consistency_db: float
    external: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not (-1.0 - 1e-12 <= self.ssim <= 1.0 + 1e-12):
            raise MetricError(f"ssim {self.ssim} outside [-1, 1]")
        if self.mse < 0.0:
            raise MetricError(f"mse {self.mse} negative")
        if self.psnr_db > PSNR_CAP_DB:
            raise MetricError(f"psnr {self.psnr_db} above cap {PSNR_CAP_DB}")
        for name in self.external:
            if not name:
                raise MetricError("empty external score name")


def build_report(
    image_id: str,
    sr: Image,
    hr: Image,
    lr: Image,
    factor: ScaleFactor,
    external: ExternalScoreTable | None = None,
    psnr_on_luma: bool = False,
) -> MetricReport:
    """Compute all native metrics for one SR/HR/LR triple and attach scores.

    An image_id absent from the external table is legal: the report simply
    carries an empty external map.
    """
    ext = external.scores_for(image_id) if external is not None else {}
    return MetricReport(
        image_id=image_id,
        psnr_db=psnr(sr, hr, on_luma=psnr_on_luma),
        ssim=ssim(sr, hr),
        mse=mse(sr, hr),
        lr_consistency_db=lr_consistency(sr, lr, factor),
        external=ext,
    )


def report_columns(reports: list[MetricReport]) -> list[str]:
    """Base columns plus every external score name in lexicographic order."""
    names: set[str] = set()
    for r in reports:
        names.update(r.external)
    return list(REPORT_BASE_COLUMNS) + sorted(names)


def write_report_csv(
    reports: list[MetricReport], path: str | Path, include_mean: bool = False
) -> None:
    """Write the report CSV; missing external values become empty cells.

    With include_mean, a final summary row (image_id `__mean__`) carries the
    per-column arithmetic means; external means average only the rows where
    the score is present.
    """
    cols = report_columns(reports)
    ext_cols = cols[len(REPORT_BASE_COLUMNS):]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for r in reports:
            row = [r.image_id, repr(r.psnr_db), repr(r.ssim), repr(r.mse),
                   repr(r.lr_consistency_db)]
            for name in ext_cols:
                v = r.external.get(name)
                row.append("" if v is None else repr(v))
            writer.writerow(row)
        if include_mean and reports:
            row = [MEAN_ROW_ID]
            for attr in ("psnr_db", "ssim", "mse", "lr_consistency_db"):
                row.append(repr(float(np.mean([getattr(r, attr) for r in reports]))))
            for name in ext_cols:
                present = [r.external[name] for r in reports if name in r.external]
                row.append(repr(float(np.mean(present))) if present else "")
            writer.writerow(row)

"""Metric report walkthrough: scoring SR outputs against references.

Simulates three "methods" reconstructing the same scene (a blurry one, a
noisy one, and a sharpened-noise one), scores each against the reference,
attaches an externally computed perceptual score, and writes the CSV
report with its __mean__ summary row.
"""

import csv
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from votesr import (
    Image,
    ScaleFactor,
    build_report,
    degrade,
    load_external_scores,
    write_report_csv,
)

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

rng = np.random.default_rng(2)
yy, xx = np.mgrid[0:96, 0:96] / 95.0
scene = 0.5 + 0.3 * np.sin(9 * xx + 3 * yy) * np.cos(7 * yy)
hr = Image(np.clip(scene + 0.05 * rng.random((96, 96)), 0.0, 1.0)[..., None])
lr = degrade(hr, ScaleFactor(4))

methods = {
    "blurry": Image(np.clip(gaussian_filter(hr.data, (1.2, 1.2, 0)), 0, 1)),
    "noisy": Image(np.clip(hr.data + rng.normal(0, 0.03, hr.data.shape), 0, 1)),
    "oversharp": Image(np.clip(
        hr.data + 0.8 * (hr.data - gaussian_filter(hr.data, (1.0, 1.0, 0))), 0, 1
    )),
}

# an "external" perceptual score, as it would arrive from another tool
ext_path = OUT / "external_scores.csv"
with open(ext_path, "w", newline="") as fh:
    writer = csv.writer(fh)
    writer.writerow(["image_id", "score_name", "value"])
    for name, value in [("blurry", 0.31), ("noisy", 0.18), ("oversharp", 0.24)]:
        writer.writerow([name, "DISTS", value])
external = load_external_scores(ext_path)

reports = [
    build_report(name, sr, hr, lr, ScaleFactor(4), external=external)
    for name, sr in sorted(methods.items())
]
for r in reports:
    print(
        f"{r.image_id:10s} psnr={r.psnr_db:6.2f} dB  ssim={r.ssim:.4f}  "
        f"lr_consistency={r.lr_consistency_db:6.2f} dB  DISTS={r.external['DISTS']}"
    )

report_path = OUT / "method_report.csv"
write_report_csv(reports, report_path, include_mean=True)
print(f"report with __mean__ row -> {report_path}")

# fidelity says one thing, the perceptual score can say another; that
# tension is exactly what the pd-plane export makes visible
best_psnr = max(reports, key=lambda r: r.psnr_db)
best_dists = min(reports, key=lambda r: r.external["DISTS"])
print(f"highest PSNR: {best_psnr.image_id}; best DISTS: {best_dists.image_id}")

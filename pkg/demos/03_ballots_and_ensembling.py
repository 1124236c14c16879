"""Ballots to ensemble: the voting half of the pipeline, offline.

Builds a pool of candidate reconstructions of a tiny glyph, simulates 12
raters who each pick up to 2 candidates and label what they see, then
tallies, reports label consensus, and pixel-averages the top-5.
"""

from pathlib import Path

import numpy as np

from votesr import (
    Ballot,
    Image,
    SampleSet,
    ScaleFactor,
    degrade,
    ensemble_pipeline,
    format_percent,
    label_consensus,
    psnr,
    tally,
)
from votesr.io import save_png

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

rng = np.random.default_rng(3)

# ground truth: a blocky "5" glyph at 28x28
glyph = np.zeros((28, 28, 1))
glyph[4:8, 6:22] = 1.0    # top bar
glyph[8:14, 6:10] = 1.0   # left upper
glyph[12:16, 6:22] = 1.0  # middle bar
glyph[16:22, 18:22] = 1.0 # right lower
glyph[20:24, 6:22] = 1.0  # bottom bar
truth = Image(glyph)

# 10 candidates: independent noisy reconstructions of the same content,
# the situation where averaging a selected subset genuinely pays off
candidates = [
    Image(np.clip(glyph + rng.normal(0.0, 0.08, glyph.shape), 0, 1))
    for _ in range(10)
]
sset = SampleSet(
    "glyph-1", degrade(truth, ScaleFactor(4)), tuple(candidates),
    ScaleFactor(4), label_question="which digit do you see?",
)

# 12 raters: each picks 2 candidates; most read the glyph as a "5",
# a few squint a "6"
ballots = []
for v in range(12):
    picks = tuple(sorted(rng.choice(10, size=2, replace=False).tolist()))
    label = "5" if v % 4 else "6"
    ballots.append(Ballot(f"rater-{v:02d}", "glyph-1", picks, label=label))

result = tally(ballots, sset, max_select=2)
print("votes per candidate:", list(result.votes))
print("ranking            :", list(result.ranking))
for label, frac in sorted(label_consensus(result).items()):
    print(f"label {label!r}: {format_percent(frac)} of labeled ballots")

ens = ensemble_pipeline(sset, ballots, k=5, max_select=2)
save_png(ens.image, OUT / "glyph_ensemble.png")
print(f"top-5 average of candidates {list(ens.selected_indices)} -> glyph_ensemble.png")

# with independent noise the average beats every single candidate
best_single = max(psnr(c, truth) for c in candidates)
ens_db = psnr(ens.image, truth)
print(f"best single candidate: {best_single:.2f} dB; ensemble: {ens_db:.2f} dB")
assert ens_db > best_single

# filtering by label answers "what did the 6-voters see?"
six = ensemble_pipeline(sset, ballots, k=2, max_select=2, label_filter="6")
save_png(six.image, OUT / "glyph_ensemble_label6.png")
print(f"label-filtered ('6') top-2: candidates {list(six.selected_indices)}")

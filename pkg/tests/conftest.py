import json
from pathlib import Path

import numpy as np
import pytest

from votesr import Ballot, Image, SampleSet, ScaleFactor, degrade
from votesr.io import load_png, save_png

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def digit_img() -> Image:
    return load_png(DATA / "digit_28.png")


@pytest.fixture(scope="session")
def patch_img() -> Image:
    return load_png(DATA / "patch_128.png")


@pytest.fixture(scope="session")
def study_ballots() -> list[Ballot]:
    from votesr.ensemble import read_ballot_log

    return [b for b, _ts in read_ballot_log(DATA / "digit_study_ballots.jsonl")]


def build_sample_set(
    set_id: str = "digit-1",
    n: int = 24,
    lr_size: tuple[int, int] = (7, 7),
    factor: int = 4,
    channels: int = 1,
    seed: int = 99,
    label_question: str | None = None,
) -> SampleSet:
    """Deterministic random sample set for tally/ensemble tests."""
    rng = np.random.default_rng(seed)
    h, w = lr_size
    lr = Image(rng.random((h, w, channels)))
    cands = tuple(
        Image(rng.random((h * factor, w * factor, channels))) for _ in range(n)
    )
    return SampleSet(set_id, lr, cands, ScaleFactor(factor), label_question)


def digit_sample_set(
    digit: Image, n: int = 24, set_id: str = "digit-1",
    label_question: str | None = "which digit?",
) -> SampleSet:
    """Candidate pool of perturbed copies of the digit fixture (28x28),
    with its antialiased 7x7 downscale as the LR reference."""
    rng = np.random.default_rng(1234)
    factor = ScaleFactor(4)
    lr = degrade(digit, factor)
    cands = []
    for i in range(n):
        gain = 0.55 + 0.45 * (i / max(n - 1, 1))
        noisy = digit.data * gain + rng.normal(0.0, 0.02, digit.data.shape)
        cands.append(Image(np.clip(noisy, 0.0, 1.0)))
    return SampleSet(set_id, lr, tuple(cands), factor, label_question)


def write_set_dir(
    parent: Path, sset: SampleSet, hr: Image | None = None
) -> Path:
    """Materialize a SampleSet as the on-disk sample-set directory layout."""
    root = parent / sset.set_id
    root.mkdir(parents=True)
    names = [f"cand_{i:04d}.png" for i in range(sset.n_candidates)]
    manifest = {
        "set_id": sset.set_id,
        "factor": sset.factor.value,
        "candidates": names,
    }
    if sset.label_question is not None:
        manifest["label_question"] = sset.label_question
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2))
    save_png(sset.lr, root / "lr.png")
    for name, cand in zip(names, sset.candidates):
        save_png(cand, root / name)
    if hr is not None:
        save_png(hr, root / "hr.png")
    return root

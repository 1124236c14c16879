"""Majority-vote tallying and pixel-space ensembling of SR candidates.

A sample set is one LR input plus its pool of candidate reconstructions.
Raters each cast one ballot per set, selecting up to max_select candidates
(and optionally a perceived content label). Tallying counts selections per
candidate, ranks by votes with index as the deterministic tie-break, and the
top-k ranked candidates are ensembled by pixel-wise averaging.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .errors import BallotRejected, EnsembleError
from .image import Image, ScaleFactor

_SET_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")

#: Hard upper bound on candidates per set; studies run far below this.
MAX_CANDIDATES = 1024


@dataclass(frozen=True)
class SampleSet:
    """One LR image with its candidate pool, all pre-validated consistent."""

    set_id: str
    lr: Image
    candidates: tuple[Image, ...]
    factor: ScaleFactor
    label_question: str | None = None

    def __post_init__(self):
        if not _SET_ID_RE.match(self.set_id):
            raise EnsembleError(f"bad set_id {self.set_id!r}")
        object.__setattr__(self, "candidates", tuple(self.candidates))
        n = len(self.candidates)
        if not 1 <= n <= MAX_CANDIDATES:
            raise EnsembleError(f"{self.set_id}: candidate count {n} outside [1, {MAX_CANDIDATES}]")
        f = self.factor.value
        want = (self.lr.height * f, self.lr.width * f, self.lr.channels)
        for i, c in enumerate(self.candidates):
            if c.shape != want:
                raise EnsembleError(
                    f"{self.set_id}: candidate {i} shape {c.shape} != lr*factor {want}"
                )

    @property
    def n_candidates(self) -> int:
        return len(self.candidates)


@dataclass(frozen=True)
class Ballot:
    """One rater's submission for one set, in canonical candidate indices."""

    voter_id: str
    set_id: str
    selections: tuple[int, ...]
    label: str | None = None

    def __post_init__(self):
        if not self.voter_id:
            raise BallotRejected("empty-voter", "voter_id must be non-empty")
        object.__setattr__(self, "selections", tuple(int(i) for i in self.selections))
        if self.label is not None and not isinstance(self.label, str):
            raise BallotRejected("bad-label", f"label must be str or None, got {type(self.label).__name__}")


@dataclass(frozen=True)
class TallyResult:
    set_id: str
    votes: tuple[int, ...]
    ranking: tuple[int, ...]
    label_counts: dict[str, int]
    total_ballots: int

    def to_json_dict(self) -> dict:
        return {
            "set_id": self.set_id,
            "votes": list(self.votes),
            "ranking": list(self.ranking),
            "label_counts": dict(sorted(self.label_counts.items())),
            "total_ballots": self.total_ballots,
        }


@dataclass(frozen=True)
class EnsembleResult:
    selected_indices: tuple[int, ...]
    image: Image
    k: int


def validate_ballot(ballot: Ballot, sample_set: SampleSet, max_select: int) -> None:
    """Raise BallotRejected (with a machine-readable code) on any violation.

    Each failure mode gets its own code so callers and HTTP clients can
    distinguish them: wrong-set, empty-selection, over-limit,
    duplicate-selection, index-out-of-range.
    """
    if ballot.set_id != sample_set.set_id:
        raise BallotRejected(
            "wrong-set",
            f"ballot targets {ballot.set_id!r}, expected {sample_set.set_id!r}",
        )
    sel = ballot.selections
    if len(sel) == 0:
        raise BallotRejected("empty-selection", "at least one selection required")
    if len(sel) > max_select:
        raise BallotRejected(
            "over-limit", f"{len(sel)} selections exceed max_select={max_select}"
        )
    if len(set(sel)) != len(sel):
        dupes = sorted(i for i, c in Counter(sel).items() if c > 1)
        raise BallotRejected("duplicate-selection", f"repeated indices {dupes}")
    n = sample_set.n_candidates
    bad = sorted(i for i in sel if not 0 <= i < n)
    if bad:
        raise BallotRejected(
            "index-out-of-range", f"indices {bad} outside [0, {n})"
        )


def tally(
    ballots: list[Ballot],
    sample_set: SampleSet,
    max_select: int,
    label_filter: str | None = None,
) -> TallyResult:
    """Count votes per candidate over validated ballots, one per voter.

    A second ballot from the same voter_id rejects the whole tally, naming
    the voter. label_filter restricts counting (votes, label_counts,
    total_ballots) to ballots carrying exactly that label; validation and
    the one-ballot-per-voter rule still run over the full input.
    """
    seen: set[str] = set()
    counted: list[Ballot] = []
    for b in ballots:
        validate_ballot(b, sample_set, max_select)
        if b.voter_id in seen:
            raise BallotRejected(
                "duplicate-voter", f"voter {b.voter_id!r} cast more than one ballot"
            )
        seen.add(b.voter_id)
        if label_filter is None or b.label == label_filter:
            counted.append(b)

    votes = [0] * sample_set.n_candidates
    labels: Counter[str] = Counter()
    for b in counted:
        for i in b.selections:
            votes[i] += 1
        if b.label is not None:
            labels[b.label] += 1

    ranking = sorted(range(sample_set.n_candidates), key=lambda i: (-votes[i], i))
    return TallyResult(
        set_id=sample_set.set_id,
        votes=tuple(votes),
        ranking=tuple(ranking),
        label_counts=dict(labels),
        total_ballots=len(counted),
    )


def pixel_average(images: list[Image]) -> Image:
    """Pixel-wise arithmetic mean of same-shaped images, clamped to [0,1]."""
    if len(images) == 0:
        raise EnsembleError("pixel_average: need at least one image")
    shape = images[0].shape
    for i, im in enumerate(images):
        if im.shape != shape:
            raise EnsembleError(
                f"pixel_average: image {i} shape {im.shape} != {shape}"
            )
    stack = np.stack([im.data for im in images], axis=0)
    return Image(np.clip(stack.mean(axis=0), 0.0, 1.0))


def select_top_k(result: TallyResult, k: int) -> tuple[int, ...]:
    """First k entries of the ranking (votes desc, candidate index asc)."""
    n = len(result.votes)
    if not 1 <= k <= n:
        raise EnsembleError(f"k={k} outside [1, {n}]")
    return result.ranking[:k]


def label_consensus(result: TallyResult) -> dict[str, float]:
    """Fraction of labeled ballots per label; fractions sum to 1."""
    total = sum(result.label_counts.values())
    if total == 0:
        raise EnsembleError(f"{result.set_id}: no labeled ballots")
    return {lab: c / total for lab, c in result.label_counts.items()}


def format_percent(fraction: float) -> str:
    """Render a fraction as a percentage rounded to 0.1 pp, e.g. '73.3%'."""
    return f"{fraction * 100:.1f}%"


def ensemble_pipeline(
    sample_set: SampleSet,
    ballots: list[Ballot],
    k: int,
    max_select: int,
    label_filter: str | None = None,
) -> EnsembleResult:
    """tally -> select_top_k -> pixel_average, in one deterministic step."""
    result = tally(ballots, sample_set, max_select, label_filter=label_filter)
    indices = select_top_k(result, k)
    image = pixel_average([sample_set.candidates[i] for i in indices])
    return EnsembleResult(selected_indices=indices, image=image, k=k)


# Ballot log records: one JSON object per line, append-only.

_RFC3339_RE = re.compile(
    r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(\.\d+)?(Z|[+-]\d{2}:\d{2})$"
)


def utc_now_rfc3339() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")


def ballot_to_record(ballot: Ballot, submitted_at: str | None = None) -> dict:
    """Serialize to the JSONL wire/log schema (canonical indices)."""
    ts = submitted_at if submitted_at is not None else utc_now_rfc3339()
    if not _RFC3339_RE.match(ts):
        raise EnsembleError(f"submitted_at {ts!r} is not an RFC 3339 timestamp")
    return {
        "voter_id": ballot.voter_id,
        "set_id": ballot.set_id,
        "selections": list(ballot.selections),
        "label": ballot.label,
        "submitted_at": ts,
    }


def ballot_from_record(record: dict) -> Ballot:
    """Parse one log record back into a Ballot, validating field types."""
    try:
        voter_id = record["voter_id"]
        set_id = record["set_id"]
        selections = record["selections"]
        label = record.get("label")
        ts = record["submitted_at"]
    except KeyError as e:
        raise BallotRejected("bad-record", f"missing field {e.args[0]!r}") from None
    if not isinstance(voter_id, str) or not isinstance(set_id, str):
        raise BallotRejected("bad-record", "voter_id and set_id must be strings")
    if not isinstance(selections, list) or not all(
        isinstance(i, int) and not isinstance(i, bool) for i in selections
    ):
        raise BallotRejected("bad-record", "selections must be a list of integers")
    if label is not None and not isinstance(label, str):
        raise BallotRejected("bad-record", "label must be a string or null")
    if not isinstance(ts, str) or not _RFC3339_RE.match(ts):
        raise BallotRejected("bad-record", f"submitted_at {ts!r} is not RFC 3339")
    return Ballot(voter_id=voter_id, set_id=set_id, selections=tuple(selections), label=label)


def read_ballot_log(path) -> list[tuple[Ballot, str]]:
    """Read a JSONL ballot log: list of (ballot, submitted_at).

    Raises BallotRejected with the 1-based line number on malformed lines.
    """
    out: list[tuple[Ballot, str]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise BallotRejected("bad-record", f"line {lineno}: invalid JSON ({e.msg})") from None
            if not isinstance(record, dict):
                raise BallotRejected("bad-record", f"line {lineno}: expected object")
            try:
                b = ballot_from_record(record)
            except BallotRejected as e:
                raise BallotRejected(e.code, f"line {lineno}: {e.message}") from None
            out.append((b, record["submitted_at"]))
    return out

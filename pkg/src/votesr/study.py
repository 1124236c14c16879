"""Study configuration and per-session round flow.

A study is an ordered list of sample sets served one round at a time.
Raters see candidates in a per-session seeded shuffle (so presentation
order cannot correlate with candidate index across raters) and never see
ground truth. Ballots come back in display positions and are canonicalized
here before they touch any tally.
"""

from __future__ import annotations

import re
from collections.abc import Mapping
from dataclasses import dataclass, field, replace

from .ensemble import Ballot, SampleSet, validate_ballot
from .errors import BallotRejected, StudyError
from .shuffle import derive_permutation

TASK_LABEL_AND_SELECT = "label-and-select"
TASK_SELECT_ONLY = "select-only"
_TASK_KINDS = (TASK_LABEL_AND_SELECT, TASK_SELECT_ONLY)

_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")

#: Fixed Task-2 pool size: every round offers exactly this many candidates.
TASK2_CANDIDATES = 15


@dataclass(frozen=True)
class StudyConfig:
    """Immutable description of one study; shuffle_seed stays server-side."""

    study_id: str
    task_kind: str
    sets: tuple[str, ...]
    max_select: int
    candidates_per_round: int
    rounds: int
    ensemble_k: int
    shuffle_seed: int
    allowed_labels: frozenset[str] | None = None

    def __post_init__(self):
        if not _ID_RE.match(self.study_id):
            raise StudyError(f"bad study_id {self.study_id!r}")
        if self.task_kind not in _TASK_KINDS:
            raise StudyError(f"unknown task_kind {self.task_kind!r}")
        object.__setattr__(self, "sets", tuple(self.sets))
        if len(self.sets) == 0:
            raise StudyError("study needs at least one set")
        if len(set(self.sets)) != len(self.sets):
            raise StudyError("duplicate set ids in study")
        if self.rounds != len(self.sets):
            raise StudyError(f"rounds={self.rounds} != number of sets {len(self.sets)}")
        if self.max_select < 1:
            raise StudyError(f"max_select={self.max_select} must be >= 1")
        if self.max_select > self.candidates_per_round:
            raise StudyError("max_select exceeds candidates_per_round")
        if not 1 <= self.ensemble_k <= self.candidates_per_round:
            raise StudyError(f"ensemble_k={self.ensemble_k} outside [1, candidates_per_round]")
        if self.allowed_labels is not None:
            labels = frozenset(self.allowed_labels)
            if not labels or any(not s for s in labels):
                raise StudyError("allowed_labels must be non-empty strings")
            object.__setattr__(self, "allowed_labels", labels)

    def to_json_dict(self, include_seed: bool = True) -> dict:
        d = {
            "study_id": self.study_id,
            "task_kind": self.task_kind,
            "sets": list(self.sets),
            "max_select": self.max_select,
            "candidates_per_round": self.candidates_per_round,
            "rounds": self.rounds,
            "ensemble_k": self.ensemble_k,
            "allowed_labels": sorted(self.allowed_labels) if self.allowed_labels else None,
        }
        if include_seed:
            d["shuffle_seed"] = self.shuffle_seed
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "StudyConfig":
        try:
            return cls(
                study_id=d["study_id"],
                task_kind=d["task_kind"],
                sets=tuple(d["sets"]),
                max_select=d["max_select"],
                candidates_per_round=d["candidates_per_round"],
                rounds=d["rounds"],
                ensemble_k=d["ensemble_k"],
                shuffle_seed=d["shuffle_seed"],
                allowed_labels=frozenset(d["allowed_labels"]) if d.get("allowed_labels") else None,
            )
        except KeyError as e:
            raise StudyError(f"study config missing field {e.args[0]!r}") from None


@dataclass
class Session:
    """One rater's pass through a study; mutated only by accepted ballots."""

    session_id: str
    voter_id: str
    study_id: str
    round_cursor: int = 0
    completed: bool = False
    ballots: list[Ballot] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        from .ensemble import ballot_to_record

        return {
            "session_id": self.session_id,
            "voter_id": self.voter_id,
            "study_id": self.study_id,
            "round_cursor": self.round_cursor,
            "completed": self.completed,
            "ballots": [
                {k: v for k, v in ballot_to_record(b).items() if k != "submitted_at"}
                for b in self.ballots
            ],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Session":
        try:
            return cls(
                session_id=d["session_id"],
                voter_id=d["voter_id"],
                study_id=d["study_id"],
                round_cursor=d["round_cursor"],
                completed=d["completed"],
                ballots=[
                    Ballot(
                        voter_id=b["voter_id"],
                        set_id=b["set_id"],
                        selections=tuple(b["selections"]),
                        label=b.get("label"),
                    )
                    for b in d.get("ballots", [])
                ],
            )
        except KeyError as e:
            raise StudyError(f"session missing field {e.args[0]!r}") from None


@dataclass(frozen=True)
class RoundView:
    """What one rater is shown for one round. Ground truth has no field
    here by construction; nothing upstream can leak it through this type."""

    set_id: str
    display_order: tuple[int, ...]
    max_select: int
    label_question: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "set_id": self.set_id,
            "display_order": list(self.display_order),
            "max_select": self.max_select,
            "label_question": self.label_question,
        }


def make_task1_config(
    set_id: str,
    n_candidates: int,
    allowed_labels=None,
    shuffle_seed: int = 0,
    study_id: str = "task1",
) -> StudyConfig:
    """Digit study: one round, label the content, select up to 2 of the pool."""
    return StudyConfig(
        study_id=study_id,
        task_kind=TASK_LABEL_AND_SELECT,
        sets=(set_id,),
        max_select=2,
        candidates_per_round=n_candidates,
        rounds=1,
        ensemble_k=5,
        shuffle_seed=shuffle_seed,
        allowed_labels=frozenset(allowed_labels) if allowed_labels is not None else None,
    )


def make_task2_config(
    sets: list[SampleSet],
    shuffle_seed: int = 0,
    study_id: str = "task2",
) -> StudyConfig:
    """Face study: one round per set of 15 candidates, select at most 3."""
    if len(sets) == 0:
        raise StudyError("task2 needs at least one set")
    for s in sets:
        if s.n_candidates != TASK2_CANDIDATES:
            raise StudyError(
                f"set {s.set_id!r} has {s.n_candidates} candidates, task2 requires {TASK2_CANDIDATES}"
            )
    return StudyConfig(
        study_id=study_id,
        task_kind=TASK_SELECT_ONLY,
        sets=tuple(s.set_id for s in sets),
        max_select=3,
        candidates_per_round=TASK2_CANDIDATES,
        rounds=len(sets),
        ensemble_k=3,
        shuffle_seed=shuffle_seed,
    )


def _current_set(
    session: Session, config: StudyConfig, sets: Mapping[str, SampleSet]
) -> SampleSet:
    set_id = config.sets[session.round_cursor]
    try:
        sample_set = sets[set_id]
    except KeyError:
        raise StudyError(f"set {set_id!r} not available") from None
    if sample_set.n_candidates != config.candidates_per_round:
        raise StudyError(
            f"set {set_id!r} has {sample_set.n_candidates} candidates, "
            f"config says {config.candidates_per_round}"
        )
    if config.task_kind == TASK_LABEL_AND_SELECT and sample_set.label_question is None:
        raise StudyError(f"set {set_id!r} lacks the label_question this task requires")
    return sample_set


def next_round(
    session: Session, config: StudyConfig, sets: Mapping[str, SampleSet]
) -> RoundView:
    """The rater's current round. Idempotent: re-requesting the same round
    yields the identical display order (derived, never stored)."""
    if session.study_id != config.study_id:
        raise StudyError(
            f"session belongs to study {session.study_id!r}, not {config.study_id!r}"
        )
    if session.completed:
        raise StudyError("session completed, no further rounds")
    sample_set = _current_set(session, config, sets)
    perm = derive_permutation(
        config.shuffle_seed, session.session_id, session.round_cursor,
        config.candidates_per_round,
    )
    return RoundView(
        set_id=sample_set.set_id,
        display_order=perm,
        max_select=config.max_select,
        label_question=sample_set.label_question,
    )


def record_round_ballot(
    session: Session,
    config: StudyConfig,
    ballot: Ballot,
    sets: Mapping[str, SampleSet],
) -> Ballot:
    """Canonicalize and validate a display-space ballot, then advance.

    `ballot.selections` are display positions as shown to this session;
    they are mapped through the round's permutation into canonical
    candidate indices. The session advances only on acceptance, so a
    rejected ballot leaves cursor and stored ballots untouched.
    """
    if session.completed:
        raise BallotRejected("wrong-round", "session already completed")
    sample_set = _current_set(session, config, sets)
    if ballot.set_id != sample_set.set_id:
        raise BallotRejected(
            "wrong-round",
            f"ballot targets {ballot.set_id!r}, current round is {sample_set.set_id!r}",
        )
    if ballot.voter_id != session.voter_id:
        raise BallotRejected(
            "wrong-voter",
            f"ballot voter {ballot.voter_id!r} != session voter {session.voter_id!r}",
        )

    if config.task_kind == TASK_LABEL_AND_SELECT:
        if ballot.label is None:
            raise BallotRejected("missing-label", "this round requires a label")
        if config.allowed_labels is not None and ballot.label not in config.allowed_labels:
            raise BallotRejected(
                "label-not-allowed",
                f"label {ballot.label!r} not in {sorted(config.allowed_labels)}",
            )
    elif ballot.label is not None:
        raise BallotRejected("unexpected-label", "this round takes no label")

    n = config.candidates_per_round
    bad = sorted(i for i in ballot.selections if not 0 <= i < n)
    if bad:
        raise BallotRejected(
            "index-out-of-range", f"display positions {bad} outside [0, {n})"
        )
    perm = derive_permutation(
        config.shuffle_seed, session.session_id, session.round_cursor, n
    )
    canonical = replace(
        ballot, selections=tuple(perm[d] for d in ballot.selections)
    )
    validate_ballot(canonical, sample_set, config.max_select)

    session.ballots.append(canonical)
    session.round_cursor += 1
    session.completed = session.round_cursor >= config.rounds
    return canonical

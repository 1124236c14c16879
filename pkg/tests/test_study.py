"""Display-shuffle derivation and session/round flow."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from votesr import (
    Ballot,
    BallotRejected,
    Image,
    SampleSet,
    ScaleFactor,
    StudyError,
    derive_permutation,
    invert_permutation,
    make_task1_config,
    make_task2_config,
    next_round,
    record_round_ballot,
)
from votesr.shuffle import fnv1a64, stream_value
from votesr.study import RoundView, Session, StudyConfig


class TestShufflePrimitives:
    def test_fnv1a64_known_vectors(self):
        # published FNV-1a 64 test vectors
        assert fnv1a64("") == 0xCBF29CE484222325
        assert fnv1a64("a") == 0xAF63DC4C8601EC8C
        assert fnv1a64("foobar") == 0x85944171F73967E8

    def test_splitmix64_known_sequence(self):
        # reference splitmix64 outputs for seed 1234567
        want = [
            6457827717110365317,
            3203168211198807973,
            9817491932198370423,
            4593380528125082431,
        ]
        assert [stream_value(1234567, t) for t in range(4)] == want

    def test_pinned_stream_bases(self):
        # regression pins; FORMATS.md documents the same vectors
        from votesr.shuffle import derive_stream_base

        assert derive_stream_base(0, "", 0) == 0xE587D3DFF9E92ED0
        assert derive_stream_base(0, "session-1", 0) == 0xF8C5583E32777036
        assert derive_stream_base(42, "session-1", 0) == 0x7862D399C5EFC949
        base = derive_stream_base(0, "session-1", 0)
        assert [stream_value(base, t) for t in range(3)] == [
            0xBEB40D99BB16CB79,
            0xE2977975ED676920,
            0xA1F24DB883BA7BED,
        ]

    def test_pinned_permutations(self):
        # regression pins; FORMATS.md documents the same vectors
        assert derive_permutation(0, "", 0, 8) == (3, 4, 5, 0, 2, 6, 7, 1)
        assert derive_permutation(0, "session-1", 0, 15) == (
            6, 3, 1, 9, 2, 13, 5, 12, 11, 10, 7, 14, 8, 0, 4,
        )
        assert derive_permutation(42, "session-1", 0, 15) == (
            3, 13, 14, 12, 6, 2, 4, 8, 10, 5, 7, 0, 9, 11, 1,
        )
        assert derive_permutation(2**64 - 1, "rater-x", 9, 5) == (2, 0, 1, 4, 3)

    def test_determinism(self):
        a = derive_permutation(7, "sess", 3, 20)
        b = derive_permutation(7, "sess", 3, 20)
        assert a == b

    def test_distinct_sessions_differ(self):
        a = derive_permutation(0, "session-1", 0, 15)
        b = derive_permutation(0, "session-2", 0, 15)
        assert a != b

    def test_distinct_rounds_differ(self):
        a = derive_permutation(0, "session-1", 0, 15)
        b = derive_permutation(0, "session-1", 1, 15)
        assert a != b

    def test_distinct_seeds_differ(self):
        a = derive_permutation(0, "session-1", 0, 15)
        b = derive_permutation(42, "session-1", 0, 15)
        assert a != b

    @settings(max_examples=50, deadline=None)
    @given(
        seed=st.integers(0, 2**64 - 1),
        sid=st.text(max_size=20),
        rnd=st.integers(0, 50),
        n=st.integers(1, 40),
    )
    def test_always_a_bijection(self, seed, sid, rnd, n):
        perm = derive_permutation(seed, sid, rnd, n)
        assert sorted(perm) == list(range(n))

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**64 - 1), n=st.integers(1, 30))
    def test_inverse_round_trip(self, seed, n):
        perm = derive_permutation(seed, "s", 0, n)
        inv = invert_permutation(perm)
        assert all(inv[perm[d]] == d for d in range(n))
        assert all(perm[inv[c]] == c for c in range(n))

    def test_rejects_bad_arguments(self):
        with pytest.raises(StudyError):
            derive_permutation(-1, "s", 0, 5)
        with pytest.raises(StudyError):
            derive_permutation(2**64, "s", 0, 5)
        with pytest.raises(StudyError):
            derive_permutation(0, "s", -1, 5)
        with pytest.raises(StudyError):
            derive_permutation(0, "s", 0, 0)


def small_set(set_id: str, n: int = 15, label_question: str | None = None, seed: int = 5) -> SampleSet:
    rng = np.random.default_rng(seed)
    lr = Image(rng.random((2, 2, 1)))
    cands = tuple(Image(rng.random((4, 4, 1))) for _ in range(n))
    return SampleSet(set_id, lr, cands, ScaleFactor(2), label_question)


class TestStudyConfig:
    def test_rounds_must_match_sets(self):
        with pytest.raises(StudyError):
            StudyConfig("s", "select-only", ("a", "b"), 2, 10, 3, 3, 0)

    def test_duplicate_sets_rejected(self):
        with pytest.raises(StudyError):
            StudyConfig("s", "select-only", ("a", "a"), 2, 10, 2, 3, 0)

    def test_unknown_task_kind(self):
        with pytest.raises(StudyError):
            StudyConfig("s", "rank-all", ("a",), 2, 10, 1, 3, 0)

    def test_bounds(self):
        with pytest.raises(StudyError):
            StudyConfig("s", "select-only", ("a",), 0, 10, 1, 3, 0)
        with pytest.raises(StudyError):
            StudyConfig("s", "select-only", ("a",), 11, 10, 1, 3, 0)
        with pytest.raises(StudyError):
            StudyConfig("s", "select-only", ("a",), 2, 10, 1, 11, 0)

    def test_json_round_trip(self):
        cfg = make_task1_config("digit-1", 324, allowed_labels={"5", "6"}, shuffle_seed=99)
        back = StudyConfig.from_json_dict(cfg.to_json_dict())
        assert back == cfg

    def test_seed_strippable(self):
        cfg = make_task1_config("digit-1", 324, allowed_labels={"5", "6"}, shuffle_seed=99)
        public = cfg.to_json_dict(include_seed=False)
        assert "shuffle_seed" not in public
        assert public["allowed_labels"] == ["5", "6"]


class TestTaskConfigs:
    def test_task1_full_scale_instance(self):
        cfg = make_task1_config("digit-1", 324, allowed_labels={"5", "6"})
        assert cfg.task_kind == "label-and-select"
        assert cfg.max_select == 2
        assert cfg.ensemble_k == 5
        assert cfg.rounds == 1
        assert cfg.candidates_per_round == 324

    def test_task1_desk_scale(self):
        cfg = make_task1_config("digit-1", 10)
        assert cfg.candidates_per_round == 10
        assert cfg.max_select == 2

    def test_task2_full_scale_instance(self):
        sets = [small_set(f"face-{i}", 15) for i in range(10)]
        cfg = make_task2_config(sets)
        assert cfg.task_kind == "select-only"
        assert cfg.rounds == 10
        assert cfg.candidates_per_round == 15
        assert cfg.max_select == 3
        assert cfg.ensemble_k == 3

    def test_task2_single_round(self):
        cfg = make_task2_config([small_set("face-0", 15)])
        assert cfg.rounds == 1

    def test_task2_rejects_wrong_candidate_count(self):
        with pytest.raises(StudyError, match="14"):
            make_task2_config([small_set("face-0", 14)])


class TestNextRound:
    def setup_method(self):
        self.sset = small_set("digit-1", 12, label_question="which digit?")
        self.cfg = make_task1_config("digit-1", 12, allowed_labels={"5", "6"}, shuffle_seed=3)
        self.sets = {"digit-1": self.sset}

    def test_fresh_session_round0_deterministic(self):
        sess = Session("sess-a", "v1", "task1")
        v1 = next_round(sess, self.cfg, self.sets)
        v2 = next_round(sess, self.cfg, self.sets)
        assert v1 == v2
        assert v1.set_id == "digit-1"
        assert sorted(v1.display_order) == list(range(12))
        assert v1.max_select == 2
        assert v1.label_question == "which digit?"

    def test_sessions_get_distinct_orders(self):
        a = next_round(Session("sess-a", "v1", "task1"), self.cfg, self.sets)
        b = next_round(Session("sess-b", "v2", "task1"), self.cfg, self.sets)
        assert a.display_order != b.display_order

    def test_completed_session_rejected(self):
        sess = Session("sess-a", "v1", "task1", round_cursor=1, completed=True)
        with pytest.raises(StudyError):
            next_round(sess, self.cfg, self.sets)

    def test_candidate_count_mismatch(self):
        wrong = {"digit-1": small_set("digit-1", 9, label_question="which digit?")}
        with pytest.raises(StudyError):
            next_round(Session("s", "v", "task1"), self.cfg, wrong)

    def test_label_task_requires_label_question(self):
        unlabeled = {"digit-1": small_set("digit-1", 12)}
        with pytest.raises(StudyError, match="label_question"):
            next_round(Session("s", "v", "task1"), self.cfg, unlabeled)

    def test_round_view_exposes_no_ground_truth(self):
        sess = Session("sess-a", "v1", "task1")
        view = next_round(sess, self.cfg, self.sets)
        serialized = view.to_json_dict()
        assert set(serialized) == {"set_id", "display_order", "max_select", "label_question"}
        text = json.dumps(serialized).lower()
        assert "hr" not in text and "ground" not in text and "truth" not in text


def find_session_for_perm(target: tuple[int, ...], seed: int = 0, round_index: int = 0) -> str:
    """Brute-force a session_id whose derived order equals `target`."""
    n = len(target)
    for i in range(200_000):
        sid = f"probe-{i}"
        if derive_permutation(seed, sid, round_index, n) == target:
            return sid
    raise AssertionError(f"no session found for {target}")


class TestRecordRoundBallot:
    def setup_method(self):
        self.sset = small_set("digit-1", 5, label_question="which digit?")
        self.cfg = make_task1_config("digit-1", 5, allowed_labels={"5", "6"}, shuffle_seed=0)
        self.sets = {"digit-1": self.sset}

    def test_display_to_canonical_mapping(self):
        # picks [0, 2] shown under display order [4,1,3,0,2] must
        # canonicalize to candidates 4 and 3
        target = (4, 1, 3, 0, 2)
        sid = find_session_for_perm(target)
        sess = Session(sid, "v1", "task1")
        view = next_round(sess, self.cfg, self.sets)
        assert view.display_order == target
        canon = record_round_ballot(
            sess, self.cfg, Ballot("v1", "digit-1", (0, 2), label="5"), self.sets
        )
        assert canon.selections == (4, 3)
        assert sess.ballots == [canon]

    def test_label_outside_allowed_rejected(self):
        sess = Session("s1", "v1", "task1")
        with pytest.raises(BallotRejected) as exc:
            record_round_ballot(
                sess, self.cfg, Ballot("v1", "digit-1", (0,), label="9"), self.sets
            )
        assert exc.value.code == "label-not-allowed"
        assert sess.round_cursor == 0 and not sess.ballots

    def test_missing_label_rejected(self):
        sess = Session("s1", "v1", "task1")
        with pytest.raises(BallotRejected) as exc:
            record_round_ballot(sess, self.cfg, Ballot("v1", "digit-1", (0,)), self.sets)
        assert exc.value.code == "missing-label"

    def test_resubmission_after_advance_rejected(self):
        sess = Session("s1", "v1", "task1")
        ballot = Ballot("v1", "digit-1", (0, 1), label="5")
        record_round_ballot(sess, self.cfg, ballot, self.sets)
        assert sess.completed
        with pytest.raises(BallotRejected) as exc:
            record_round_ballot(sess, self.cfg, ballot, self.sets)
        assert exc.value.code == "wrong-round"

    def test_wrong_voter_rejected(self):
        sess = Session("s1", "v1", "task1")
        with pytest.raises(BallotRejected) as exc:
            record_round_ballot(
                sess, self.cfg, Ballot("v2", "digit-1", (0,), label="5"), self.sets
            )
        assert exc.value.code == "wrong-voter"

    def test_rejection_does_not_advance(self):
        sess = Session("s1", "v1", "task1")
        with pytest.raises(BallotRejected):
            record_round_ballot(
                sess, self.cfg, Ballot("v1", "digit-1", (0, 0), label="5"), self.sets
            )
        assert sess.round_cursor == 0
        assert not sess.completed
        # a valid ballot still goes through afterwards
        record_round_ballot(
            sess, self.cfg, Ballot("v1", "digit-1", (0, 1), label="5"), self.sets
        )
        assert sess.completed

    def test_display_index_out_of_range(self):
        sess = Session("s1", "v1", "task1")
        with pytest.raises(BallotRejected) as exc:
            record_round_ballot(
                sess, self.cfg, Ballot("v1", "digit-1", (0, 7), label="5"), self.sets
            )
        assert exc.value.code == "index-out-of-range"

    def test_select_only_rejects_label(self):
        sets = {"face-0": small_set("face-0", 15)}
        cfg = make_task2_config([sets["face-0"]], shuffle_seed=1)
        sess = Session("s1", "v1", "task2")
        with pytest.raises(BallotRejected) as exc:
            record_round_ballot(sess, cfg, Ballot("v1", "face-0", (0,), label="5"), sets)
        assert exc.value.code == "unexpected-label"

    def test_multi_round_flow_stores_all_ballots(self):
        sets = {f"face-{i}": small_set(f"face-{i}", 15, seed=i) for i in range(3)}
        cfg = make_task2_config([sets[f"face-{i}"] for i in range(3)], shuffle_seed=9)
        sess = Session("s1", "v1", "task2")
        for r in range(3):
            view = next_round(sess, cfg, sets)
            assert view.set_id == f"face-{r}"
            record_round_ballot(
                sess, cfg, Ballot("v1", view.set_id, (0, 1, 2)), sets
            )
        assert sess.completed
        assert sess.round_cursor == 3
        assert len(sess.ballots) == 3
        # stored ballots are canonical and valid against their sets
        from votesr import validate_ballot

        for b in sess.ballots:
            validate_ballot(b, sets[b.set_id], cfg.max_select)
        with pytest.raises(StudyError):
            next_round(sess, cfg, sets)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**64 - 1), picks=st.sets(st.integers(0, 4), min_size=1, max_size=2))
    def test_canonicalization_correctness(self, seed, picks):
        cfg = make_task1_config("digit-1", 5, allowed_labels={"5"}, shuffle_seed=seed)
        sets = {"digit-1": small_set("digit-1", 5, label_question="q")}
        sess = Session("sess-p", "v1", "task1")
        view = next_round(sess, cfg, sets)
        canon = record_round_ballot(
            sess, cfg, Ballot("v1", "digit-1", tuple(sorted(picks)), label="5"), sets
        )
        assert canon.selections == tuple(view.display_order[d] for d in sorted(picks))
        inv = invert_permutation(view.display_order)
        assert tuple(sorted(inv[c] for c in canon.selections)) == tuple(sorted(picks))


class TestSessionSerialization:
    def test_round_trip(self):
        sess = Session("s1", "v1", "task1")
        cfg = make_task1_config("digit-1", 5, allowed_labels={"5", "6"}, shuffle_seed=0)
        sets = {"digit-1": small_set("digit-1", 5, label_question="q")}
        record_round_ballot(sess, cfg, Ballot("v1", "digit-1", (1, 3), label="6"), sets)
        back = Session.from_json_dict(json.loads(json.dumps(sess.to_json_dict())))
        assert back == sess

    def test_round_view_serialization(self):
        view = RoundView("s", (2, 0, 1), 2, "which digit?")
        assert view.to_json_dict() == {
            "set_id": "s",
            "display_order": [2, 0, 1],
            "max_select": 2,
            "label_question": "which digit?",
        }

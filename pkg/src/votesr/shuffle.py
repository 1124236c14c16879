"""Deterministic, replayable display permutations for study rounds.

Candidate order shown to a rater must be reproducible from
(shuffle_seed, session_id, round_index) alone, with no RNG library in the
loop, so any client or auditor in any language can re-derive it. The exact
algorithm (FNV-1a 64 over the UTF-8 session id, splitmix64 finalizer,
golden-gamma counter stream, Fisher-Yates) is normative and documented with
test vectors in FORMATS.md; do not change any constant here without
changing the format version there.
"""

from __future__ import annotations

from .errors import StudyError

_MASK64 = (1 << 64) - 1

#: splitmix64 increment ("golden gamma").
GAMMA = 0x9E3779B97F4A7C15

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(text: str) -> int:
    """FNV-1a 64-bit hash of the UTF-8 encoding of `text`."""
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def splitmix64_finalize(z: int) -> int:
    """The standard splitmix64 output mixing function."""
    z &= _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


def derive_stream_base(shuffle_seed: int, session_id: str, round_index: int) -> int:
    """Mix seed, session hash, and round index into the stream base value."""
    if not 0 <= shuffle_seed <= _MASK64:
        raise StudyError(f"shuffle_seed {shuffle_seed} outside [0, 2^64)")
    if round_index < 0:
        raise StudyError(f"round_index {round_index} negative")
    h = fnv1a64(session_id)
    base = splitmix64_finalize((shuffle_seed ^ h) & _MASK64)
    base = splitmix64_finalize((base + (round_index + 1) * GAMMA) & _MASK64)
    return base


def stream_value(base: int, t: int) -> int:
    """t-th output (t >= 0) of the counter stream rooted at `base`."""
    return splitmix64_finalize((base + (t + 1) * GAMMA) & _MASK64)


def derive_permutation(
    shuffle_seed: int, session_id: str, round_index: int, n: int
) -> tuple[int, ...]:
    """Display order for a round: perm[display_pos] = canonical index.

    Fisher-Yates over [0..n-1], i from n-1 down to 1, swapping with
    j = r_t mod (i+1) where r_t is the t-th counter-stream output
    (t starting at 0 for i = n-1). The modulo bias against 2^64 is
    far below anything observable at study scale.
    """
    if n < 1:
        raise StudyError(f"permutation size {n} must be >= 1")
    base = derive_stream_base(shuffle_seed, session_id, round_index)
    perm = list(range(n))
    t = 0
    for i in range(n - 1, 0, -1):
        j = stream_value(base, t) % (i + 1)
        t += 1
        perm[i], perm[j] = perm[j], perm[i]
    return tuple(perm)


def invert_permutation(perm: tuple[int, ...]) -> tuple[int, ...]:
    """inv[canonical] = display position; inverse of derive_permutation."""
    inv = [0] * len(perm)
    for display_pos, canonical in enumerate(perm):
        inv[canonical] = display_pos
    return tuple(inv)

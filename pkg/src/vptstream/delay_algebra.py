"""Longest common prefixes and output delays.

Output words are tuples of tokens.  The *delay* of two words is the pair of
suffixes left after removing their longest common prefix; delays compose:
extending both words extends the delay (``delta_extend``).  ``delay_mismatch``
decides whether two delays differ by comparing letters at fixed positions
only, without ever materializing the delays — the form a counter-based
decision procedure needs.  Both routes are kept and cross-tested.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

Word = tuple[str, ...]


class EmptySet(ValueError):
    """lcp of no words is undefined."""


class PremiseViolated(ValueError):
    """delay_mismatch requires |A|-|B| = |C|-|D| >= 0."""


def lcp(words: Iterable[Sequence[str]]) -> Word:
    """Longest common prefix of a non-empty collection of words."""
    it = iter(words)
    try:
        first = tuple(next(it))
    except StopIteration:
        raise EmptySet("lcp of an empty set") from None
    best = first
    for other in it:
        limit = min(len(best), len(other))
        i = 0
        while i < limit and best[i] == other[i]:
            i += 1
        best = best[:i]
        if not best:
            break
    return tuple(best)


@dataclass(frozen=True)
class DelayPair:
    """Suffix pair after removing the longest common prefix; lcp(left,right) = ε."""

    left: Word
    right: Word

    def __post_init__(self):
        if self.left and self.right and self.left[0] == self.right[0]:
            raise ValueError("delay components must not share a first token")


def delta(u: Sequence[str], v: Sequence[str]) -> DelayPair:
    """Delay of ``u`` and ``v``: the suffixes beyond their common prefix."""
    u, v = tuple(u), tuple(v)
    k = len(lcp((u, v)))
    return DelayPair(u[k:], v[k:])


def delta_extend(d: DelayPair, u2: Sequence[str], v2: Sequence[str]) -> DelayPair:
    """Delay after appending ``u2``/``v2`` to words whose delay is ``d``."""
    return delta(d.left + tuple(u2), d.right + tuple(v2))


def delay_mismatch(A: Sequence[str], B: Sequence[str],
                   C: Sequence[str], D: Sequence[str]) -> bool:
    """Positional test for ``delta(A, B) != delta(C, D)``.

    Requires |A|-|B| = |C|-|D| >= 0.  True iff one of four conditions holds,
    each comparing letters counted from the ends of the words (1-based; a
    comparison only counts when both positions exist):

      1. some k with A[l-k] != B[l-k], and k >= |C| or C[n-k] == D[n-k];
      2. some k with C[n-k] != D[n-k], and k >= |A| or A[l-k] == B[l-k];
      3. some k with A[l-k] != C[n-k], and k < l-m or a left-aligned
         mismatch A[k'] != B[k'] exists with k + k' <= l;
      4. some k, k' with B[m-k] != D[p-k], A[k'] != B[k'] and k + k' <= m.
    """
    A, B, C, D = tuple(A), tuple(B), tuple(C), tuple(D)
    l, m, n, p = len(A), len(B), len(C), len(D)
    if l - m != n - p or l < m:
        raise PremiseViolated(f"need |A|-|B| = |C|-|D| >= 0, got {l}-{m} vs {n}-{p}")

    # Smallest left-aligned mismatch position between A and B (1-based), if any.
    first_ab = None
    for j in range(min(l, m)):
        if A[j] != B[j]:
            first_ab = j + 1
            break

    # Condition 1: k ranges where both A[l-k] and B[l-k] exist.
    for k in range(l - m, l):
        if A[l - k - 1] != B[l - k - 1]:
            if k >= n:
                return True
            # here n-p <= k <= n-1, so C[n-k] and D[n-k] both exist
            if C[n - k - 1] == D[n - k - 1]:
                return True

    # Condition 2: symmetric, over C/D.
    for k in range(n - p, n):
        if C[n - k - 1] != D[n - k - 1]:
            if k >= l:
                return True
            if A[l - k - 1] == B[l - k - 1]:
                return True

    # Condition 3: A vs C, counted from the right.
    for k in range(min(l, n)):
        if A[l - k - 1] != C[n - k - 1]:
            if k < l - m:
                return True
            if first_ab is not None and k + first_ab <= l:
                return True

    # Condition 4: B vs D, counted from the right, plus any A/B mismatch.
    if first_ab is not None:
        for k in range(min(m, p)):
            if B[m - k - 1] != D[p - k - 1] and k + first_ab <= m:
                return True

    return False

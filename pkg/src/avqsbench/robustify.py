"""Method of types over words and the robustification check: a function on
words whose i.i.d. average is at least 1 - gamma under every type must have
permutation average at least 1 - (l+1)^{|S|} gamma at every single word.
Also the permutation-symmetrized version of a one-way LOCC channel."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import prod
from typing import Callable, Sequence

import numpy as np

from .channels import CpMap, Instrument, OneWayLoccChannel, permutation_channel

Word = tuple[int, ...]

EXACT_SYMMETRIZE_MAX_BLOCKLENGTH = 6


@dataclass(frozen=True)
class TypeDistribution:
    """Empirical symbol counts of a word; counts sum to the word length."""

    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if any(c < 0 for c in counts) or sum(counts) == 0:
            raise ValueError(f"counts must be nonnegative and not all zero, got {counts}")
        object.__setattr__(self, "counts", counts)

    @property
    def length(self) -> int:
        return sum(self.counts)

    @property
    def n_symbols(self) -> int:
        return len(self.counts)

    def probability(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.length

    def representative(self) -> Word:
        """Lexicographically smallest word of this type."""
        return tuple(s for s, c in enumerate(self.counts) for _ in range(c))


def enumerate_types(n_symbols: int, l: int) -> list[TypeDistribution]:
    """All compositions of ``l`` into ``n_symbols`` nonnegative parts."""
    if n_symbols < 1 or l < 1:
        raise ValueError("need at least one symbol and length >= 1")

    def compositions(total, slots):
        if slots == 1:
            yield (total,)
            return
        for first in range(total, -1, -1):
            for rest in compositions(total - first, slots - 1):
                yield (first,) + rest

    return [TypeDistribution(c) for c in compositions(l, n_symbols)]


def word_type(word: Sequence[int], n_symbols: int) -> TypeDistribution:
    counts = [0] * n_symbols
    for s in word:
        counts[int(s)] += 1
    return TypeDistribution(tuple(counts))


@lru_cache(maxsize=None)
def _word_table(n_symbols: int, l: int):
    """All words, their type ids, and the per-type product probabilities."""
    words = list(itertools.product(range(n_symbols), repeat=l))
    types = enumerate_types(n_symbols, l)
    type_index = {t.counts: i for i, t in enumerate(types)}
    word_arr = np.array(words, dtype=np.int64)
    type_of_word = np.array(
        [type_index[word_type(w, n_symbols).counts] for w in words], dtype=np.int64
    )
    probs = np.empty((len(types), len(words)))
    for i, t in enumerate(types):
        q = t.probability()
        probs[i] = np.prod(q[word_arr], axis=1)
    return tuple(words), types, type_of_word, probs


def evaluate_on_words(f: Callable[[Word], float], n_symbols: int, l: int) -> np.ndarray:
    words, _, _, _ = _word_table(n_symbols, l)
    values = np.array([float(f(w)) for w in words])
    if values.min() < -1e-9 or values.max() > 1.0 + 1e-9:
        raise ValueError("word function must take values in [0, 1]")
    return values


def iid_type_average(f: Callable[[Word], float], q: TypeDistribution) -> float:
    """Exact expectation of f over i.i.d. draws from the type's distribution."""
    words, _, _, _ = _word_table(q.n_symbols, q.length)
    prob = q.probability()
    total = 0.0
    for w in words:
        total += float(f(w)) * prod(prob[s] for s in w)
    return total


def _distinct_permutations(word: Word):
    """Distinct rearrangements of a word (multiset permutations)."""
    counts: dict[int, int] = {}
    for s in word:
        counts[s] = counts.get(s, 0) + 1
    symbols = sorted(counts)

    def rec(prefix, remaining):
        if len(prefix) == len(word):
            yield tuple(prefix)
            return
        for s in symbols:
            if remaining[s] > 0:
                remaining[s] -= 1
                prefix.append(s)
                yield from rec(prefix, remaining)
                prefix.pop()
                remaining[s] += 1

    yield from rec([], dict(counts))


def permutation_average(f: Callable[[Word], float], word: Sequence[int]) -> float:
    """Average of f over all l! permutations of the word.

    Every distinct rearrangement is hit by the same number of permutations
    (the stabilizer size), so this equals the plain mean over distinct
    rearrangements, which is what gets enumerated.
    """
    word = tuple(int(s) for s in word)
    total = 0.0
    count = 0
    for w in _distinct_permutations(word):
        total += float(f(w))
        count += 1
    return total / count


@dataclass(frozen=True)
class TypeCheck:
    """Hypothesis and conclusion margins for one type class."""

    counts: tuple[int, ...]
    iid_average: float
    hypothesis_margin: float
    permutation_average: float
    conclusion_margin: float


@dataclass(frozen=True)
class RobustificationReport:
    n_symbols: int
    blocklength: int
    gamma: float
    bound: float
    type_checks: tuple[TypeCheck, ...]
    worst_word: Word
    worst_value: float
    passed: bool

    def word_margins(self) -> list[tuple[Word, float]]:
        """Conclusion margin for every word (margins depend only on type)."""
        words, _, type_of_word, _ = _word_table(self.n_symbols, self.blocklength)
        by_type = {tc.counts: tc.conclusion_margin for tc in self.type_checks}
        _, types, _, _ = _word_table(self.n_symbols, self.blocklength)
        return [
            (w, by_type[types[type_of_word[i]].counts]) for i, w in enumerate(words)
        ]

    def to_dict(self) -> dict:
        return {
            "n_symbols": self.n_symbols,
            "blocklength": self.blocklength,
            "gamma": self.gamma,
            "bound": self.bound,
            "types": [
                {
                    "counts": list(tc.counts),
                    "iid_average": tc.iid_average,
                    "hypothesis_margin": tc.hypothesis_margin,
                    "permutation_average": tc.permutation_average,
                    "conclusion_margin": tc.conclusion_margin,
                }
                for tc in self.type_checks
            ],
            "worst_word": list(self.worst_word),
            "worst_value": self.worst_value,
            "passed": self.passed,
        }


def check_robustification(
    f: Callable[[Word], float],
    n_symbols: int,
    l: int,
    gamma: float | None = None,
) -> RobustificationReport:
    """Verify the permutation-average bound for a word function.

    When ``gamma`` is not supplied it is derived exactly from the hypothesis
    side as 1 minus the smallest i.i.d. type average.  The permutation
    average of f at a word depends only on the word's type, so the check is
    exhaustive over words while costing one pass per type.
    """
    words, types, type_of_word, probs = _word_table(n_symbols, l)
    values = evaluate_on_words(f, n_symbols, l)
    iid_avgs = probs @ values
    if gamma is None:
        gamma = float(max(0.0, 1.0 - iid_avgs.min()))
    bound = 1.0 - (l + 1) ** n_symbols * gamma
    counts_per_type = np.bincount(type_of_word, minlength=len(types)).astype(float)
    sums_per_type = np.bincount(type_of_word, weights=values, minlength=len(types))
    perm_avgs = sums_per_type / counts_per_type
    checks = tuple(
        TypeCheck(
            counts=t.counts,
            iid_average=float(iid_avgs[i]),
            hypothesis_margin=float(iid_avgs[i] - (1.0 - gamma)),
            permutation_average=float(perm_avgs[i]),
            conclusion_margin=float(perm_avgs[i] - bound),
        )
        for i, t in enumerate(types)
    )
    margins = perm_avgs[type_of_word] - bound
    worst_idx = int(np.argmin(margins))
    passed = bool(margins.min() >= -1e-12)
    return RobustificationReport(
        n_symbols=n_symbols,
        blocklength=l,
        gamma=gamma,
        bound=bound,
        type_checks=checks,
        worst_word=words[worst_idx],
        worst_value=float(perm_avgs[type_of_word[worst_idx]]),
        passed=passed,
    )


def symmetrize_channel(
    channel: OneWayLoccChannel,
    l: int,
    cell_dim_a: int,
    cell_dim_b: int,
    mode: str = "exact",
    n_samples: int | None = None,
    seed: int = 0,
) -> OneWayLoccChannel:
    """Average a one-way LOCC channel over tensor-cell permutations.

    The sending side applies a uniformly chosen permutation of the l cells
    before measuring and announces it along with the original message, so
    the outcome list is (permutation, message) pairs and the message count
    multiplies by the number of permutations used.  Exact mode enumerates
    all l! permutations (capped); sampled mode draws ``n_samples``
    permutations with the given seed and is an approximation.
    """
    ins = channel.a_instrument
    if ins.dim_in != cell_dim_a**l:
        raise ValueError(
            f"instrument input dimension {ins.dim_in} is not {cell_dim_a}^{l}"
        )
    if channel.b_channels[0].dim_in != cell_dim_b**l:
        raise ValueError(
            f"receiving input dimension {channel.b_channels[0].dim_in} is not {cell_dim_b}^{l}"
        )
    if mode == "exact":
        if l > EXACT_SYMMETRIZE_MAX_BLOCKLENGTH:
            raise ValueError(
                f"exact symmetrization is limited to blocklength {EXACT_SYMMETRIZE_MAX_BLOCKLENGTH}"
            )
        perms = [tuple(p) for p in itertools.permutations(range(l))]
    elif mode == "sampled":
        if not n_samples or n_samples < 1:
            raise ValueError("sampled mode needs n_samples >= 1")
        rng = np.random.default_rng(seed)
        perms = [tuple(int(x) for x in rng.permutation(l)) for _ in range(n_samples)]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    weight = 1.0 / len(perms)
    scale = np.sqrt(weight)
    outcomes = []
    b_channels = []
    for sigma in perms:
        ua = permutation_channel(sigma, cell_dim_a).kraus[0]
        ub = permutation_channel(sigma, cell_dim_b).kraus[0]
        for t_k, r_k in zip(ins.outcomes, channel.b_channels):
            outcomes.append(
                CpMap(
                    tuple(scale * k @ ua for k in t_k.kraus),
                    t_k.in_dims,
                    t_k.out_dims,
                    t_k.out_parties,
                )
            )
            b_channels.append(
                CpMap(
                    tuple(k @ ub for k in r_k.kraus),
                    r_k.in_dims,
                    r_k.out_dims,
                    r_k.out_parties,
                )
            )
    return OneWayLoccChannel(Instrument(tuple(outcomes)), tuple(b_channels))

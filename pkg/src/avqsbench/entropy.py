"""Entropic quantities in bits: von Neumann entropy, conditional entropy,
environment mutual information, coherent information, and the
instrument-weighted coherent-information rate used by the distillation
optimizer."""

from __future__ import annotations

from dataclasses import dataclass
from math import isfinite, prod

import numpy as np

from .config import get_config
from .linalg import State, partial_trace

ENTROPY = "entropy"
CONDITIONAL_ENTROPY = "conditional-entropy"
MUTUAL_INFO_ENV = "mutual-info-env"
COHERENT_INFO = "coherent-info"
INSTRUMENT_RATE = "instrument-rate"


@dataclass(frozen=True)
class RateValue:
    """A rate in bits together with the kind of quantity it measures."""

    value: float
    kind: str

    def __post_init__(self):
        if not isfinite(self.value):
            raise ValueError(f"rate value must be finite, got {self.value}")

    def __float__(self) -> float:
        return self.value


def spectrum_entropy(weights) -> float:
    """Shannon entropy (base 2) of a nonnegative weight vector.

    Entries below the configured clip threshold are dropped, which absorbs
    the small negative eigenvalues produced by finite-precision
    diagonalization.
    """
    w = np.asarray(weights, dtype=float)
    w = w[w > get_config().eig_clip]
    return float(-np.sum(w * np.log2(w)))


def von_neumann_entropy(s: State) -> RateValue:
    """S(rho) = -sum_i w_i log2 w_i over the clipped spectrum."""
    w = np.linalg.eigvalsh(s.matrix)
    return RateValue(spectrum_entropy(w), ENTROPY)


def _marginal_entropy(s: State, parties: tuple[str, ...]) -> float:
    keep = s.factors_of(*parties)
    if not keep:
        raise ValueError(f"state has no factors for parties {parties}")
    if len(keep) == s.n_factors:
        return von_neumann_entropy(s).value
    return von_neumann_entropy(partial_trace(s, keep)).value


def conditional_entropy(s: State, target: str = "A", condition: str = "B") -> RateValue:
    """S(target | condition) = S(rho_TC) - S(rho_C).

    Lies in [-log2 d_target, log2 d_target]; negative values witness
    entanglement across the cut.
    """
    joint = _marginal_entropy(s, (target, condition))
    cond = _marginal_entropy(s, (condition,))
    return RateValue(joint - cond, CONDITIONAL_ENTROPY)


def mutual_info_env(s: State, target: str = "A", condition: str = "B") -> RateValue:
    """Mutual information between the target system and the purifying
    environment: S(rho_T) + S(rho_TC) - S(rho_C).

    Computed from the bipartite marginals; for a purification psi of rho_TC
    on a third system E this equals I(T;E).  Always nonnegative.
    """
    s_t = _marginal_entropy(s, (target,))
    s_tc = _marginal_entropy(s, (target, condition))
    s_c = _marginal_entropy(s, (condition,))
    return RateValue(s_t + s_tc - s_c, MUTUAL_INFO_ENV)


def coherent_information(s: State, source: str = "A", target: str = "B") -> RateValue:
    """I_c(source > target) = S(rho_target) - S(rho_joint)."""
    s_t = _marginal_entropy(s, (target,))
    s_joint = _marginal_entropy(s, (source, target))
    return RateValue(s_t - s_joint, COHERENT_INFO)


def instrument_coherent_info(s: State, instrument, source: str = "A", target: str = "B") -> RateValue:
    """Outcome-probability-weighted coherent information after measuring the
    source side with an instrument.

    For outcome weights w_j and normalized post-measurement states t_j this
    is sum_j w_j I_c(source > target, t_j); outcomes with weight below the
    configured probability threshold are dropped.
    """
    from .channels import instrument_statistics  # local import avoids a cycle

    targets = s.factors_of(source)
    if not targets:
        raise ValueError(f"state has no factors for party {source!r}")
    if prod(s.dims[i] for i in targets) != instrument.dim_in:
        raise ValueError(
            f"instrument input dimension {instrument.dim_in} does not match "
            f"the {source!r} side of the state"
        )
    total = 0.0
    for outcome in instrument_statistics(instrument, s, targets):
        total += outcome.probability * coherent_information(outcome.state, source, target).value
    return RateValue(total, INSTRUMENT_RATE)

"""Completely positive maps, instruments, one-way LOCC channels, merging
protocols and the merging fidelity.

Factor conventions used throughout:

* a map applied to a subset of tensor factors places its output factors
  first, followed by the untouched factors in their original order;
* a merging protocol acts on resource registers first, then the source
  copies: the measuring side sees (K0_A, A_1, ..., A_l), the receiving side
  (K0_B, B_1, ..., B_l), and the receiving side outputs
  (K1_B, B'_1, B_1, ..., B'_l, B_l) with B' a mirror of the A space.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import prod
from typing import Sequence

import numpy as np

from .config import check_dim_cap, get_config
from .linalg import (
    Party,
    PureState,
    State,
    partial_trace,
    permute_factors,
    purify,
    trace_distance,
)


def _as_operator(k) -> np.ndarray:
    arr = np.array(k, dtype=complex)
    if arr.ndim != 2:
        raise ValueError(f"Kraus operator must be a matrix, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CpMap:
    """Completely positive trace-nonincreasing map in Kraus form.

    ``in_dims`` / ``out_dims`` record the tensor-factor splitting of the
    input and output spaces; ``out_parties`` optionally assigns party labels
    to the output factors (otherwise they inherit from the application site).
    """

    kraus: tuple[np.ndarray, ...]
    in_dims: tuple[int, ...] = ()
    out_dims: tuple[int, ...] = ()
    out_parties: tuple[Party, ...] | None = None

    def __post_init__(self):
        kraus = tuple(_as_operator(k) for k in self.kraus)
        if not kraus:
            raise ValueError("a CP map needs at least one Kraus operator")
        rows, cols = kraus[0].shape
        if any(k.shape != (rows, cols) for k in kraus):
            raise ValueError("all Kraus operators must share one shape")
        in_dims = tuple(int(d) for d in self.in_dims) or (cols,)
        out_dims = tuple(int(d) for d in self.out_dims) or (rows,)
        if prod(in_dims) != cols:
            raise ValueError(f"in_dims {in_dims} do not match Kraus columns {cols}")
        if prod(out_dims) != rows:
            raise ValueError(f"out_dims {out_dims} do not match Kraus rows {rows}")
        if self.out_parties is not None and len(self.out_parties) != len(out_dims):
            raise ValueError("out_parties must label every output factor")
        gram = self.gram_with(kraus)
        top = float(np.linalg.eigvalsh(gram).max(initial=0.0))
        if top > 1.0 + get_config().tp_tol:
            raise ValueError(f"map increases trace (largest Gram eigenvalue {top:.12f})")
        object.__setattr__(self, "kraus", kraus)
        object.__setattr__(self, "in_dims", in_dims)
        object.__setattr__(self, "out_dims", out_dims)

    @staticmethod
    def gram_with(kraus) -> np.ndarray:
        return sum(k.conj().T @ k for k in kraus)

    @property
    def gram(self) -> np.ndarray:
        """Sum of K^dagger K over the Kraus operators."""
        return self.gram_with(self.kraus)

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    @property
    def is_trace_preserving(self) -> bool:
        dev = np.max(np.abs(self.gram - np.eye(self.dim_in)))
        return float(dev) <= get_config().tp_tol

    def apply_matrix(self, mat: np.ndarray) -> np.ndarray:
        """Apply to a raw operator on the full input space."""
        return sum(k @ mat @ k.conj().T for k in self.kraus)


def identity_channel(dims: Sequence[int]) -> CpMap:
    d = prod(dims)
    return CpMap((np.eye(d, dtype=complex),), tuple(dims), tuple(dims))


def unitary_channel(u, in_dims: Sequence[int] | None = None, out_parties=None) -> CpMap:
    mat = _as_operator(u)
    if mat.shape[0] != mat.shape[1]:
        raise ValueError("unitary channel needs a square matrix")
    dims = tuple(in_dims) if in_dims is not None else (mat.shape[0],)
    return CpMap((mat,), dims, dims, out_parties)


@dataclass(frozen=True, eq=False)
class Instrument:
    """Finite family of trace-nonincreasing CP maps summing to a channel.

    Outcomes are ordered; the outcome index is the classical message.
    """

    outcomes: tuple[CpMap, ...]

    def __post_init__(self):
        outcomes = tuple(self.outcomes)
        if not outcomes:
            raise ValueError("an instrument needs at least one outcome")
        first = outcomes[0]
        for m in outcomes[1:]:
            if m.in_dims != first.in_dims or m.out_dims != first.out_dims:
                raise ValueError("all outcomes must share input and output factor dims")
        total = sum((m.gram for m in outcomes), np.zeros((first.dim_in, first.dim_in), dtype=complex))
        dev = float(np.max(np.abs(total - np.eye(first.dim_in))))
        if dev > get_config().tp_tol:
            raise ValueError(f"outcome maps do not sum to a channel (deviation {dev:.3e})")
        object.__setattr__(self, "outcomes", outcomes)

    @property
    def n_outcomes(self) -> int:
        return len(self.outcomes)

    @property
    def dim_in(self) -> int:
        return self.outcomes[0].dim_in

    @property
    def in_dims(self) -> tuple[int, ...]:
        return self.outcomes[0].in_dims

    @property
    def out_dims(self) -> tuple[int, ...]:
        return self.outcomes[0].out_dims


def identity_instrument(dims: Sequence[int]) -> Instrument:
    return Instrument((identity_channel(dims),))


def projective_instrument(projectors: Sequence[np.ndarray], dims: Sequence[int] | None = None) -> Instrument:
    """Instrument with one projector per outcome (must resolve the identity)."""
    mats = [np.asarray(p, dtype=complex) for p in projectors]
    d = mats[0].shape[0]
    factor_dims = tuple(dims) if dims is not None else (d,)
    return Instrument(tuple(CpMap((p,), factor_dims, factor_dims) for p in mats))


# ---------------------------------------------------------------------------
# applying maps to tensor-factor subsets

def _sorted_targets(n: int, targets) -> list[int]:
    tgt = sorted(set(int(i) for i in targets))
    if not tgt:
        raise ValueError("target factor set must be nonempty")
    if tgt[0] < 0 or tgt[-1] >= n:
        raise ValueError(f"target factors {tgt} out of range for {n} factors")
    return tgt


def apply_kraus_to_vector(vec: np.ndarray, dims: Sequence[int], op: np.ndarray, targets) -> tuple[np.ndarray, tuple[int, ...]]:
    """Apply one operator to the given factors of an amplitude vector.

    Returns the new (flat, generally unnormalized) vector; the operator's
    output block comes first in the new factor order, then the untouched
    factors.  The caller tracks output factor dims.
    """
    dims = tuple(dims)
    tgt = _sorted_targets(len(dims), targets)
    rest = [i for i in range(len(dims)) if i not in tgt]
    d_t = prod(dims[i] for i in tgt)
    d_r = prod((dims[i] for i in rest), start=1)
    arranged = vec.reshape(dims).transpose(tgt + rest).reshape(d_t, d_r)
    out = op @ arranged
    return out.reshape(-1), tuple(dims[i] for i in rest)


def apply_cp_map(m: CpMap, s: State, targets) -> tuple[State, float]:
    """Apply a CP map to a subset of factors of a state.

    Returns the (possibly subnormalized) output state and its trace.  Output
    factors take the map's ``out_parties`` when present, otherwise the party
    of the first target factor.
    """
    tgt = _sorted_targets(s.n_factors, targets)
    if prod(s.dims[i] for i in tgt) != m.dim_in:
        raise ValueError(
            f"target factors have dimension {prod(s.dims[i] for i in tgt)}, "
            f"map expects {m.dim_in}"
        )
    rest = [i for i in range(s.n_factors) if i not in tgt]
    n = s.n_factors
    dims = list(s.dims)
    d_t = prod(s.dims[i] for i in tgt)
    d_r = prod((s.dims[i] for i in rest), start=1)
    perm = tgt + rest
    tensor = (
        s.matrix.reshape(dims + dims)
        .transpose(perm + [n + i for i in perm])
        .reshape(d_t, d_r, d_t, d_r)
    )
    out = np.zeros((m.dim_out, d_r, m.dim_out, d_r), dtype=complex)
    for k in m.kraus:
        out += np.einsum("ab,bicj,dc->aidj", k, tensor, k.conj())
    out_dims = m.out_dims + tuple(s.dims[i] for i in rest)
    parties = m.out_parties if m.out_parties is not None else (s.parties[tgt[0]],) * len(m.out_dims)
    out_parties = tuple(parties) + tuple(s.parties[i] for i in rest)
    full = m.dim_out * d_r
    result = State(out.reshape(full, full), out_dims, out_parties)
    return result, result.trace()


@dataclass(frozen=True)
class OutcomeStat:
    """One retained instrument outcome: original index, weight, post-state."""

    index: int
    probability: float
    state: State


def instrument_statistics(e: Instrument, s: State, targets) -> list[OutcomeStat]:
    """Outcome probabilities and normalized post-measurement states.

    Outcomes with probability below the configured threshold are omitted;
    the surviving entries keep their original outcome indices.  The retained
    probabilities are checked to sum to one.
    """
    stats: list[OutcomeStat] = []
    total = 0.0
    for j, m in enumerate(e.outcomes):
        raw, weight = apply_cp_map(m, s, targets)
        total += weight
        if weight <= get_config().prob_tol:
            continue
        normalized = State(raw.matrix / weight, raw.dims, raw.parties)
        stats.append(OutcomeStat(j, weight, normalized))
    if abs(total - s.trace()) > get_config().tp_tol:
        raise ValueError(f"outcome weights sum to {total:.12f}, expected {s.trace():.12f}")
    return stats


@dataclass(frozen=True, eq=False)
class OneWayLoccChannel:
    """Instrument on the sending side paired with one receiving channel per
    classical message: rho -> sum_k (T_k x R_k)(rho)."""

    a_instrument: Instrument
    b_channels: tuple[CpMap, ...]

    def __post_init__(self):
        b = tuple(self.b_channels)
        if len(b) != self.a_instrument.n_outcomes:
            raise ValueError(
                f"{self.a_instrument.n_outcomes} instrument outcomes but {len(b)} receiving channels"
            )
        first = b[0]
        for ch in b:
            if not ch.is_trace_preserving:
                raise ValueError("every receiving channel must be trace preserving")
            if ch.in_dims != first.in_dims or ch.out_dims != first.out_dims:
                raise ValueError("receiving channels must share input/output factor dims")
        object.__setattr__(self, "b_channels", b)

    @property
    def message_count(self) -> int:
        return self.a_instrument.n_outcomes


def apply_one_way_locc(
    n: OneWayLoccChannel, s: State, a_party: Party = "A", b_party: Party = "B"
) -> State:
    """Apply the channel, routing factors by party label.

    Factors of ``a_party`` feed the instrument, factors of ``b_party`` the
    receiving channels; any remaining factors are untouched.  Output factor
    order: sending-side outputs, receiving-side outputs, untouched factors.
    """
    a_targets = s.factors_of(a_party)
    b_targets = s.factors_of(b_party)
    if not a_targets or not b_targets:
        raise ValueError(f"state lacks factors for parties {a_party!r}/{b_party!r}")
    if prod(s.dims[i] for i in a_targets) != n.a_instrument.dim_in:
        raise ValueError("sending-side dimension mismatch")
    if prod(s.dims[i] for i in b_targets) != n.b_channels[0].dim_in:
        raise ValueError("receiving-side dimension mismatch")
    total: np.ndarray | None = None
    layout: tuple[tuple[int, ...], tuple[Party, ...]] | None = None
    remaining = [i for i in range(s.n_factors) if i not in a_targets]
    for t_k, r_k in zip(n.a_instrument.outcomes, n.b_channels):
        after_t, _ = apply_cp_map(t_k, s, a_targets)
        # b factors sit right after the freshly inserted sending-side outputs
        shift = len(t_k.out_dims)
        b_now = [shift + remaining.index(i) for i in b_targets]
        branch, _ = apply_cp_map(r_k, after_t, b_now)
        if total is None:
            total = np.array(branch.matrix, dtype=complex)
            layout = (branch.dims, branch.parties)
        else:
            total += branch.matrix
    # bring sending-side outputs in front of receiving-side outputs
    n_b = len(n.b_channels[0].out_dims)
    n_a = len(n.a_instrument.outcomes[0].out_dims)
    n_all = len(layout[0])
    order = list(range(n_b, n_b + n_a)) + list(range(n_b)) + list(range(n_b + n_a, n_all))
    return permute_factors(State(total, layout[0], layout[1]), order)


# ---------------------------------------------------------------------------
# merging protocols

@dataclass(frozen=True, eq=False)
class MergingProtocol:
    """One-way LOCC channel together with the entangled resource registers
    it consumes (``phi_in``) and produces (``phi_out``).

    The instrument acts on (K0_A, A_1..A_l) and outputs K1_A; each receiving
    channel maps (K0_B, B_1..B_l) to (K1_B, B'_1, B_1, ..., B'_l, B_l) with
    the mirror factors B' of the same dimension as A.
    """

    locc: OneWayLoccChannel
    phi_in: PureState
    phi_out: PureState
    blocklength: int

    def __post_init__(self):
        if self.blocklength < 1:
            raise ValueError("blocklength must be >= 1")
        for name, phi in (("phi_in", self.phi_in), ("phi_out", self.phi_out)):
            if len(phi.dims) != 2 or phi.dims[0] != phi.dims[1]:
                raise ValueError(f"{name} must live on two factors of equal dimension")
            _require_flat_schmidt(phi, name)
        ins = self.locc.a_instrument
        recv = self.locc.b_channels[0]
        l = self.blocklength
        if len(ins.in_dims) != l + 1 or len(recv.in_dims) != l + 1:
            raise ValueError("instrument/receiver must expose (resource, copies...) factor dims")
        if ins.in_dims[0] != self.phi_in.dims[0] or recv.in_dims[0] != self.phi_in.dims[1]:
            raise ValueError("input resource dimensions do not match phi_in")
        if ins.out_dims != (self.phi_out.dims[0],):
            raise ValueError("instrument output must be the single output resource factor")
        d_a = ins.in_dims[1]
        d_b = recv.in_dims[1]
        if ins.in_dims[1:] != (d_a,) * l or recv.in_dims[1:] != (d_b,) * l:
            raise ValueError("copy factors must all share one dimension per side")
        expected_out = (self.phi_out.dims[1],) + (d_a, d_b) * l
        if recv.out_dims != expected_out:
            raise ValueError(
                f"receiving channels must output {expected_out}, got {recv.out_dims}"
            )

    @property
    def copy_dims(self) -> tuple[int, int]:
        """Per-copy (sending, receiving) dimensions."""
        return (self.locc.a_instrument.in_dims[1], self.locc.b_channels[0].in_dims[1])

    @property
    def message_count(self) -> int:
        return self.locc.message_count

    @property
    def resource_ratio(self) -> Fraction:
        """Schmidt-rank ratio consumed/produced, as an exact rational."""
        return Fraction(self.phi_in.dims[0], self.phi_out.dims[0])

    @property
    def entanglement_rate(self) -> float:
        """log2(resource ratio) per source copy (negative = net gain)."""
        ratio = self.resource_ratio
        return (np.log2(ratio.numerator) - np.log2(ratio.denominator)) / self.blocklength

    @property
    def classical_rate(self) -> float:
        return float(np.log2(self.message_count)) / self.blocklength


def _require_flat_schmidt(phi: PureState, name: str) -> None:
    r = phi.dims[0]
    coeffs = np.linalg.svd(phi.vector.reshape(phi.dims), compute_uv=False)
    if np.max(np.abs(coeffs - 1.0 / np.sqrt(r))) > 1e-8:
        raise ValueError(f"{name} must be maximally entangled with full Schmidt rank")


def trivial_resource(party_a: Party = "A", party_b: Party = "B") -> PureState:
    """Rank-one resource register (no entanglement consumed or produced)."""
    return PureState(np.ones(1, dtype=complex), (1, 1), (party_a, party_b))


def merging_fidelity(p: MergingProtocol, rho: State, purification: PureState | None = None) -> float:
    """Fidelity between the protocol output on a purified source and the
    relabeled purification next to the produced resource.

    The comparison target phi_out x psi' is pure, so the fidelity equals the
    overlap <t| output |t>; the output never has to be materialized as a
    matrix.  The value does not depend on which purification is supplied.
    """
    l = p.blocklength
    d_a, d_b = p.copy_dims
    if rho.dims != (d_a, d_b) * l or rho.parties != ("A", "B") * l:
        raise ValueError(
            f"source state must have dims {(d_a, d_b) * l} with alternating A/B parties"
        )
    psi = purification if purification is not None else purify(rho)
    if psi.dims[: 2 * l] != rho.dims:
        raise ValueError("purification must extend the source factors")
    reduced = partial_trace(psi.density(), range(2 * l))
    if trace_distance(reduced, rho) > get_config().close_tol:
        raise ValueError("supplied vector does not purify the source state")
    n_env = len(psi.dims) - 2 * l

    in_vec = np.kron(p.phi_in.vector, psi.vector)
    in_dims = p.phi_in.dims + psi.dims
    a_targets = [0] + [2 + 2 * i for i in range(l)]
    b_targets = [1] + [3 + 2 * i for i in range(l)]

    target = np.kron(p.phi_out.vector, psi.vector)
    target_dims = p.phi_out.dims + psi.dims
    # output factor order: (K1_B, B'_1, B_1, ..., B'_l, B_l), K1_A, env
    order = [1] + list(range(2, 2 * l + 2)) + [0] + list(range(2 * l + 2, 2 * l + 2 + n_env))
    t_perm = target.reshape(target_dims).transpose(order).reshape(-1)

    total = 0.0
    for t_k, r_k in zip(p.locc.a_instrument.outcomes, p.locc.b_channels):
        for ka in t_k.kraus:
            mid, rest_dims = apply_kraus_to_vector(in_vec, in_dims, ka, a_targets)
            mid_dims = t_k.out_dims + rest_dims
            # receiving-side factors now directly follow the K1_A output
            b_now = list(range(1, l + 2))
            for kb in r_k.kraus:
                out, _ = apply_kraus_to_vector(mid, mid_dims, kb, b_now)
                total += abs(np.vdot(t_perm, out)) ** 2
    return float(min(max(total, 0.0), 1.0))


def permutation_channel(sigma: Sequence[int], cell_dim: int) -> CpMap:
    """Unitary channel permuting ``len(sigma)`` tensor cells of one dimension.

    On product vectors: U (v_1 x ... x v_l) = v_{sigma(1)} x ... x v_{sigma(l)}
    (``sigma`` is 0-based), so product states indexed by a word get their word
    permuted accordingly.
    """
    sigma = [int(i) for i in sigma]
    l = len(sigma)
    if sorted(sigma) != list(range(l)):
        raise ValueError(f"{sigma} is not a permutation of range({l})")
    dim = cell_dim**l
    check_dim_cap(dim, "permutation_channel")
    shape = (cell_dim,) * l
    digits = np.array(np.unravel_index(np.arange(dim), shape))
    rows = np.ravel_multi_index(tuple(digits[sigma, :]), shape)
    u = np.zeros((dim, dim), dtype=complex)
    u[rows, np.arange(dim)] = 1.0
    return CpMap((u,), (cell_dim,) * l, (cell_dim,) * l)


def compose_instrument_with_protocols(
    e: Instrument, subprotocols: Sequence[MergingProtocol]
) -> MergingProtocol:
    """Precede per-outcome merging protocols by a sorting instrument on the
    source copies of the sending side.

    The instrument's outcome i routes the input to subprotocol i; messages
    add up, so the composed protocol sends sum_i D_i distinct messages.  All
    subprotocols must share resources, blocklength and copy dimensions.
    """
    subs = list(subprotocols)
    if len(subs) != e.n_outcomes:
        raise ValueError(f"need one subprotocol per outcome ({e.n_outcomes}), got {len(subs)}")
    first = subs[0]
    for sub in subs[1:]:
        if sub.blocklength != first.blocklength or sub.copy_dims != first.copy_dims:
            raise ValueError("subprotocols must share blocklength and copy dimensions")
        if not np.allclose(sub.phi_in.vector, first.phi_in.vector) or not np.allclose(
            sub.phi_out.vector, first.phi_out.vector
        ):
            raise ValueError("subprotocols must share resource states")
    l = first.blocklength
    d_a = first.copy_dims[0]
    if e.dim_in != d_a**l or prod(e.out_dims) != d_a**l:
        raise ValueError(f"instrument must act on the {d_a}^{l}-dimensional sending copies")
    k0a = first.phi_in.dims[0]
    eye = np.eye(k0a, dtype=complex)
    outcomes = []
    b_channels = []
    for p_i, sub in zip(e.outcomes, subs):
        lifted = [np.kron(eye, kp) for kp in p_i.kraus]
        for t_k, r_k in zip(sub.locc.a_instrument.outcomes, sub.locc.b_channels):
            kraus = tuple(kt @ kp for kt in t_k.kraus for kp in lifted)
            outcomes.append(CpMap(kraus, t_k.in_dims, t_k.out_dims, t_k.out_parties))
            b_channels.append(r_k)
    locc = OneWayLoccChannel(Instrument(tuple(outcomes)), tuple(b_channels))
    return MergingProtocol(locc, first.phi_in, first.phi_out, l)

"""Construction separating adversarial merging cost from the convex-hull
compound cost.

A base state with negative conditional entropy is rotated by block-shift
unitaries so the family's sending-side supports become pairwise orthogonal.
The orthogonality lets the sender identify the word perfectly with one
measurement, run a protocol tailored to the base state, and restore the
rotation afterwards; the mixture costs over the hull exceed the protocol's
rates by exactly the logarithm of the family size.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import log2

import numpy as np

from .channels import (
    CpMap,
    Instrument,
    MergingProtocol,
    OneWayLoccChannel,
    apply_cp_map,
    trivial_resource,
)
from .config import check_dim_cap, get_config
from .entropy import conditional_entropy, mutual_info_env
from .linalg import (
    PureState,
    State,
    basis_ket,
    eigensystem,
    maximally_entangled,
    partial_trace,
    schmidt_decomposition,
    trace_norm,
)
from .rates import StateSet, compound_classical_cost, compound_merging_cost, worst_case_protocol_fidelity

FAMILY_WORD_CAP = 4096


@dataclass(frozen=True, eq=False)
class OrthogonalFamily:
    """Family of rotated copies of a base state with pairwise orthogonal
    sending-side supports.

    ``embed`` is the isometry from the base sending space onto the first
    support block of the enlarged space; ``unitaries`` hold the block shifts
    (the first is the identity) and ``block_projectors`` the corresponding
    support blocks.
    """

    base: State
    n: int
    embed: np.ndarray
    unitaries: tuple[np.ndarray, ...]
    block_projectors: tuple[np.ndarray, ...]
    members: StateSet

    @property
    def support_rank(self) -> int:
        return self.embed.shape[0] // self.n

    @property
    def enlarged_dim(self) -> int:
        return self.embed.shape[0]


def build_orthogonal_family(rho1: State, n: int) -> OrthogonalFamily:
    """Embed the base state's sending side into n orthogonal blocks.

    Requires strictly negative conditional entropy of the base state.  The
    enlarged sending space has dimension n * rank of the sending marginal;
    member s is the base state shifted into block s.  All orthogonality and
    marginal invariants are verified numerically before returning.
    """
    if len(rho1.dims) != 2 or rho1.parties != ("A", "B"):
        raise ValueError("base state must have exactly two factors with parties (A, B)")
    if n < 1:
        raise ValueError("family size must be >= 1")
    s_cond = conditional_entropy(rho1).value
    if s_cond >= -1e-9:
        raise ValueError(
            f"base state needs strictly negative conditional entropy, got {s_cond:.6f}"
        )
    d_a, d_b = rho1.dims
    rho_a = partial_trace(rho1, [0])
    w, v = eigensystem(rho_a.matrix)
    rank = max(int(np.sum(w > get_config().rank_tol)), 1)
    m = n * rank
    check_dim_cap(m * d_b, "build_orthogonal_family")

    embed = np.zeros((m, d_a), dtype=complex)
    embed[:rank, :] = v[:, :rank].conj().T
    shift = np.zeros((m, m), dtype=complex)
    for i in range(m):
        shift[(i + rank) % m, i] = 1.0
    unitaries = tuple(np.linalg.matrix_power(shift, s) for s in range(n))
    block = np.zeros((m, m), dtype=complex)
    block[:rank, :rank] = np.eye(rank)
    projectors = tuple(u @ block @ u.conj().T for u in unitaries)

    lifted = np.kron(embed, np.eye(d_b))
    base_emb = lifted @ rho1.matrix @ lifted.conj().T
    members = []
    for s in range(n):
        u_full = np.kron(unitaries[s], np.eye(d_b))
        members.append(State(u_full @ base_emb @ u_full.conj().T, (m, d_b), ("A", "B")))
    family = OrthogonalFamily(
        base=rho1,
        n=n,
        embed=embed,
        unitaries=unitaries,
        block_projectors=projectors,
        members=StateSet(tuple(members), tuple(str(s + 1) for s in range(n))),
    )
    _verify_family(family)
    return family


def _verify_family(fam: OrthogonalFamily) -> None:
    members = fam.members.members
    b_ref = partial_trace(members[0], [1])
    for i, rho in enumerate(members):
        if trace_norm(partial_trace(rho, [1]).matrix - b_ref.matrix) > 1e-9:
            raise ValueError(f"receiving-side marginal of member {i + 1} deviates")
    for i in range(fam.n):
        a_i = partial_trace(members[i], [0]).matrix
        for j in range(i + 1, fam.n):
            a_j = partial_trace(members[j], [0]).matrix
            if trace_norm(a_i @ a_j) > 1e-10:
                raise ValueError(f"sending-side supports of members {i + 1},{j + 1} overlap")
            if trace_norm(members[i].matrix @ members[j].matrix) > 1e-10:
                raise ValueError(f"joint supports of members {i + 1},{j + 1} overlap")


def discriminating_instrument(fam: OrthogonalFamily) -> Instrument:
    """Instrument identifying the member block and rotating it back.

    Outcome s has the single Kraus operator (embed)^dagger U_s^dagger P_s,
    mapping the enlarged sending space to the base one; on member s it
    reproduces the base state with certainty, on any other member it has
    zero weight.  Both facts are verified numerically on construction.
    """
    kraus = tuple(
        fam.embed.conj().T @ fam.unitaries[s].conj().T @ fam.block_projectors[s]
        for s in range(fam.n)
    )
    d_a = fam.base.dims[0]
    m = fam.enlarged_dim
    inst = Instrument(tuple(CpMap((k,), (m,), (d_a,)) for k in kraus))
    for s, rho in enumerate(fam.members.members):
        for t, outcome in enumerate(inst.outcomes):
            out, weight = apply_cp_map(outcome, rho, [0])
            if s == t:
                if abs(weight - 1.0) > 1e-9 or trace_norm(out.matrix - fam.base.matrix) > 1e-9:
                    raise ValueError(f"outcome {t + 1} fails to recover the base state")
            elif weight > 1e-10:
                raise ValueError(f"outcome {t + 1} fires on member {s + 1}")
    return inst


def _orthonormal_complement(basis: np.ndarray) -> np.ndarray:
    """Orthonormal columns spanning the orthocomplement of the column span."""
    d = basis.shape[0]
    proj = np.eye(d) - basis @ basis.conj().T
    w, v = np.linalg.eigh(proj)
    return v[:, w > 0.5]


def _kron_power(mat: np.ndarray, copies: int) -> np.ndarray:
    out = mat
    for _ in range(copies - 1):
        out = np.kron(out, mat)
    return out


def known_pure_state_merging(rho1: State, l: int) -> MergingProtocol:
    """Single-message merging of l copies of a known pure state with a flat
    Schmidt spectrum.

    The receiver prepares the state locally (there is no environment to
    stay correlated with), and both sides rotate their Schmidt bases into
    the resource registers, converting the source entanglement into a
    maximally entangled output of Schmidt rank r^l.  The fidelity is exactly
    one and no message needs to be sent beyond the single outcome.

    A mixed base state, or a pure one with a non-flat Schmidt spectrum, has
    no exact protocol of this shape (local operations cannot flatten Schmidt
    coefficients); supply a dedicated subprotocol for those.
    """
    if len(rho1.dims) != 2 or rho1.parties != ("A", "B"):
        raise ValueError("base state must have exactly two factors with parties (A, B)")
    w, v = eigensystem(rho1.matrix)
    if abs(w[0] - 1.0) > get_config().close_tol:
        raise ValueError("base state must be pure; plug in a subprotocol for mixed sources")
    psi = PureState(v[:, 0], rho1.dims, rho1.parties)
    sd = schmidt_decomposition(psi, [0])
    r = sd.rank
    if np.max(np.abs(sd.coefficients[:r] - 1.0 / np.sqrt(r))) > 1e-9:
        raise ValueError(
            "exact merging of a known pure state needs a flat Schmidt spectrum "
            "(local operations cannot flatten it); supply a subprotocol instead"
        )
    d_a, d_b = rho1.dims
    check_dim_cap((r**l) * (d_a * d_b) ** l * (r**l), "known_pure_state_merging")
    a_basis = sd.left_vectors[:, :r]
    b_basis = sd.right_vectors[:, :r]

    s_a = _kron_power(a_basis.conj().T, l)          # (r^l, d_a^l)
    s_b = _kron_power(b_basis.conj().T, l)          # (r^l, d_b^l)
    first_out = basis_ket(r**l, 0).reshape(-1, 1)

    a_kraus = [s_a]
    for col in _orthonormal_complement(_kron_power(a_basis, l)).T:
        a_kraus.append(first_out @ col.conj().reshape(1, -1))
    instrument = Instrument(
        (CpMap(tuple(a_kraus), (1,) + (d_a,) * l, (r**l,)),)
    )

    prepared = _kron_power(psi.vector.reshape(-1, 1), l)  # ((d_a d_b)^l, 1)
    b_kraus = [np.kron(s_b, prepared)]
    for col in _orthonormal_complement(_kron_power(b_basis, l)).T:
        b_kraus.append(np.kron(first_out @ col.conj().reshape(1, -1), prepared))
    b_channel = CpMap(
        tuple(b_kraus),
        (1,) + (d_b,) * l,
        (r**l,) + (d_a, d_b) * l,
    )
    locc = OneWayLoccChannel(instrument, (b_channel,))
    return MergingProtocol(locc, trivial_resource(), maximally_entangled(r**l), l)


def family_merging_protocol(fam: OrthogonalFamily, sub: MergingProtocol, l: int) -> MergingProtocol:
    """Wrap a base-state protocol into one for the whole family.

    For every word of member indices the sending side projects onto the
    word's support blocks and rotates back to the base space (the
    discriminating instrument, copy by copy), runs the subprotocol, and the
    receiving side rotates its mirror factors into the word's blocks again.
    The message count multiplies by (family size)^l; the fidelity on any
    word state equals the subprotocol's fidelity on the base copies.
    """
    if sub.blocklength != l:
        raise ValueError(f"subprotocol has blocklength {sub.blocklength}, expected {l}")
    d_a, d_b = fam.base.dims
    if sub.copy_dims != (d_a, d_b):
        raise ValueError("subprotocol must act on the base state's spaces")
    if fam.n**l > FAMILY_WORD_CAP:
        raise ValueError(f"{fam.n}^{l} words exceed the enumeration cap {FAMILY_WORD_CAP}")
    m = fam.enlarged_dim
    disc = discriminating_instrument(fam)
    k0a = sub.phi_in.dims[0]
    k1b = sub.phi_out.dims[1]
    eye_k0a = np.eye(k0a, dtype=complex)
    eye_k1b = np.eye(k1b, dtype=complex)
    eye_b = np.eye(d_b, dtype=complex)

    # per-member restore maps on a mirror factor: base space -> enlarged block
    complement = _orthonormal_complement(fam.embed.conj().T)  # in the base space
    first_enlarged = basis_ket(m, 0).reshape(-1, 1)
    restore: list[list[np.ndarray]] = []
    for s in range(fam.n):
        ops = [fam.unitaries[s] @ fam.embed]
        for col in complement.T:
            ops.append(first_enlarged @ col.conj().reshape(1, -1))
        restore.append(ops)

    outcomes = []
    b_channels = []
    for word in itertools.product(range(fam.n), repeat=l):
        sort = _kron_power_list([disc.outcomes[s].kraus[0] for s in word])
        lifted_sort = np.kron(eye_k0a, sort)
        word_restores = []
        for choice in itertools.product(*[restore[s] for s in word]):
            g = eye_k1b
            for op in choice:
                g = np.kron(g, np.kron(op, eye_b))
            word_restores.append(g)
        for t_k, r_k in zip(sub.locc.a_instrument.outcomes, sub.locc.b_channels):
            kraus = tuple(kt @ lifted_sort for kt in t_k.kraus)
            outcomes.append(CpMap(kraus, (k0a,) + (m,) * l, t_k.out_dims))
            b_kraus = tuple(g @ kb for g in word_restores for kb in r_k.kraus)
            b_channels.append(
                CpMap(b_kraus, r_k.in_dims, (k1b,) + (m, d_b) * l)
            )
    locc = OneWayLoccChannel(Instrument(tuple(outcomes)), tuple(b_channels))
    return MergingProtocol(locc, sub.phi_in, sub.phi_out, l)


def _kron_power_list(mats: list[np.ndarray]) -> np.ndarray:
    out = mats[0]
    for mat in mats[1:]:
        out = np.kron(out, mat)
    return out


@dataclass
class RateGapReport:
    """Hull costs versus protocol rates for an orthogonal family."""

    n: int
    blocklength: int
    base_conditional_entropy: float
    base_env_mutual_info: float
    hull_merging_numeric: float
    hull_merging_closed: float
    hull_merging_weights: tuple[float, ...]
    hull_classical_numeric: float
    hull_classical_closed: float
    hull_classical_weights: tuple[float, ...]
    protocol_entanglement_rate: float
    protocol_classical_rate: float
    worst_case_fidelity: float
    worst_word: tuple[int, ...]
    merging_gap: float
    classical_gap: float
    expected_gap: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "blocklength": self.blocklength,
            "base": {
                "conditional_entropy": self.base_conditional_entropy,
                "env_mutual_info": self.base_env_mutual_info,
            },
            "hull_merging_cost": {
                "numeric": self.hull_merging_numeric,
                "closed_form": self.hull_merging_closed,
                "weights": list(self.hull_merging_weights),
            },
            "hull_classical_cost": {
                "numeric": self.hull_classical_numeric,
                "closed_form": self.hull_classical_closed,
                "weights": list(self.hull_classical_weights),
            },
            "protocol": {
                "entanglement_rate": self.protocol_entanglement_rate,
                "classical_rate": self.protocol_classical_rate,
                "worst_case_fidelity": self.worst_case_fidelity,
                "worst_word": list(self.worst_word),
            },
            "gaps": {
                "merging": self.merging_gap,
                "classical": self.classical_gap,
                "expected": self.expected_gap,
            },
            "passed": self.passed,
        }


def rate_gap_report(
    fam: OrthogonalFamily, l: int = 1, restarts: int = 8, seed: int = 0
) -> RateGapReport:
    """Compare hull costs against the family protocol's achieved rates.

    Hull costs are maximized numerically over mixture weights and reported
    next to their closed forms (base cost plus log2 n for merging, plus
    2 log2 n for the classical side, both from the orthogonal-support
    entropy identity).  The protocol rates come from the wrapped base-state
    protocol at the given blocklength; both gaps are expected to be log2 n.
    """
    members = fam.members
    base_cond = conditional_entropy(fam.base).value
    base_env = mutual_info_env(fam.base).value
    log_n = log2(fam.n) if fam.n > 1 else 0.0

    merge_hull = compound_merging_cost(members, hull=True, restarts=restarts, seed=seed)
    classical_hull = compound_classical_cost(members, hull=True, restarts=restarts, seed=seed)
    merge_closed = base_cond + log_n
    classical_closed = base_env + 2 * log_n

    sub = known_pure_state_merging(fam.base, l)
    protocol = family_merging_protocol(fam, sub, l)
    worst_f, worst_word = worst_case_protocol_fidelity(protocol, members, l)

    ent_rate = protocol.entanglement_rate
    cls_rate = protocol.classical_rate
    merging_gap = merge_hull.value - ent_rate
    classical_gap = classical_hull.value - cls_rate
    tol = 1e-6
    passed = (
        abs(merge_hull.value - merge_closed) <= tol
        and abs(classical_hull.value - classical_closed) <= tol
        and worst_f >= 1.0 - 1e-9
        and merging_gap >= log_n - tol
        and classical_gap >= log_n - tol
    )
    return RateGapReport(
        n=fam.n,
        blocklength=l,
        base_conditional_entropy=base_cond,
        base_env_mutual_info=base_env,
        hull_merging_numeric=merge_hull.value,
        hull_merging_closed=merge_closed,
        hull_merging_weights=merge_hull.weights or (1.0,),
        hull_classical_numeric=classical_hull.value,
        hull_classical_closed=classical_closed,
        hull_classical_weights=classical_hull.weights or (1.0,),
        protocol_entanglement_rate=ent_rate,
        protocol_classical_rate=cls_rate,
        worst_case_fidelity=worst_f,
        worst_word=worst_word,
        merging_gap=merging_gap,
        classical_gap=classical_gap,
        expected_gap=log_n,
        passed=passed,
    )

"""Broadcasting measurement statistics into arrays of thermal memories.

A memory array is an ordered list of units; each unit carries its own
Hamiltonian, initial state, sector structure, and interaction with the
system.  Protocol runs couple the system to each unit and read the pointer
statistics q^(i) per unit.  This module also hosts the finite-resource
witness, the exact statistics-reconstruction map, and direct constructors
for ideal broadcast states.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateOutcomeWarning,
    DimensionBudgetExceeded,
    DimensionMismatch,
    InvalidBlocks,
    InvalidOperator,
    NonPositiveMemoryEntropy,
    NotInvertible,
)
from .infotherm import Ensemble
from .interact import (
    CONTROLLED_PERMUTATION,
    ControlledInteraction,
    build_cycled_variant,
    build_noninvasive_maxcorr,
    build_unbiased_swap,
)
from .qcore import DensityOperator, mutual_information, partial_trace, prob_vector
from .thermal import (
    EnergyGrouping,
    MemoryHamiltonian,
    c_max_qubits_analytic,
    gibbs,
    group_energies,
    product_hamiltonian,
)

DENSE_DIM_BUDGET = 4096
INVERTIBILITY_TOL = 1e-9

SEQUENTIAL_LOCAL = "sequential_local"
GLOBAL = "global"


@dataclass(frozen=True, eq=False)
class MemoryUnit:
    """One memory (or subcomponent) with its sector structure and interaction."""

    hamiltonian: MemoryHamiltonian
    sigma: DensityOperator
    grouping: EnergyGrouping
    interaction: ControlledInteraction
    beta: float | None = None

    def __post_init__(self):
        if self.sigma.dim != self.hamiltonian.dim or self.grouping.dim != self.hamiltonian.dim:
            raise DimensionMismatch("unit state, grouping, and Hamiltonian dims disagree")
        if self.interaction.d_m != self.hamiltonian.dim:
            raise DimensionMismatch("unit interaction does not act on this memory")

    @property
    def dim(self) -> int:
        return self.hamiltonian.dim


def thermal_unit(
    hamiltonian: MemoryHamiltonian,
    beta: float,
    d_s: int,
    kind: str = "noninvasive",
    variant: int = 0,
) -> MemoryUnit:
    """Unit holding a Gibbs state with an interaction of the requested kind."""
    tau = gibbs(hamiltonian, beta)
    grouping = group_energies(hamiltonian, d_s)
    u = _build_interaction(grouping, kind, variant)
    return MemoryUnit(hamiltonian, tau.state, grouping, u, beta)


def explicit_unit(
    hamiltonian: MemoryHamiltonian,
    sigma: DensityOperator,
    d_s: int,
    kind: str = "noninvasive",
    variant: int = 0,
) -> MemoryUnit:
    """Unit with an arbitrary initial state (pure-memory controls and the like)."""
    grouping = group_energies(hamiltonian, d_s)
    return MemoryUnit(hamiltonian, sigma, grouping, _build_interaction(grouping, kind, variant))


def _build_interaction(grouping: EnergyGrouping, kind: str, variant: int) -> ControlledInteraction:
    if kind == "noninvasive":
        return build_noninvasive_maxcorr(grouping)
    if kind == "cycled":
        return build_cycled_variant(grouping, variant)
    if kind == "swap":
        return build_unbiased_swap(grouping)
    raise DimensionMismatch(f"unknown interaction kind {kind!r}")


@dataclass(frozen=True, eq=False)
class MemoryArray:
    """Ordered collection of memory units sharing one system dimension."""

    d_s: int
    units: tuple[MemoryUnit, ...]

    def __init__(self, d_s: int, units):
        units = tuple(units)
        if not units:
            raise DimensionMismatch("memory array needs at least one unit")
        for u in units:
            if u.grouping.d_s != d_s:
                raise DimensionMismatch(
                    f"unit grouped for d_s={u.grouping.d_s}, array expects {d_s}"
                )
        object.__setattr__(self, "d_s", int(d_s))
        object.__setattr__(self, "units", units)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(u.dim for u in self.units)

    def total_dim(self, d_s: int | None = None) -> int:
        return (d_s or self.d_s) * math.prod(self.dims)


@dataclass(frozen=True, eq=False)
class BroadcastRun:
    """Outcome of coupling one system state to a memory array."""

    mode: str
    state: DensityOperator
    p_initial: np.ndarray
    q: tuple[np.ndarray, ...]
    system_diag_history: tuple[np.ndarray, ...]
    ensembles: tuple[Ensemble, ...]
    defects: dict


def _unit_permutation(dims: tuple[int, ...], axis: int, u: ControlledInteraction) -> np.ndarray:
    """Joint-basis permutation of the interaction between factor 0 and `axis`."""
    total = math.prod(dims)
    multi = list(np.unravel_index(np.arange(total), dims))
    x = multi[0]
    m = multi[axis]
    if u.kind == CONTROLLED_PERMUTATION:
        multi[axis] = u.perms[x, m]
    else:
        g = u.grouping
        multi[0] = g.level_to_group[m]
        multi[axis] = g.groups[x, g.level_to_slot[m]]
    return np.ravel_multi_index(tuple(multi), dims)


def _apply_permutation(matrix: np.ndarray, pi: np.ndarray) -> np.ndarray:
    inv = np.argsort(pi)
    return matrix[np.ix_(inv, inv)]


def _system_diag(matrix: np.ndarray, dims: tuple[int, ...]) -> np.ndarray:
    return matrix.diagonal().real.reshape(dims).sum(axis=tuple(range(1, len(dims))))


def _unit_pointer_dist(matrix: np.ndarray, dims: tuple[int, ...], axis: int, g: EnergyGrouping) -> np.ndarray:
    other = tuple(j for j in range(len(dims)) if j != axis)
    level_pop = matrix.diagonal().real.reshape(dims).sum(axis=other)
    return np.array([level_pop[g.groups[y]].sum() for y in range(g.d_s)])


def _final_joint(rho_s: DensityOperator, mem: MemoryArray) -> tuple[np.ndarray, tuple, list]:
    dims = (mem.d_s,) + mem.dims
    if math.prod(dims) > DENSE_DIM_BUDGET:
        raise DimensionBudgetExceeded(
            f"dense dimension {math.prod(dims)} exceeds budget {DENSE_DIM_BUDGET}"
        )
    if rho_s.dim != mem.d_s:
        raise DimensionMismatch(f"system dim {rho_s.dim} != array d_s {mem.d_s}")
    joint = rho_s.matrix
    for u in mem.units:
        joint = np.kron(joint, u.sigma.matrix)
    history = []
    for i, unit in enumerate(mem.units):
        pi = _unit_permutation(dims, i + 1, unit.interaction)
        joint = _apply_permutation(joint, pi)
        history.append(_system_diag(joint, dims))
    return joint, dims, history


def run_sequential_local(rho_s: DensityOperator, mem: MemoryArray) -> BroadcastRun:
    """Couple the system to each unit in order; read pointer statistics per unit.

    The run also records, per unit, the ensemble of memory states labeled by
    the input outcome (obtained by re-running on each basis input), which is
    the decomposition the broadcast regime classification refers to.
    """
    joint, dims, history = _final_joint(rho_s, mem)
    p_initial = rho_s.matrix.diagonal().real.copy()
    q = tuple(
        _unit_pointer_dist(joint, dims, i + 1, unit.grouping)
        for i, unit in enumerate(mem.units)
    )
    ensembles = _input_label_ensembles(mem, mem.dims, p_initial)
    state = DensityOperator(joint, dims)
    defect = max(
        float(np.max(np.abs(p_initial - qi))) for qi in q
    )
    return BroadcastRun(
        mode=SEQUENTIAL_LOCAL,
        state=state,
        p_initial=p_initial,
        q=q,
        system_diag_history=tuple(history),
        ensembles=ensembles,
        defects={"ideal_scb": defect},
    )


def _input_label_ensembles(
    run_array: MemoryArray, unit_dims: tuple[int, ...], p_initial
) -> tuple:
    """Per-unit memory ensembles labeled by which basis input was written.

    `run_array` is the array actually coupled to the system (possibly a
    merged single unit); `unit_dims` is the factorization used for readout.
    """
    d_s = run_array.d_s
    dims = (d_s,) + unit_dims
    n_units = len(unit_dims)
    conditional: list[list[DensityOperator]] = [[] for _ in range(n_units)]
    for x in range(d_s):
        basis = np.zeros((d_s, d_s), dtype=complex)
        basis[x, x] = 1.0
        joint, _, _ = _final_joint(DensityOperator(basis), run_array)
        full = DensityOperator(joint, dims)
        for i in range(n_units):
            conditional[i].append(partial_trace(full, (i + 1,)))
    keep = [x for x in range(d_s) if p_initial[x] > 1e-14]
    dropped = [x for x in range(d_s) if x not in keep]
    if dropped:
        warnings.warn(
            f"outcomes {dropped} have probability at the floor; dropped",
            DegenerateOutcomeWarning,
        )
    return tuple(
        Ensemble([p_initial[x] for x in keep], [conditional[i][x] for x in keep])
        for i in range(n_units)
    )


def run_global(rho_s: DensityOperator, mem: MemoryArray, kind: str = "swap", variant: int = 0) -> BroadcastRun:
    """Couple the system once to the whole array through a merged sector structure.

    Pointer statistics are still read out per unit, which is what makes the
    global mode informative: a globally unbiased write need not look unbiased
    on any single unit.
    """
    merged_h = product_hamiltonian([u.hamiltonian for u in mem.units])
    sigma = mem.units[0].sigma.matrix
    for u in mem.units[1:]:
        sigma = np.kron(sigma, u.sigma.matrix)
    merged_grouping = group_energies(merged_h, mem.d_s)
    merged_unit = MemoryUnit(
        merged_h,
        DensityOperator(sigma, (merged_h.dim,)),
        merged_grouping,
        _build_interaction(merged_grouping, kind, variant),
    )
    merged = MemoryArray(mem.d_s, (merged_unit,))
    joint, _, history = _final_joint(rho_s, merged)
    dims = (mem.d_s,) + mem.dims
    p_initial = rho_s.matrix.diagonal().real.copy()
    q = tuple(
        _unit_pointer_dist(joint, dims, i + 1, unit.grouping)
        for i, unit in enumerate(mem.units)
    )
    ensembles = _input_label_ensembles(merged, mem.dims, p_initial)
    defect = max(float(np.max(np.abs(p_initial - qi))) for qi in q)
    return BroadcastRun(
        mode=GLOBAL,
        state=DensityOperator(joint, dims),
        p_initial=p_initial,
        q=q,
        system_diag_history=tuple(history),
        ensembles=ensembles,
        defects={"ideal_scb": defect},
    )


def ideal_scb_defect(run: BroadcastRun, p_true=None) -> float:
    """Worst deviation of any unit's pointer statistics from the target distribution."""
    p = run.p_initial if p_true is None else np.asarray(p_true, dtype=float)
    return max(float(np.max(np.abs(p - qi))) for qi in run.q)


@dataclass(frozen=True)
class NoGoWitness:
    """Entropy-counting witness that redundant unbiased copying must fail.

    Compares lhs(k) = S(rho_S) + 2^k S(M_1) against
    rhs(k) = 2^k H(X) + ln d_S for doubling depth k; any finite k with
    lhs > rhs certifies the obstruction.
    """

    s_rho_s: float
    s_m1: float
    h_x: float
    d_s: int
    k: int | None
    lhs: float | None
    rhs: float | None
    violated: bool


MAX_WITNESS_DEPTH = 256


def nogo_witness(s_rho_s: float, s_m1: float, h_x: float, d_s: int) -> NoGoWitness:
    """Smallest doubling depth k at which the entropy count fails, if any."""
    if s_m1 <= 0.0:
        raise NonPositiveMemoryEntropy(f"memory entropy {s_m1} must be positive")
    if d_s < 2:
        raise DimensionMismatch(f"need d_s >= 2, got {d_s}")
    if s_rho_s < 0.0 or h_x < 0.0:
        raise DimensionMismatch("entropies must be nonnegative")
    log_d = math.log(d_s)
    if s_m1 > h_x:
        for k in range(MAX_WITNESS_DEPTH + 1):
            lhs = s_rho_s + (2.0**k) * s_m1
            rhs = (2.0**k) * h_x + log_d
            if lhs > rhs:
                return NoGoWitness(s_rho_s, s_m1, h_x, d_s, k, lhs, rhs, True)
    return NoGoWitness(s_rho_s, s_m1, h_x, d_s, None, None, None, False)


def reconstruct_p(q_variants, c_max_value: float, d_s: int) -> np.ndarray:
    """Invert averaged pointer statistics of the d_S - 1 cycled variants.

    q_av = p * c_max + (1 - p) * (1 - c_max) / (d_S - 1) componentwise, which
    is invertible away from c_max = 1/d_S.
    """
    if d_s < 2:
        raise DimensionMismatch(f"need d_s >= 2, got {d_s}")
    q_variants = [prob_vector(q) for q in q_variants]
    if len(q_variants) != d_s - 1:
        raise DimensionMismatch(f"need exactly {d_s - 1} variant distributions, got {len(q_variants)}")
    if any(q.size != d_s for q in q_variants):
        raise DimensionMismatch("variant distributions must have d_s outcomes")
    if abs(c_max_value - 1.0 / d_s) <= INVERTIBILITY_TOL:
        raise NotInvertible(
            f"c_max={c_max_value} within {INVERTIBILITY_TOL} of uninformative 1/{d_s}"
        )
    q_av = np.mean(q_variants, axis=0)
    c = (1.0 - c_max_value) / (d_s - 1)
    p = (q_av - c) / (c_max_value - c)
    p[(p < 0.0) & (p > -1e-12)] = 0.0
    return prob_vector(p)


def ideal_broadcasting_state(p, blocks, off=None) -> DensityOperator:
    """Assemble sum_x p_x |x><x| (x)_j A^j_x (+ off) and validate it.

    `blocks[j][x]` are positive, mutually orthogonal (over x) matrices per
    component j; they are trace-normalized here.  `off` is an optional
    residual carrying outcome coherences; the assembled matrix must still be
    a valid state.
    """
    p = prob_vector(p)
    d_s = p.size
    blocks = [list(component) for component in blocks]
    if not blocks:
        raise InvalidBlocks("need at least one component")
    normalized = []
    for j, component in enumerate(blocks):
        if len(component) != d_s:
            raise InvalidBlocks(f"component {j} has {len(component)} blocks for {d_s} outcomes")
        mats = [np.asarray(b, dtype=complex) for b in component]
        d_j = mats[0].shape[0]
        col = []
        for x, m in enumerate(mats):
            if m.shape != (d_j, d_j):
                raise InvalidBlocks(f"component {j} blocks have mixed shapes")
            if np.max(np.abs(m - m.conj().T)) > 1e-12:
                raise InvalidBlocks(f"block ({j}, {x}) is not Hermitian")
            if float(np.min(np.linalg.eigvalsh(m))) < -1e-12:
                raise InvalidBlocks(f"block ({j}, {x}) is not positive semidefinite")
            tr = float(np.real(np.trace(m)))
            if tr <= 0.0:
                raise InvalidBlocks(f"block ({j}, {x}) has nonpositive trace")
            col.append(m / tr)
        for x in range(d_s):
            for y in range(x + 1, d_s):
                if float(np.max(np.abs(col[x] @ col[y]))) > 1e-12:
                    raise InvalidBlocks(f"blocks ({j}, {x}) and ({j}, {y}) are not orthogonal")
        normalized.append(col)
    dims = (d_s,) + tuple(c[0].shape[0] for c in normalized)
    total = math.prod(dims)
    out = np.zeros((total, total), dtype=complex)
    for x in range(d_s):
        basis = np.zeros((d_s, d_s))
        basis[x, x] = 1.0
        term = basis
        for col in normalized:
            term = np.kron(term, col[x])
        out += p[x] * term
    if off is not None:
        off = np.asarray(off, dtype=complex)
        if off.shape != out.shape:
            raise InvalidBlocks(f"off-block shape {off.shape} != {out.shape}")
        out = out + off
    try:
        return DensityOperator(out, dims)
    except InvalidOperator as exc:
        raise InvalidBlocks(f"assembled matrix is not a state: {exc}") from exc


def objectivity_mutual_info(state: DensityOperator, component: int) -> float:
    """I(S : M_component) of a joint broadcast state (component counted from 0)."""
    marg = partial_trace(state, (0, component + 1))
    return mutual_information(marg, (0,))


def sweep_cmax_convergence(n_values, beta_omega_values, d_s: int = 2) -> list[tuple[int, float, float]]:
    """(n, beta*omega, c_max) rows for qubit-chain memories, analytic path.

    Rows are ordered by (beta*omega, n) so output files are reproducible.
    """
    rows = []
    for bw in sorted(float(b) for b in beta_omega_values):
        for n in sorted(int(n) for n in n_values):
            rows.append((n, bw, c_max_qubits_analytic(n, bw, d_s)))
    return rows

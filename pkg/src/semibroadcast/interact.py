"""System-memory measurement interactions and their figures of merit.

Two constructions are provided, both basis permutations of the joint space:

* controlled permutations  U = sum_x |x><x| (x) V_x  where each V_x permutes
  memory levels sector-to-sector while preserving the within-sector slot.
  These never disturb the system's outcome-basis diagonal.
* an unbiased swap that relabels the memory as (register (x) rest) per the
  sector structure and exchanges the system with the register.  It copies
  the system's outcome statistics into the pointer sectors exactly, at the
  price of replacing the system state.

The pointer correlation of a joint state is
C = sum_x Tr[ rho (|x><x| (x) Pi_x) ] with Pi_x the sector projectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange, WrongKind
from .qcore import DensityOperator, UnitaryOperator, basis_state, evolve, random_density, random_unitary
from .thermal import EnergyGrouping, GibbsState, pointer_projectors

CONTROLLED_PERMUTATION = "controlled_permutation"
SWAP_UNBIASED = "swap_unbiased"


def _shift(grouping: EnergyGrouping, offset_map) -> np.ndarray:
    """Level permutations (d_S, d_M): row x sends sector nu to sector offset_map(x, nu)."""
    d_s = grouping.d_s
    perms = np.empty((d_s, grouping.dim), dtype=int)
    for x in range(d_s):
        for nu in range(d_s):
            perms[x, grouping.groups[nu]] = grouping.groups[offset_map(x, nu)]
    return perms


@dataclass(frozen=True, eq=False)
class ControlledInteraction:
    """A joint basis permutation of system (x) memory.

    kind CONTROLLED_PERMUTATION stores per-outcome memory permutations
    `perms[x]` (level -> level); kind SWAP_UNBIASED stores only the sector
    structure it swaps through.
    """

    kind: str
    grouping: EnergyGrouping
    perms: np.ndarray | None = None
    variant: int = 0

    @property
    def d_s(self) -> int:
        return self.grouping.d_s

    @property
    def d_m(self) -> int:
        return self.grouping.dim

    @cached_property
    def joint_permutation(self) -> np.ndarray:
        """pi with U|j> = |pi[j]> on the d_S * d_M product basis."""
        d_s, d_m = self.d_s, self.d_m
        pi = np.empty(d_s * d_m, dtype=int)
        if self.kind == CONTROLLED_PERMUTATION:
            for x in range(d_s):
                pi[x * d_m : (x + 1) * d_m] = x * d_m + self.perms[x]
        else:
            g = self.grouping
            for x in range(d_s):
                for y in range(d_s):
                    pi[x * d_m + g.groups[y]] = y * d_m + g.groups[x]
        return pi

    def as_unitary(self) -> UnitaryOperator:
        d = self.d_s * self.d_m
        m = np.zeros((d, d))
        m[self.joint_permutation, np.arange(d)] = 1.0
        return UnitaryOperator(m, (self.d_s, self.d_m))


def build_noninvasive_maxcorr(grouping: EnergyGrouping) -> ControlledInteraction:
    """Controlled sector-shift: outcome x moves sector nu to sector (x + nu) mod d_S.

    Non-invasive for every input, and achieves pointer correlation c_max on
    every diagonal input against the thermal memory it was grouped for.
    """
    d_s = grouping.d_s
    perms = _shift(grouping, lambda x, nu: (x + nu) % d_s)
    return ControlledInteraction(CONTROLLED_PERMUTATION, grouping, perms, 0)


def build_cycled_variant(grouping: EnergyGrouping, i: int) -> ControlledInteraction:
    """Variant i of the controlled sector-shift, i in 0..d_S-2.

    Variant i relabels the nonzero sector offsets by the cyclic shift
    s_i(delta) = ((delta - 1 + i) mod (d_S - 1)) + 1, so that across all
    variants every off-pointer weight visits every offset exactly once.
    Variant 0 is the base construction.
    """
    d_s = grouping.d_s
    if not (0 <= i <= d_s - 2):
        raise IndexOutOfRange(f"variant {i} outside 0..{d_s - 2}")

    def offset_map(x: int, nu: int) -> int:
        if nu == 0:
            return x
        s_inv = ((nu - 1 - i) % (d_s - 1)) + 1
        return (x + s_inv) % d_s

    return ControlledInteraction(CONTROLLED_PERMUTATION, grouping, _shift(grouping, offset_map), i)


def build_unbiased_swap(grouping: EnergyGrouping) -> ControlledInteraction:
    """Swap of the system with the sector register defined by the grouping.

    Exactly unbiased: the pointer distribution after the swap equals the
    system's outcome-basis diagonal for every input state.
    """
    return ControlledInteraction(SWAP_UNBIASED, grouping, None, 0)


def apply(u: ControlledInteraction, rho_s: DensityOperator, sigma_m: DensityOperator) -> DensityOperator:
    """U (rho_S (x) sigma_M) U^dagger via index permutation."""
    if rho_s.dim != u.d_s or sigma_m.dim != u.d_m:
        raise DimensionMismatch(
            f"interaction is {u.d_s} x {u.d_m}, states are {rho_s.dim} x {sigma_m.dim}"
        )
    joint = np.kron(rho_s.matrix, sigma_m.matrix)
    inv = np.argsort(u.joint_permutation)
    out = joint[np.ix_(inv, inv)]
    return DensityOperator(out, (u.d_s, u.d_m))


def correlation_c(rho_joint: DensityOperator, projectors, system_basis=None) -> float:
    """Pointer correlation sum_x Tr[ rho (|x><x| (x) Pi_x) ]."""
    if len(rho_joint.dims) != 2:
        raise DimensionMismatch(f"expected a (system, memory) state, got dims {rho_joint.dims}")
    d_s, d_m = rho_joint.dims
    if len(projectors) != d_s:
        raise DimensionMismatch(f"{len(projectors)} projectors for {d_s} outcomes")
    rho = rho_joint.matrix
    if system_basis is not None:
        b = np.asarray(system_basis, dtype=complex)
        rot = np.kron(b.conj().T, np.eye(d_m))
        rho = rot @ rho @ rot.conj().T
    blocks = rho.reshape(d_s, d_m, d_s, d_m)
    total = 0.0
    for x, proj in enumerate(projectors):
        total += float(np.real(np.trace(proj @ blocks[x, :, x, :])))
    return total


def transition_matrix(u: ControlledInteraction, tau: GibbsState, grouping: EnergyGrouping) -> "TransitionMatrix":
    """Row-stochastic pointer map a[x, y] = Tr[ Pi_y V_x tau V_x^dagger ]."""
    if u.kind != CONTROLLED_PERMUTATION:
        raise WrongKind(f"transition matrix defined for controlled permutations, not {u.kind}")
    if tau.dim != grouping.dim or u.d_m != grouping.dim:
        raise DimensionMismatch("interaction, state, and grouping dimensions disagree")
    d_s = grouping.d_s
    a = np.zeros((d_s, d_s))
    lvl_grp = grouping.level_to_group
    for x in range(d_s):
        targets = lvl_grp[u.perms[x]]
        np.add.at(a[x], targets, tau.probs)
    return TransitionMatrix(a, u.variant)


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Pointer-outcome transition weights for one interaction variant."""

    a: np.ndarray
    variant: int

    def __init__(self, a, variant: int = 0):
        m = np.asarray(a, dtype=float).copy()
        m.setflags(write=False)
        object.__setattr__(self, "a", m)
        object.__setattr__(self, "variant", int(variant))

    def pushforward(self, p) -> np.ndarray:
        """Outcome distribution q_y = sum_x p_x a[x, y]."""
        return np.asarray(p, dtype=float) @ self.a


def test_state_battery(d_s: int, seed: int = 7, n_random: int = 100) -> list[DensityOperator]:
    """Basis states, the uniform diagonal state, and seeded random states."""
    states = [basis_state(d_s, x) for x in range(d_s)]
    states.append(DensityOperator(np.eye(d_s) / d_s))
    seeds = np.random.SeedSequence(seed).spawn(n_random)
    states.extend(random_density(d_s, s) for s in seeds)
    return states


def pointer_distribution(rho_joint: DensityOperator, grouping: EnergyGrouping) -> np.ndarray:
    """Sector populations of the memory factor of a (system, memory) state."""
    d_s, d_m = rho_joint.dims
    diag = rho_joint.matrix.diagonal().real.reshape(d_s, d_m).sum(axis=0)
    return np.array([diag[grouping.groups[y]].sum() for y in range(grouping.d_s)])


def check_unbiased(
    u: ControlledInteraction,
    sigma_m: DensityOperator,
    test_states,
    grouping: EnergyGrouping,
) -> float:
    """Worst-case |p_x - q_x| between input diagonals and pointer readouts."""
    defect = 0.0
    for rho_s in test_states:
        q = pointer_distribution(apply(u, rho_s, sigma_m), grouping)
        p = rho_s.matrix.diagonal().real
        defect = max(defect, float(np.max(np.abs(p - q))))
    return defect


def check_noninvasive(u: ControlledInteraction, sigma_m: DensityOperator, test_states) -> float:
    """Worst-case change of the system's outcome-basis diagonal."""
    d_m = sigma_m.dim
    defect = 0.0
    for rho_s in test_states:
        out = apply(u, rho_s, sigma_m)
        diag_after = out.matrix.diagonal().real.reshape(rho_s.dim, d_m).sum(axis=1)
        defect = max(defect, float(np.max(np.abs(rho_s.matrix.diagonal().real - diag_after))))
    return defect


@dataclass(frozen=True)
class InteractionReport:
    """Summary of one interaction against one memory state."""

    c_u: float
    bias_defect: float
    invasiveness_defect: float


def interaction_report(
    u: ControlledInteraction,
    sigma_m: DensityOperator,
    grouping: EnergyGrouping,
    test_states=None,
) -> InteractionReport:
    """Evaluate C_U (averaged over the diagonal ensemble) and both defects."""
    if test_states is None:
        test_states = test_state_battery(u.d_s)
    projectors = pointer_projectors(grouping)
    diag_states = [
        DensityOperator(np.diag(s.matrix.diagonal()), s.dims) for s in test_states
    ]
    c_vals = [correlation_c(apply(u, s, sigma_m), projectors) for s in diag_states]
    return InteractionReport(
        c_u=float(np.mean(c_vals)),
        bias_defect=check_unbiased(u, sigma_m, test_states, grouping),
        invasiveness_defect=check_noninvasive(u, sigma_m, test_states),
    )


def haar_correlation_max(
    grouping: EnergyGrouping,
    tau: GibbsState,
    n_samples: int,
    seed: int = 0,
    diag_states=None,
) -> float:
    """Max pointer correlation of Haar-random joint unitaries over diagonal inputs.

    A falsification probe for the c_max ceiling; it samples, it does not prove.
    By default it probes the maximally mixed input, where the ceiling is the
    exact supremum over all unitaries.  Callers may pass other diagonal
    states, but the ceiling constrains arbitrary unitaries only while the
    sector weight gap of tau dominates the spread of the input diagonal;
    strongly tilted inputs admit memory-controlled permutations with higher
    correlation, so they are not ceiling counterexamples.
    """
    d_s, d_m = grouping.d_s, grouping.dim
    if diag_states is None:
        diag_states = [DensityOperator(np.eye(d_s) / d_s)]
    projectors = pointer_projectors(grouping)
    joints = [
        DensityOperator(np.kron(s.matrix, tau.state.matrix), (d_s, d_m))
        for s in diag_states
    ]
    best = 0.0
    for s in np.random.SeedSequence(seed).spawn(n_samples):
        u = random_unitary(d_s * d_m, s)
        for joint in joints:
            rotated = evolve(joint, u)
            best = max(best, correlation_c(rotated, projectors))
    return best

"""Thermal memories: Hamiltonians, Gibbs states, and pointer-sector structure.

A memory of dimension d_M is read out through d_S pointer sectors of equal
rank r = d_M / d_S.  Sectors are built by stably sorting the energy levels
(ties broken by level index) and cutting the sorted list into d_S contiguous
ascending blocks.  The best achievable pointer correlation c_max is the total
Gibbs weight of the coldest sector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import DimensionMismatch
from .qcore import DensityOperator

BETA_OMEGA_DEFAULTS = (0.1, 0.25, 0.5, 1.0)


@dataclass(frozen=True, eq=False)
class MemoryHamiltonian:
    """Diagonal Hamiltonian given by its energy levels.

    Levels are stored in units of `scale`; absolute energies are
    `scale * energies`.  Level i is the i-th computational basis vector.
    """

    energies: np.ndarray
    scale: float = 1.0

    def __init__(self, energies, scale: float = 1.0):
        e = np.asarray(energies, dtype=float).copy()
        if e.ndim != 1 or e.size == 0:
            raise DimensionMismatch(f"expected a nonempty 1-d energy list, got shape {e.shape}")
        if not np.all(np.isfinite(e)) or not (math.isfinite(scale) and scale > 0):
            raise DimensionMismatch("energies and scale must be finite, scale positive")
        e.setflags(write=False)
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "scale", float(scale))

    @property
    def dim(self) -> int:
        return self.energies.size

    def absolute_energies(self) -> np.ndarray:
        return self.energies * self.scale


def qubit_chain_hamiltonian(n: int, omega: float = 1.0) -> MemoryHamiltonian:
    """n noninteracting qubits with level splitting omega; level energies count excitations."""
    if n < 1:
        raise DimensionMismatch(f"need at least one qubit, got n={n}")
    levels = np.arange(2**n)
    excitations = np.array([int(i).bit_count() for i in levels], dtype=float)
    return MemoryHamiltonian(excitations, scale=omega)


def product_hamiltonian(parts: list[MemoryHamiltonian]) -> MemoryHamiltonian:
    """Noninteracting sum of several memories; level order follows np.kron ravel order."""
    if not parts:
        raise DimensionMismatch("need at least one part")
    total = np.zeros(1)
    for h in parts:
        total = (total[:, None] + h.absolute_energies()[None, :]).ravel()
    return MemoryHamiltonian(total, scale=1.0)


@dataclass(frozen=True, eq=False)
class GibbsState:
    """Thermal state exp(-beta H)/Z of a diagonal Hamiltonian."""

    hamiltonian: MemoryHamiltonian
    beta: float
    probs: np.ndarray
    log_z: float

    def __init__(self, hamiltonian: MemoryHamiltonian, beta: float, probs, log_z: float):
        p = np.asarray(probs, dtype=float).copy()
        p.setflags(write=False)
        object.__setattr__(self, "hamiltonian", hamiltonian)
        object.__setattr__(self, "beta", float(beta))
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "log_z", float(log_z))

    @property
    def dim(self) -> int:
        return self.probs.size

    @cached_property
    def state(self) -> DensityOperator:
        return DensityOperator(np.diag(self.probs).astype(complex), (self.dim,))

    def mean_energy(self) -> float:
        return float(self.probs @ self.hamiltonian.absolute_energies())


def gibbs(hamiltonian: MemoryHamiltonian, beta: float) -> GibbsState:
    """Gibbs state at inverse temperature beta >= 0 (log-domain normalization)."""
    if not (math.isfinite(beta) and beta >= 0.0):
        raise DimensionMismatch(f"beta must be finite and >= 0, got {beta}")
    logw = -beta * hamiltonian.absolute_energies()
    log_z = float(logsumexp(logw))
    return GibbsState(hamiltonian, beta, np.exp(logw - log_z), log_z)


@dataclass(frozen=True, eq=False)
class EnergyGrouping:
    """Partition of d_M levels into d_S ascending sectors of rank r."""

    d_s: int
    r: int
    groups: np.ndarray          # (d_S, r) level indices
    energies: np.ndarray        # absolute energies, by level index

    def __init__(self, d_s: int, r: int, groups, energies):
        g = np.asarray(groups, dtype=int).copy()
        e = np.asarray(energies, dtype=float).copy()
        g.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "d_s", int(d_s))
        object.__setattr__(self, "r", int(r))
        object.__setattr__(self, "groups", g)
        object.__setattr__(self, "energies", e)

    @property
    def dim(self) -> int:
        return self.d_s * self.r

    @cached_property
    def level_to_group(self) -> np.ndarray:
        out = np.empty(self.dim, dtype=int)
        for y in range(self.d_s):
            out[self.groups[y]] = y
        return out

    @cached_property
    def level_to_slot(self) -> np.ndarray:
        out = np.empty(self.dim, dtype=int)
        for y in range(self.d_s):
            out[self.groups[y]] = np.arange(self.r)
        return out

    def group_energy_table(self) -> np.ndarray:
        """(d_S, r) table of sector energies."""
        return self.energies[self.groups]


def group_energies(hamiltonian: MemoryHamiltonian, d_s: int) -> EnergyGrouping:
    """Stable energy-ordered partition into d_s sectors; requires d_s | dim."""
    d_m = hamiltonian.dim
    if d_s < 2:
        raise DimensionMismatch(f"need d_s >= 2, got {d_s}")
    if d_m % d_s != 0:
        raise DimensionMismatch(f"d_s={d_s} does not divide memory dimension {d_m}")
    r = d_m // d_s
    order = np.argsort(hamiltonian.energies, kind="stable")
    return EnergyGrouping(d_s, r, order.reshape(d_s, r), hamiltonian.absolute_energies())


def pointer_projectors(grouping: EnergyGrouping) -> list[np.ndarray]:
    """Rank-r diagonal projectors onto each sector, indexed by outcome."""
    out = []
    for y in range(grouping.d_s):
        p = np.zeros((grouping.dim, grouping.dim))
        p[grouping.groups[y], grouping.groups[y]] = 1.0
        out.append(p)
    return out


@dataclass(frozen=True, eq=False)
class ABlock:
    """Positive diagonal block labeled by the pointer pair (x, y)."""

    x: int
    y: int
    matrix: np.ndarray
    trace: float


def a_blocks(grouping: EnergyGrouping, tau: GibbsState) -> list[ABlock]:
    """Base blocks A_{0,y}: the Gibbs weights of sector y on their own levels.

    Their traces are the anti-correlation weights; the y=0 block carries c_max.
    """
    if tau.dim != grouping.dim:
        raise DimensionMismatch(f"state dim {tau.dim} != grouping dim {grouping.dim}")
    out = []
    for y in range(grouping.d_s):
        m = np.zeros((grouping.dim, grouping.dim))
        idx = grouping.groups[y]
        m[idx, idx] = tau.probs[idx]
        out.append(ABlock(0, y, m, float(tau.probs[idx].sum())))
    return out


def sector_weights(grouping: EnergyGrouping, tau: GibbsState) -> np.ndarray:
    """Total Gibbs weight per sector (the traces of the base blocks)."""
    if tau.dim != grouping.dim:
        raise DimensionMismatch(f"state dim {tau.dim} != grouping dim {grouping.dim}")
    return tau.probs[grouping.groups].sum(axis=1)


def c_max(grouping: EnergyGrouping, tau: GibbsState) -> float:
    """Best pointer correlation: total Gibbs weight of the coldest sector."""
    if tau.dim != grouping.dim:
        raise DimensionMismatch(f"state dim {tau.dim} != grouping dim {grouping.dim}")
    return float(tau.probs[grouping.groups[0]].sum())


def c_max_qubits_analytic(n: int, beta_omega: float, d_s: int = 2) -> float:
    """c_max for an n-qubit chain memory without building the 2^n-level state.

    Sums Boltzmann weights over excitation classes in the log domain
    (log-binomials via log-gamma), taking the 2^n / d_s largest weights.
    Stable through n = 410.  d_s must be a power of two dividing 2^n.
    """
    if n < 1:
        raise DimensionMismatch(f"need n >= 1, got n={n}")
    if not (math.isfinite(beta_omega) and beta_omega >= 0.0):
        raise DimensionMismatch(f"beta_omega must be finite and >= 0, got {beta_omega}")
    if d_s < 2 or (d_s & (d_s - 1)) != 0:
        raise DimensionMismatch(f"d_s must be a power of two >= 2, got {d_s}")
    log_r = d_s.bit_length() - 1
    if n < log_r:
        raise DimensionMismatch(f"d_s={d_s} does not divide 2^{n}")
    r = 2 ** (n - log_r)  # exact int, may be huge
    log_z_n = n * float(np.logaddexp(0.0, -beta_omega))

    def log_binom(m: int) -> float:
        return float(gammaln(n + 1) - gammaln(m + 1) - gammaln(n - m + 1))

    head, tail = [], []
    cum = 0
    for m in range(n + 1):
        count = math.comb(n, m)
        if cum + count <= r:
            head.append(log_binom(m) - beta_omega * m - log_z_n)
            cum += count
            continue
        # class m straddles the sector boundary; split it by exact counts
        take = r - cum
        if take > 0:
            head.append(math.log(take) - beta_omega * m - log_z_n)
        if count > take:
            tail.append(math.log(count - take) - beta_omega * m - log_z_n)
        for mm in range(m + 1, n + 1):
            tail.append(log_binom(mm) - beta_omega * mm - log_z_n)
        break
    head_val = float(np.exp(logsumexp(np.array(head))))
    if head_val <= 0.5:
        return head_val
    # Near saturation the complement sum is far more accurate.
    return 1.0 - float(np.exp(logsumexp(np.array(tail))))

"""Crank-Nicolson evolution of the Dirac equation in 1+1 dimensions.

The solver exists to manufacture reference solutions on a spacetime grid.
Rearranging (i dslash - Aslash) psi = psi gives

    i d_t psi = H psi,   H = gamma^0 gamma^k (-i d_k + A_k) + gamma^0 + A_0

with covariant A_mu. One spatial axis carries the central-difference
derivative; the transverse potential components still enter H pointwise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .clifford import GammaRepresentation
from .emfield import PotentialField
from .gridops import (
    PERIODIC,
    TRIM,
    SpacetimeGrid,
    SpinorGridField,
    convergence_order,
    dirac_residual,
)

NORM_DRIFT_TOL = 1e-10


class EvolutionError(RuntimeError):
    pass


def _difference_matrix(n: int, h: float, periodic: bool) -> sp.csr_matrix:
    d = sp.diags([np.full(n - 1, 1.0), np.full(n - 1, -1.0)], [1, -1], shape=(n, n), format="lil")
    if periodic:
        d[0, n - 1] = -1.0
        d[n - 1, 0] = 1.0
    return (d / (2.0 * h)).tocsr()


@dataclass(frozen=True, eq=False)
class EvolutionProblem:
    rep: GammaRepresentation
    field: PotentialField
    grid: SpacetimeGrid
    initial: np.ndarray  # (n_space, 4) spinor samples at t = origin[0]

    def __post_init__(self):
        spatial = [m for m in (1, 2, 3) if self.grid.extents[m] > 1]
        if len(spatial) != 1:
            raise ValueError("evolution grid needs exactly one active spatial axis")
        if self.grid.extents[0] < 2:
            raise ValueError("evolution grid needs at least one time step")
        axis = spatial[0]
        object.__setattr__(self, "axis", axis)
        init = np.asarray(self.initial, dtype=complex).reshape(self.grid.extents[axis], 4)
        object.__setattr__(self, "initial", init)
        dt, dx = self.grid.spacings[0], self.grid.spacings[axis]
        if dt > dx * (1 + 1e-12):
            raise ValueError(f"dt = {dt} exceeds dx = {dx}")
        self._check_inactive_constant()
        h0 = self.hamiltonian(self.grid.origin[0])
        if abs(h0 - h0.conj().T).max() > 1e-12 * max(1.0, abs(h0).max()):
            raise ValueError("discrete Hamiltonian is not Hermitian")

    @property
    def steps(self) -> int:
        return self.grid.extents[0] - 1

    def _check_inactive_constant(self, samples: int = 16):
        rng = np.random.default_rng(12345)
        lo = np.array(self.grid.origin)
        span = np.array([self.grid.spacings[m] * max(self.grid.extents[m] - 1, 1) for m in range(4)])
        x = lo + rng.random((samples, 4)) * span
        y = x.copy()
        for m in (1, 2, 3):
            if m != self.axis:
                y[:, m] += rng.normal(size=samples)
        if np.abs(self.field(x) - self.field(y)).max() > 1e-12 * max(1.0, np.abs(self.field(x)).max()):
            raise ValueError("field varies along an inactive axis")

    def space_coords(self, t: float) -> np.ndarray:
        n = self.grid.extents[self.axis]
        x = np.tile(np.array(self.grid.origin, dtype=float), (n, 1))
        x[:, 0] = t
        x[:, self.axis] = self.grid.axis_coords(self.axis)
        return x

    def hamiltonian(self, t: float) -> sp.csr_matrix:
        g = self.rep.gammas
        axis = self.axis
        n = self.grid.extents[axis]
        periodic = self.grid.boundary[axis] == PERIODIC
        alpha = [g[0] @ g[k] for k in range(4)]
        kinetic = sp.kron(_difference_matrix(n, self.grid.spacings[axis], periodic), -1j * alpha[axis])
        a = self.field(self.space_coords(t))
        blocks = (np.einsum("xk,kab->xab", a[:, 1:], np.stack(alpha[1:]))
                  + g[0] + a[:, 0, None, None] * np.eye(4))
        xi, ai, bi = np.indices((n, 4, 4))
        local = sp.csr_matrix((blocks.ravel(), ((4 * xi + ai).ravel(), (4 * xi + bi).ravel())),
                              shape=(4 * n, 4 * n))
        return (kinetic + local).tocsr()


def discrete_norms(block: SpinorGridField, axis: int | None = None) -> np.ndarray:
    """sum |psi|^2 dx on every time slice."""
    if axis is None:
        axis = [m for m in (1, 2, 3) if block.grid.extents[m] > 1][0]
    dens = np.sum(np.abs(block.values) ** 2, axis=-1)
    return dens.sum(axis=(1, 2, 3)) * block.grid.spacings[axis]


def evolve(problem: EvolutionProblem) -> SpinorGridField:
    """Crank-Nicolson steps with H at the half-step time; returns the full spacetime block."""
    g = problem.grid
    n = g.extents[problem.axis]
    dt = g.spacings[0]
    eye = sp.identity(4 * n, dtype=complex, format="csr")
    psi = problem.initial.reshape(-1).copy()
    out = np.empty((g.extents[0], 4 * n), dtype=complex)
    out[0] = psi
    times = g.axis_coords(0)
    norm0 = np.vdot(psi, psi).real
    for step in range(problem.steps):
        h = problem.hamiltonian(times[step] + 0.5 * dt)
        lhs = (eye + 0.5j * dt * h).tocsc()
        rhs = (eye - 0.5j * dt * h) @ psi
        try:
            psi = spla.splu(lhs).solve(rhs)
        except RuntimeError as exc:
            raise EvolutionError(f"singular Crank-Nicolson matrix at step {step}: {exc}") from exc
        if not np.all(np.isfinite(psi)):
            raise EvolutionError(f"non-finite state after step {step}")
        norm = np.vdot(psi, psi).real
        if norm0 > 0 and abs(norm - norm0) > NORM_DRIFT_TOL * norm0 * (step + 1):
            raise EvolutionError(f"norm drift {abs(norm - norm0) / norm0:.3e} after step {step}")
        out[step + 1] = psi
    shape = [g.extents[0], 1, 1, 1, 4]
    shape[problem.axis] = n
    return SpinorGridField(g, out.reshape(shape))


# -- initial data ------------------------------------------------------------

def positive_energy_spinor(rep: GammaRepresentation, momentum: float, axis: int = 1,
                           seed_vector=None) -> tuple[np.ndarray, float]:
    """Unit spinor w with (pslash - 1) w = 0 for p^mu = (E, p along ``axis``)."""
    energy = float(np.sqrt(1.0 + momentum**2))
    p_low = np.zeros(4)
    p_low[0] = energy
    p_low[axis] = -momentum
    pslash = np.einsum("m,mab->ab", p_low, rep.gammas)
    proj = 0.5 * (pslash + np.eye(4))
    candidates = [np.asarray(seed_vector, dtype=complex)] if seed_vector is not None else list(np.eye(4, dtype=complex))
    best = max((proj @ v for v in candidates), key=np.linalg.norm)
    return best / np.linalg.norm(best), energy


def plane_wave_block(rep: GammaRepresentation, grid: SpacetimeGrid, momentum: float = 0.0,
                     axis: int = 1, seed_vector=None) -> SpinorGridField:
    """Exact free solution w exp(-i p.x) sampled on every grid point."""
    w, energy = positive_energy_spinor(rep, momentum, axis, seed_vector)
    x = grid.coords
    phase = np.exp(-1j * (energy * x[..., 0] - momentum * x[..., axis]))
    return SpinorGridField(grid, phase[..., None] * w)


def gaussian_packet(grid: SpacetimeGrid, axis: int, weights, center: float = 0.0, width: float = 1.0,
                    momentum: float = 0.0) -> np.ndarray:
    """Gaussian envelope times exp(i p x) with constant spinor weights, at the initial time."""
    x = grid.axis_coords(axis)
    env = np.exp(-0.5 * ((x - center) / width) ** 2 + 1j * momentum * x)
    return env[:, None] * np.asarray(weights, dtype=complex)[None, :]


@dataclass
class ResidualReport:
    spacings: list[float]
    norms: list[float]
    order: float


def dirac_residual_report(blocks: list[SpinorGridField], pot: PotentialField, rep: GammaRepresentation,
                          window: dict[int, tuple[float, float]] | None = None) -> ResidualReport:
    """Interior max Dirac residual at each refinement level and the fitted order."""
    hs, norms = [], []
    for b in blocks:
        hs.append(b.grid.spacings[0])
        norms.append(dirac_residual(b, pot, rep).max_norm(window))
    order = convergence_order(list(zip(hs, norms))) if len(blocks) >= 3 and min(norms) > 0 else float("nan")
    return ResidualReport(hs, norms, order)

"""Gamma-matrix representations, charge conjugation and constant-spinor algebra.

Spinors are plain complex arrays whose last axis has length 4; every helper
here broadcasts over leading axes, so the same calls work on a single spinor
and on a whole grid of them. Co-spinors (Dirac adjoints) use the same layout
and act on spinors by contraction over the last axis.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np
import scipy.linalg

logger = logging.getLogger(__name__)

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])
METRIC.flags.writeable = False

ALGEBRA_TOL = 1e-12
EXPM_TOL = 1e-10
INDEPENDENCE_FLOOR = 1e-8

_I2 = np.eye(2, dtype=complex)
_Z2 = np.zeros((2, 2), dtype=complex)
PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


class RepresentationError(ValueError):
    """A gamma-matrix set is unknown or not admissible."""


class BasisError(ValueError):
    """A pair of constant spinors does not form a valid chiral basis."""


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class GammaRepresentation:
    name: str
    gammas: np.ndarray  # (4, 4, 4): gammas[mu] is gamma^mu
    gamma5: np.ndarray
    c_matrix: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "gammas", _frozen(self.gammas))
        object.__setattr__(self, "gamma5", _frozen(self.gamma5))
        if self.c_matrix is not None:
            object.__setattr__(self, "c_matrix", _frozen(self.c_matrix))
        if self.gammas.shape != (4, 4, 4) or self.gamma5.shape != (4, 4):
            raise RepresentationError("expected four 4x4 gamma matrices and a 4x4 gamma5")

    @property
    def C(self) -> np.ndarray:
        if self.c_matrix is None:
            raise RepresentationError(f"representation {self.name!r} carries no charge-conjugation matrix")
        return self.c_matrix

    def with_c(self, c_matrix) -> "GammaRepresentation":
        return GammaRepresentation(self.name, self.gammas, self.gamma5, c_matrix)

    def sigmas(self) -> np.ndarray:
        """All sigma^{mu nu} stacked as an array of shape (4, 4, 4, 4)."""
        g = self.gammas
        return 0.5j * (np.einsum("mab,nbc->mnac", g, g) - np.einsum("nab,mbc->mnac", g, g))

    def to_dict(self) -> dict:
        def enc(m):
            return [[[float(z.real), float(z.imag)] for z in row] for row in m]

        out = {"name": self.name}
        for mu in range(4):
            out[f"gamma{mu}"] = enc(self.gammas[mu])
        out["gamma5"] = enc(self.gamma5)
        if self.c_matrix is not None:
            out["C"] = enc(self.c_matrix)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "GammaRepresentation":
        def dec(rows):
            a = np.asarray(rows, dtype=float)
            if a.shape != (4, 4, 2):
                raise RepresentationError("matrices must be 4x4 arrays of [re, im] pairs")
            return a[..., 0] + 1j * a[..., 1]

        known = {"name", "gamma0", "gamma1", "gamma2", "gamma3", "gamma5", "C"}
        extra = set(data) - known
        if extra:
            raise RepresentationError(f"unknown keys in representation dump: {sorted(extra)}")
        try:
            gammas = np.stack([dec(data[f"gamma{mu}"]) for mu in range(4)])
            g5 = dec(data["gamma5"])
        except KeyError as exc:
            raise RepresentationError(f"missing matrix {exc.args[0]!r}") from None
        c = dec(data["C"]) if "C" in data else None
        return cls(data.get("name", "custom"), gammas, g5, c)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def loads(cls, text: str) -> "GammaRepresentation":
        return cls.from_dict(json.loads(text))


def _chiral() -> GammaRepresentation:
    g0 = np.block([[_Z2, -_I2], [-_I2, _Z2]])
    gi = [np.block([[_Z2, s], [-s, _Z2]]) for s in PAULI]
    g5 = np.block([[_I2, _Z2], [_Z2, -_I2]])
    c = np.block([[-1j * PAULI[1], _Z2], [_Z2, 1j * PAULI[1]]])
    return GammaRepresentation("chiral", np.stack([g0, *gi]), g5, c)


def _dirac_standard_gammas() -> tuple[np.ndarray, np.ndarray]:
    g0 = np.block([[_I2, _Z2], [_Z2, -_I2]])
    gi = [np.block([[_Z2, s], [-s, _Z2]]) for s in PAULI]
    gammas = np.stack([g0, *gi])
    return gammas, 1j * gammas[0] @ gammas[1] @ gammas[2] @ gammas[3]


def _majorana_gammas() -> tuple[np.ndarray, np.ndarray]:
    # unitary similarity of the Dirac set that makes every gamma^mu purely imaginary
    gd, _ = _dirac_standard_gammas()
    u = gd[0] @ (np.eye(4) + gd[2]) / np.sqrt(2.0)
    gammas = np.stack([u @ g @ u.conj().T for g in gd])
    return gammas, 1j * gammas[0] @ gammas[1] @ gammas[2] @ gammas[3]


BUILTIN_NAMES = ("chiral", "dirac-standard", "majorana")


def builtin_representation(name: str) -> GammaRepresentation:
    if name == "chiral":
        return _chiral()
    if name == "dirac-standard":
        gammas, g5 = _dirac_standard_gammas()
    elif name == "majorana":
        gammas, g5 = _majorana_gammas()
    else:
        raise RepresentationError(f"unknown representation {name!r}; known: {', '.join(BUILTIN_NAMES)}")
    rep = GammaRepresentation(name, gammas, g5)
    return rep.with_c(find_charge_conjugation(rep))


def build_sigma(rep: GammaRepresentation, mu: int, nu: int) -> np.ndarray:
    for idx in (mu, nu):
        if not (isinstance(idx, (int, np.integer)) and 0 <= idx <= 3):
            raise IndexError(f"Lorentz index must be in 0..3, got {idx!r}")
    gm, gn = rep.gammas[mu], rep.gammas[nu]
    return 0.5j * (gm @ gn - gn @ gm)


@dataclass
class ValidationReport:
    representation: str
    deviations: dict[str, float] = field(default_factory=dict)
    tol: float = ALGEBRA_TOL

    @property
    def failures(self) -> list[str]:
        return [k for k, v in self.deviations.items() if not v <= self.tol]

    @property
    def passed(self) -> bool:
        return not self.failures

    def __str__(self) -> str:
        lines = [f"representation {self.representation}"]
        for k, v in self.deviations.items():
            lines.append(f"  {'ok  ' if v <= self.tol else 'FAIL'} {k:<28s} {v:.3e}")
        return "\n".join(lines)


def _maxabs(a) -> float:
    return float(np.max(np.abs(a)))


def validate_representation(rep: GammaRepresentation, tol: float = ALGEBRA_TOL) -> ValidationReport:
    g, g5 = rep.gammas, rep.gamma5
    eye = np.eye(4)
    dev: dict[str, float] = {}
    dev["clifford"] = max(
        _maxabs(g[m] @ g[n] + g[n] @ g[m] - 2 * METRIC[m, n] * eye) for m in range(4) for n in range(4)
    )
    dev["hermiticity_gamma"] = max(_maxabs(g[m].conj().T - g[0] @ g[m] @ g[0]) for m in range(4))
    dev["hermiticity_gamma5"] = _maxabs(g5.conj().T - g5)
    dev["gamma5_anticommutes"] = max(_maxabs(g5 @ g[m] + g[m] @ g5) for m in range(4))
    dev["gamma5_squared"] = _maxabs(g5 @ g5 - eye)
    if rep.c_matrix is not None:
        c = rep.c_matrix
        cinv = np.linalg.inv(c)
        sig = rep.sigmas()
        dev["c_gamma"] = max(_maxabs(c @ g[m] @ cinv + g[m].T) for m in range(4))
        dev["c_gamma5"] = _maxabs(c @ g5 @ cinv - g5.T)
        dev["c_sigma"] = max(
            _maxabs(c @ sig[m, n] @ cinv + sig[m, n].T) for m in range(4) for n in range(4)
        )
        dev["c_transpose_antisymmetric"] = _maxabs(c.T + c)
        dev["c_dagger_antihermitian"] = _maxabs(c.conj().T + c)
        dev["c_unitary"] = max(_maxabs(c @ c.conj().T - eye), _maxabs(c.conj().T @ c - eye))
        dev["c_squared"] = _maxabs(c @ c + eye)
    return ValidationReport(rep.name, dev, tol)


def _c_sign_key(c: np.ndarray) -> bool:
    flat = c.ravel()
    for z in flat:
        if abs(z) > ALGEBRA_TOL:
            ang = np.angle(complex(round(z.real, 14), round(z.imag, 14)))
            return -np.pi / 2 < ang <= np.pi / 2
    return False


def find_charge_conjugation(rep: GammaRepresentation) -> np.ndarray:
    """Solve C gamma^mu + gamma^muT C = 0 for the charge-conjugation matrix.

    The solution space must be one-dimensional. The free complex factor is
    fixed by unitarity and C^2 = -I, and the remaining sign by requiring the
    first nonzero entry (row-major) to have argument in (-pi/2, pi/2].
    """
    pre = validate_representation(GammaRepresentation(rep.name, rep.gammas, rep.gamma5))
    if not pre.passed:
        raise RepresentationError(f"gamma matrices fail {pre.failures}; no charge conjugation sought")
    eye = np.eye(4)
    # row-major vec: vec(C G) = kron(I, G^T) vec(C), vec(G^T C) = kron(G^T, I) vec(C)
    system = np.vstack([np.kron(eye, g.T) + np.kron(g.T, eye) for g in rep.gammas])
    _, sv, vh = np.linalg.svd(system)
    null = np.sum(sv <= 1e-10 * max(sv[0], 1.0))
    if null != 1:
        raise RepresentationError(f"charge-conjugation null space has dimension {null}, expected 1")
    c = vh[-1].conj().reshape(4, 4)
    gram = c @ c.conj().T
    c = c / np.sqrt(np.real(np.trace(gram)) / 4.0)
    sq = c @ c
    lam = np.trace(sq) / 4.0
    if _maxabs(sq - lam * eye) > 1e-10:
        raise RepresentationError("no phase choice achieves C^2 = -I")
    c = c * np.sqrt(-1.0 / lam)
    c = np.where(np.abs(c.real) < 1e-13, 0.0, c.real) + 1j * np.where(np.abs(c.imag) < 1e-13, 0.0, c.imag)
    if not _c_sign_key(c):
        c = -c
    report = validate_representation(rep.with_c(c))
    if not report.passed:
        raise RepresentationError(f"charge-conjugation candidate fails {report.failures}")
    return c


def dirac_adjoint(chi, rep: GammaRepresentation) -> np.ndarray:
    return np.einsum("...i,ij->...j", np.conj(chi), rep.gammas[0])


def charge_conjugate(chi, rep: GammaRepresentation) -> np.ndarray:
    return np.einsum("ij,...j->...i", rep.C, dirac_adjoint(chi, rep))


def pair(cospinor, spinor) -> np.ndarray:
    """Row-column contraction of a co-spinor with a spinor."""
    return np.einsum("...i,...i->...", cospinor, spinor)


def sandwich(cospinor, matrix, spinor) -> np.ndarray:
    return np.einsum("...i,...ij,...j->...", cospinor, matrix, spinor)


def _check_sign(s) -> int:
    if s not in (1, -1):
        raise ValueError(f"chirality sign must be +1 or -1, got {s!r}")
    return int(s)


def chiral_projector(s: int, rep: GammaRepresentation) -> np.ndarray:
    s = _check_sign(s)
    return 0.5 * (np.eye(4) + s * rep.gamma5)


def chiral_project(psi, s: int, rep: GammaRepresentation) -> np.ndarray:
    return np.einsum("ij,...j->...i", chiral_projector(s, rep), psi)


@dataclass(frozen=True, eq=False)
class ChiralBasis:
    xi: np.ndarray
    eta: np.ndarray
    sign: int


def _basis_problems(rep, xi, eta, s) -> list[str]:
    problems = []
    for label, v in (("xi", xi), ("eta", eta)):
        if _maxabs(rep.gamma5 @ v - s * v) > ALGEBRA_TOL * max(1.0, _maxabs(v)):
            problems.append(f"{label} is not a gamma5 eigenvector with eigenvalue {s:+d}")
    if not problems:
        k = pair(dirac_adjoint(xi, rep), charge_conjugate(eta, rep))
        if abs(k) < INDEPENDENCE_FLOOR:
            problems.append(f"xi and eta are not independent (|xi_bar eta^c| = {abs(k):.3e})")
    return problems


def make_chiral_basis(rep: GammaRepresentation, s: int = -1,
                      override: tuple[Iterable, Iterable] | None = None) -> ChiralBasis:
    s = _check_sign(s)
    if override is not None:
        xi, eta = (np.asarray(v, dtype=complex).reshape(4) for v in override)
        problems = _basis_problems(rep, xi, eta, s)
        if problems:
            raise BasisError("; ".join(problems))
        return ChiralBasis(_frozen(xi), _frozen(eta), s)
    proj = chiral_projector(s, rep)
    picked: list[np.ndarray] = []
    for e in np.eye(4, dtype=complex):
        v = proj @ e
        for u in picked:
            v = v - np.vdot(u, v) * u
        n = np.linalg.norm(v)
        if n > 1e-10:
            picked.append(v / n)
        if len(picked) == 2:
            break
    xi, eta = picked
    problems = _basis_problems(rep, xi, eta, s)
    if problems:
        raise BasisError("; ".join(problems))
    return ChiralBasis(_frozen(xi), _frozen(eta), s)


class CoefficientQuadruple(NamedTuple):
    a: complex | np.ndarray
    b: complex | np.ndarray
    a_prime: complex | np.ndarray
    b_prime: complex | np.ndarray


def coefficient_quadruple(basis: ChiralBasis, f_matrix, rep: GammaRepresentation) -> CoefficientQuadruple:
    """Expansion coefficients of xi_bar F and eta_bar F on (xi_bar, eta_bar).

    ``f_matrix`` may carry leading axes (a grid of field matrices); the
    coefficients are returned with the same leading shape.
    """
    xb, eb = dirac_adjoint(basis.xi, rep), dirac_adjoint(basis.eta, rep)
    xc, ec = charge_conjugate(basis.xi, rep), charge_conjugate(basis.eta, rep)
    k_xe = pair(xb, ec)
    k_ex = pair(eb, xc)
    if abs(k_xe) < INDEPENDENCE_FLOOR:
        raise BasisError(f"|xi_bar eta^c| = {abs(k_xe):.3e} below independence floor")
    f = np.asarray(f_matrix, dtype=complex)
    a = sandwich(xb, f, ec) / k_xe
    b = sandwich(xb, f, xc) / k_ex
    a_prime = sandwich(eb, f, ec) / k_xe
    b_prime = sandwich(eb, f, xc) / k_ex
    defect = _maxabs(np.asarray(b_prime + a))
    scale = max(1.0, _maxabs(f))
    if defect > ALGEBRA_TOL * scale:
        logger.warning("b' + a = %.3e exceeds tolerance; C may violate its defining relations", defect)
    return CoefficientQuadruple(a, b, a_prime, b_prime)


def lorentz_spinor_map(omega, rep: GammaRepresentation) -> np.ndarray:
    """Spinor matrix exp(-(i/4) omega_{mu nu} sigma^{mu nu}).

    ``omega`` holds the vector-representation generator omega^mu_nu; its
    index-lowered form must be antisymmetric.
    """
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (4, 4):
        raise ValueError("omega must be a 4x4 array")
    low = METRIC @ omega
    if np.max(np.abs(low + low.T)) > ALGEBRA_TOL * max(1.0, np.max(np.abs(low))):
        raise ValueError("omega with lowered index is not antisymmetric")
    gen = np.einsum("mn,mnab->ab", low, rep.sigmas())
    return scipy.linalg.expm(-0.25j * gen)


def vector_lorentz_map(omega) -> np.ndarray:
    """Vector-representation transform L^mu_nu = exp(omega)^mu_nu."""
    return scipy.linalg.expm(np.asarray(omega, dtype=float))

"""Analytic electromagnetic potentials, field tensor and spinor-space field matrix.

Potentials are stored covariantly, A_mu, and evaluated on arrays of points
with shape (..., 4). Derivatives are exact: ``d_a(x)[..., mu, nu]`` is
the partial of A_mu with respect to x^nu.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .clifford import METRIC, GammaRepresentation

_G = np.diag(METRIC)


class FieldConfigError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PotentialField:
    name: str
    a_mu: Callable[[np.ndarray], np.ndarray]
    d_a: Callable[[np.ndarray], np.ndarray]
    params: Mapping[str, float] = field(default_factory=dict)

    def __call__(self, x) -> np.ndarray:
        return self.a_mu(np.asarray(x, dtype=float))

    def derivatives(self, x) -> np.ndarray:
        return self.d_a(np.asarray(x, dtype=float))

    def config(self) -> dict:
        return {"name": self.name, "params": dict(self.params)}


@dataclass(frozen=True, eq=False)
class FieldTensor:
    """Contravariant F^{mu nu}, possibly with leading grid axes."""

    f_upup: np.ndarray

    @property
    def f_downdown(self) -> np.ndarray:
        return self.f_upup * _G[:, None] * _G[None, :]

    @property
    def E(self) -> np.ndarray:
        return -self.f_upup[..., 0, 1:]

    @property
    def H(self) -> np.ndarray:
        f = self.f_upup
        return np.stack([-f[..., 2, 3], f[..., 1, 3], -f[..., 1, 2]], axis=-1)

    @classmethod
    def from_e_h(cls, e, h) -> "FieldTensor":
        e = np.asarray(e, dtype=float)
        h = np.asarray(h, dtype=float)
        f = np.zeros(e.shape[:-1] + (4, 4))
        f[..., 0, 1:] = -e
        f[..., 1:, 0] = e
        f[..., 1, 2], f[..., 2, 1] = -h[..., 2], h[..., 2]
        f[..., 1, 3], f[..., 3, 1] = h[..., 1], -h[..., 1]
        f[..., 2, 3], f[..., 3, 2] = -h[..., 0], h[..., 0]
        return cls(f)


def _zeros_like_points(x, tail=(4,)):
    return np.zeros(x.shape[:-1] + tail)


def _zero(params):
    return (lambda x: _zeros_like_points(x)), (lambda x: _zeros_like_points(x, (4, 4)))


def _constant_e(params):
    e = params["E"]
    axis = int(params.get("axis", 1))
    temporal = bool(params.get("gauge", 0))
    if axis not in (1, 2, 3):
        raise FieldConfigError("constant-E axis must be 1, 2 or 3")

    def a_mu(x):
        a = _zeros_like_points(x)
        if temporal:
            a[..., axis] = e * x[..., 0]
        else:
            a[..., 0] = -e * x[..., axis]
        return a

    def d_a(x):
        d = _zeros_like_points(x, (4, 4))
        if temporal:
            d[..., axis, 0] = e
        else:
            d[..., 0, axis] = -e
        return d

    return a_mu, d_a


def _constant_h(params):
    h = params["H"]
    axis = int(params.get("axis", 3))
    if axis not in (1, 2, 3):
        raise FieldConfigError("constant-H axis must be 1, 2 or 3")
    # cyclic (i, j, axis); A^j = H x^i, i.e. covariant A_j = -H x^i
    i = axis % 3 + 1
    j = i % 3 + 1

    def a_mu(x):
        a = _zeros_like_points(x)
        a[..., j] = -h * x[..., i]
        return a

    def d_a(x):
        d = _zeros_like_points(x, (4, 4))
        d[..., j, i] = -h
        return d

    return a_mu, d_a


def _crossed_constant(params):
    ea, ed = _constant_e({"E": params["E"], "axis": 1, "gauge": params.get("gauge", 0)})
    ha, hd = _constant_h({"H": params["H"], "axis": 3})
    return (lambda x: ea(x) + ha(x)), (lambda x: ed(x) + hd(x))


def _plane_wave(params):
    eps = params["amplitude"]
    omega = params["omega"]
    k = params.get("k", omega)
    ell = params.get("ellipticity", 1.0)
    phase0 = params.get("phase", 0.0)

    # propagation along x^1, transverse covariant components A_2, A_3
    def theta(x):
        return omega * x[..., 0] - k * x[..., 1] + phase0

    def a_mu(x):
        th = theta(x)
        a = _zeros_like_points(x)
        a[..., 2] = eps * np.cos(th)
        a[..., 3] = eps * ell * np.sin(th)
        return a

    def d_a(x):
        th = theta(x)
        d = _zeros_like_points(x, (4, 4))
        s, c = np.sin(th), np.cos(th)
        d[..., 2, 0] = -eps * omega * s
        d[..., 2, 1] = eps * k * s
        d[..., 3, 0] = eps * ell * omega * c
        d[..., 3, 1] = -eps * ell * k * c
        return d

    return a_mu, d_a


def _polynomial(params):
    c = np.array([params.get(f"c{m}", 0.0) for m in range(4)])
    lin = np.array([[params.get(f"L{m}{n}", 0.0) for n in range(4)] for m in range(4)])
    quad = np.array([[params.get(f"Q{m}{n}", 0.0) for n in range(4)] for m in range(4)])

    def a_mu(x):
        return c + np.einsum("mn,...n->...m", lin, x) + 0.5 * np.einsum("mn,...n->...m", quad, x * x)

    def d_a(x):
        return lin + quad * x[..., None, :]

    return a_mu, d_a


_POLY_KEYS = {f"c{m}" for m in range(4)} | {f"{p}{m}{n}" for p in "LQ" for m in range(4) for n in range(4)}

# name -> (builder, required params, optional params, description)
CATALOG: dict[str, tuple] = {
    "zero": (_zero, set(), set(), "A_mu = 0. E = H = 0."),
    "constant-E": (
        _constant_e, {"E"}, {"axis", "gauge"},
        "Uniform electric field E along x^axis (axis 1..3, default 1).\n"
        "gauge=0 (default): A_0 = -E x^axis.\n"
        "gauge=1 (temporal): A_axis = E x^0; spatially uniform, usable on periodic grids.",
    ),
    "constant-H": (
        _constant_h, {"H"}, {"axis"},
        "Uniform magnetic field H along x^axis (default 3).\n"
        "For axis 3: A^2 = H x^1, i.e. covariant A_2 = -H x^1 (cyclic for other axes).",
    ),
    "crossed-constant": (
        _crossed_constant, {"E", "H"}, {"gauge"},
        "E along x^1 (constant-E gauges) superposed with H along x^3 (constant-H gauge).",
    ),
    "plane-wave": (
        _plane_wave, {"amplitude", "omega"}, {"k", "ellipticity", "phase"},
        "theta = omega x^0 - k x^1 + phase, k defaults to omega (null wave).\n"
        "A_2 = amplitude cos(theta), A_3 = amplitude ellipticity sin(theta) (default 1: circular).\n"
        "Transverse polarisation, so A^mu_{,mu} = 0 (Lorenz gauge).",
    ),
    "polynomial-test": (
        _polynomial, set(), _POLY_KEYS,
        "A_mu = c_mu + L_{mu nu} x^nu + 1/2 Q_{mu nu} (x^nu)^2; keys c<m>, L<m><n>, Q<m><n>, all default 0.",
    ),
}


def catalog(name: str, params: Mapping[str, float] | None = None) -> PotentialField:
    if name not in CATALOG:
        raise FieldConfigError(f"unknown field {name!r}; known: {', '.join(CATALOG)}")
    builder, required, optional, _ = CATALOG[name]
    params = dict(params or {})
    missing = required - set(params)
    if missing:
        raise FieldConfigError(f"field {name!r} missing params {sorted(missing)}")
    unknown = set(params) - required - optional
    if unknown:
        raise FieldConfigError(f"field {name!r} does not take params {sorted(unknown)}")
    params = {k: float(v) for k, v in params.items()}
    a_mu, d_a = builder(params)
    return PotentialField(name, a_mu, d_a, params)


def from_config(cfg: Mapping) -> PotentialField:
    extra = set(cfg) - {"name", "params"}
    if extra or "name" not in cfg:
        raise FieldConfigError(f"field config needs 'name' and optional 'params'; got keys {sorted(cfg)}")
    return catalog(cfg["name"], cfg.get("params", {}))


def describe(name: str) -> str:
    if name not in CATALOG:
        raise FieldConfigError(f"unknown field {name!r}; known: {', '.join(CATALOG)}")
    _, required, optional, text = CATALOG[name]
    opt = ", ".join(sorted(optional)) if len(optional) < 10 else "see below"
    return (f"{name}\n  required params: {', '.join(sorted(required)) or '-'}\n"
            f"  optional params: {opt or '-'}\n  " + text.replace("\n", "\n  "))


def field_tensor(pot: PotentialField, x) -> FieldTensor:
    d = pot.derivatives(x)
    # F_{mu nu} = d_mu A_nu - d_nu A_mu with d[..., nu, mu] = d_mu A_nu
    f_low = np.swapaxes(d, -1, -2) - d
    return FieldTensor(f_low * _G[:, None] * _G[None, :])


def field_matrix(tensor: FieldTensor, rep: GammaRepresentation) -> np.ndarray:
    """F = 1/2 F_{nu mu} sigma^{nu mu}, with leading grid axes preserved."""
    return 0.5 * np.einsum("...nm,nmab->...ab", tensor.f_downdown, rep.sigmas())


def divergence_a(pot: PotentialField, x) -> np.ndarray:
    d = pot.derivatives(x)
    return np.einsum("m,...mm->...", _G, d)


def raise_index(a_low) -> np.ndarray:
    return np.asarray(a_low) * _G

"""Spacetime grids, central-difference stencils and the differential operators.

Grid fields carry a ``valid_margin`` per axis. On ``trim`` axes each
stencil application widens the margin by one point; everything outside the
valid interior is stored as NaN. Points inside the interior may also be NaN:
that is how masked points (division by a vanishing coefficient) are marked,
and because stencils propagate NaN, any point whose stencil touches a
masked point becomes masked itself.
"""
from __future__ import annotations

import csv
import json
import struct
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Protocol, Sequence

import numpy as np

from .clifford import METRIC, GammaRepresentation, chiral_project, dirac_adjoint
from .emfield import PotentialField, divergence_a, field_matrix, field_tensor

PERIODIC = "periodic"
TRIM = "trim"
SINGULARITY_REL_FLOOR = 1e-6
SINGULARITY_ABS_FLOOR = 1e-12
MIN_COVERAGE = 0.9

_G = np.diag(METRIC)

Margin = tuple[tuple[int, int], tuple[int, int], tuple[int, int], tuple[int, int]]
NO_MARGIN: Margin = ((0, 0), (0, 0), (0, 0), (0, 0))


class MarginError(ValueError):
    """A stencil needs more valid interior than a trim axis has left."""


class DegenerateFieldError(ValueError):
    """The coefficient xi_bar F xi^c vanishes on the whole valid interior."""


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SpacetimeGrid:
    extents: tuple[int, int, int, int]
    spacings: tuple[float, float, float, float]
    origin: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    boundary: tuple[str, str, str, str] = (TRIM, PERIODIC, PERIODIC, PERIODIC)

    def __post_init__(self):
        object.__setattr__(self, "extents", tuple(int(n) for n in self.extents))
        object.__setattr__(self, "spacings", tuple(float(h) for h in self.spacings))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        object.__setattr__(self, "boundary", tuple(self.boundary))
        if not all(len(t) == 4 for t in (self.extents, self.spacings, self.origin, self.boundary)):
            raise ValueError("grid extents, spacings, origin and boundary need 4 entries each")
        if any(n < 1 for n in self.extents):
            raise ValueError("grid extents must be positive")
        if any(not h > 0 for h in self.spacings):
            raise ValueError("grid spacings must be positive")
        if any(b not in (PERIODIC, TRIM) for b in self.boundary):
            raise ValueError(f"boundary entries must be {PERIODIC!r} or {TRIM!r}")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.extents

    def axis_coords(self, mu: int) -> np.ndarray:
        return self.origin[mu] + self.spacings[mu] * np.arange(self.extents[mu])

    @cached_property
    def coords(self) -> np.ndarray:
        """Array of shape extents + (4,) holding x^mu at every grid point."""
        mesh = np.meshgrid(*(self.axis_coords(m) for m in range(4)), indexing="ij")
        out = np.stack(mesh, axis=-1)
        out.flags.writeable = False
        return out

    def active_axes(self) -> list[int]:
        return [m for m in range(4) if self.extents[m] > 1]

    def refined(self, factor: int = 2) -> "SpacetimeGrid":
        """Same physical box with every active spacing divided by ``factor``."""
        ext, sp = [], []
        for m in range(4):
            n, h = self.extents[m], self.spacings[m]
            if n == 1:
                ext.append(1)
                sp.append(h)
            elif self.boundary[m] == PERIODIC:
                ext.append(n * factor)
                sp.append(h / factor)
            else:
                ext.append((n - 1) * factor + 1)
                sp.append(h / factor)
        return SpacetimeGrid(tuple(ext), tuple(sp), self.origin, self.boundary)

    def to_dict(self) -> dict:
        return {"extents": list(self.extents), "spacings": list(self.spacings),
                "origin": list(self.origin), "boundary": list(self.boundary)}

    @classmethod
    def from_dict(cls, d: dict) -> "SpacetimeGrid":
        return cls(tuple(d["extents"]), tuple(d["spacings"]), tuple(d["origin"]), tuple(d["boundary"]))


class _GridField:
    tail: tuple[int, ...] = ()
    kind = ""

    def __init__(self, grid: SpacetimeGrid, values, valid_margin: Margin = NO_MARGIN):
        values = np.asarray(values)
        if values.dtype.kind not in "fc":
            values = values.astype(complex)
        if values.shape != grid.extents + self.tail:
            raise ValueError(f"{self.kind} field values must have shape {grid.extents + self.tail}, got {values.shape}")
        margin = tuple((int(lo), int(hi)) for lo, hi in valid_margin)
        if any(lo < 0 or hi < 0 for lo, hi in margin):
            raise ValueError("margins must be nonnegative")
        if any(lo + hi >= n for (lo, hi), n in zip(margin, grid.extents)):
            raise MarginError("valid interior is empty")
        if any(lo or hi for lo, hi in margin):
            outside = ~_region(grid.extents, margin)
            if outside.any():
                values = values.copy()
                values[outside] = np.nan
        values.flags.writeable = False
        self.grid = grid
        self.values = values
        self.valid_margin: Margin = margin

    def __repr__(self):
        return f"{type(self).__name__}(extents={self.grid.extents}, margin={self.valid_margin})"

    def like(self, values, margin: Margin | None = None):
        return type(self)(self.grid, values, self.valid_margin if margin is None else margin)

    @property
    def valid_slices(self) -> tuple[slice, ...]:
        return tuple(slice(lo, n - hi) for (lo, hi), n in zip(self.valid_margin, self.grid.extents))

    @property
    def valid_region(self) -> np.ndarray:
        return _region(self.grid.extents, self.valid_margin)

    @property
    def mask(self) -> np.ndarray:
        """Masked points: inside the valid interior but not finite."""
        finite = np.isfinite(self.values)
        if self.tail:
            finite = finite.all(axis=-1)
        return self.valid_region & ~finite

    @property
    def coverage(self) -> float:
        region = self.valid_region
        return 1.0 - self.mask.sum() / region.sum()

    def max_norm(self, window: dict[int, tuple[float, float]] | None = None) -> float:
        """Max |value| over unmasked valid points, optionally within a coordinate window."""
        keep = self.valid_region & ~self.mask
        if window:
            x = self.grid.coords
            for axis, (lo, hi) in window.items():
                keep &= (x[..., axis] >= lo - 1e-12) & (x[..., axis] <= hi + 1e-12)
        a = np.abs(self.values)
        if self.tail:
            a = a.max(axis=-1)
        sel = a[keep]
        return float(sel.max()) if sel.size else float("nan")

    def _combine(self, other, op):
        if isinstance(other, _GridField):
            if other.grid != self.grid or type(other) is not type(self):
                raise ValueError("fields must share grid and kind")
            return self.like(op(self.values, other.values), merge_margins(self.valid_margin, other.valid_margin))
        return self.like(op(self.values, other))

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __neg__(self):
        return self.like(-self.values)

    def __mul__(self, scalar):
        if isinstance(scalar, _GridField):
            return NotImplemented
        return self.like(self.values * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self.like(self.values / scalar)

    def scaled(self, coef):
        """Pointwise product with a grid-shaped coefficient array."""
        coef = np.asarray(coef)
        return self.like(self.values * _bc(coef, self))


class ScalarGridField(_GridField):
    kind = "scalar"


class SpinorGridField(_GridField):
    tail = (4,)
    kind = "spinor"


def _region(extents, margin) -> np.ndarray:
    region = np.zeros(extents, dtype=bool)
    region[tuple(slice(lo, n - hi) for (lo, hi), n in zip(margin, extents))] = True
    return region


def merge_margins(*margins: Margin) -> Margin:
    return tuple((max(m[a][0] for m in margins), max(m[a][1] for m in margins)) for a in range(4))


def _bc(coef: np.ndarray, f: _GridField) -> np.ndarray:
    return coef.reshape(coef.shape + (1,) * len(f.tail)) if f.tail else coef


def _apply_matrix(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    if m.ndim == 2:
        return np.einsum("ab,...b->...a", m, v)
    return np.einsum("...ab,...b->...a", m, v)


def derivative(f: _GridField, axis: int, order: int = 1) -> _GridField:
    """Second-order central difference along ``axis`` (order 1 or 2)."""
    if order not in (1, 2):
        raise ValueError("derivative order must be 1 or 2")
    if axis not in range(4):
        raise ValueError(f"axis must be 0..3, got {axis!r}")
    g = f.grid
    n, h = g.extents[axis], g.spacings[axis]
    if n == 1:
        return f.like(f.values * 0)
    margin = list(f.valid_margin)
    if g.boundary[axis] == TRIM:
        lo, hi = margin[axis]
        if lo + hi + 2 >= n:
            raise MarginError(f"axis {axis} has {n - lo - hi} valid points, too few for another stencil")
        margin[axis] = (lo + 1, hi + 1)
    v = f.values
    fwd = np.roll(v, -1, axis=axis)
    bwd = np.roll(v, 1, axis=axis)
    if order == 1:
        out = (fwd - bwd) / (2.0 * h)
    else:
        out = (fwd - 2.0 * v + bwd) / (h * h)
    return f.like(out, tuple(margin))


def require_inactive_independent(grid: SpacetimeGrid, pot: PotentialField) -> None:
    """Stencils treat d_mu as zero along size-1 axes; the potential must agree."""
    inactive = [m for m in range(4) if grid.extents[m] == 1]
    if not inactive:
        return
    d = pot.derivatives(grid.coords)
    scale = max(1.0, float(np.abs(d).max()))
    for m in inactive:
        if np.abs(d[..., m]).max() > 1e-12 * scale:
            raise ValueError(f"potential {pot.name!r} varies along inactive axis {m}")


def dirac_apply(psi: SpinorGridField, pot: PotentialField, rep: GammaRepresentation) -> SpinorGridField:
    """(i gamma^mu d_mu - A_mu gamma^mu) psi."""
    require_inactive_independent(psi.grid, pot)
    x = psi.grid.coords
    a = pot(x)
    acc = -_apply_matrix(np.einsum("...m,mab->...ab", a, rep.gammas), psi.values)
    margins = [psi.valid_margin]
    for mu in psi.grid.active_axes():
        d = derivative(psi, mu, 1)
        acc = acc + 1j * _apply_matrix(rep.gammas[mu], d.values)
        margins.append(d.valid_margin)
    return SpinorGridField(psi.grid, acc, merge_margins(*margins))


def dirac_residual(psi: SpinorGridField, pot: PotentialField, rep: GammaRepresentation) -> SpinorGridField:
    return dirac_apply(psi, pot, rep) - psi


def box_prime_apply(u: _GridField, pot: PotentialField) -> _GridField:
    """(d^mu d_mu + 2i A^mu d_mu + i A^mu_{,mu} - A^mu A_mu + 1) u."""
    require_inactive_independent(u.grid, pot)
    x = u.grid.coords
    a = pot(x)
    a_up = a * _G
    zeroth = 1j * divergence_a(pot, x) - np.sum(a_up * a, axis=-1) + 1.0
    acc = _bc(zeroth, u) * u.values
    margins = [u.valid_margin]
    for mu in u.grid.active_axes():
        d1 = derivative(u, mu, 1)
        d2 = derivative(u, mu, 2)
        acc = acc + _G[mu] * d2.values + 2j * _bc(a_up[..., mu], u) * d1.values
        margins.append(d2.valid_margin)
    return u.like(acc, merge_margins(*margins))


def field_matrix_on_grid(grid: SpacetimeGrid, pot: PotentialField, rep: GammaRepresentation) -> np.ndarray:
    return field_matrix(field_tensor(pot, grid.coords), rep)


def squared_identity_residual(phi: SpinorGridField, pot: PotentialField,
                              rep: GammaRepresentation) -> ScalarGridField:
    """Pointwise max-abs of D(D phi) - phi + (box' + F) phi, D = i dslash - Aslash."""
    dd = dirac_apply(dirac_apply(phi, pot, rep), pot, rep)
    fm = field_matrix_on_grid(phi.grid, pot, rep)
    bp = box_prime_apply(phi, pot)
    r = dd - phi + bp + phi.like(_apply_matrix(fm, phi.values))
    return ScalarGridField(phi.grid, np.abs(r.values).max(axis=-1), r.valid_margin)


class CoefficientSource(Protocol):
    def coefficient_fields(self, grid: SpacetimeGrid) -> tuple[np.ndarray, np.ndarray, np.ndarray]: ...


def singular_mask(b: np.ndarray, region: np.ndarray | None = None) -> np.ndarray:
    mag = np.abs(b)
    ref = mag[region].max() if region is not None and region.any() else mag.max()
    return mag < max(SINGULARITY_REL_FLOOR * ref, SINGULARITY_ABS_FLOOR)


def masked_divide(f: ScalarGridField, b: np.ndarray) -> ScalarGridField:
    """f / b pointwise, masking (NaN) points where |b| is below the singularity floor.

    Raises DegenerateFieldError when nothing in the valid interior survives.
    """
    region = f.valid_region
    bad = singular_mask(b, region)
    if not (region & ~bad).any():
        raise DegenerateFieldError(
            "xi_bar F xi^c vanishes identically on the grid; this field is degenerate for the chosen xi"
        )
    safe = np.where(bad, 1.0, b)
    out = np.where(bad, np.nan, f.values / safe)
    return f.like(out)


def fourth_order_apply(phi: ScalarGridField, ctx: CoefficientSource,
                       pot: PotentialField | None = None) -> ScalarGridField:
    """((box' - a) b^{-1} (box' + a) - a') phi with masked division by b."""
    pot = ctx.field if pot is None else pot
    a, b, a_prime = ctx.coefficient_fields(phi.grid)
    v = box_prime_apply(phi, pot) + phi.scaled(a)
    w = masked_divide(v, b)
    return box_prime_apply(w, pot) - w.scaled(a) - phi.scaled(a_prime)


def current(psi: SpinorGridField, rep: GammaRepresentation) -> list[ScalarGridField]:
    """j^mu = psi_bar gamma^mu psi as four real scalar fields."""
    bar = dirac_adjoint(psi.values, rep)
    out = []
    for mu in range(4):
        j = np.einsum("...a,ab,...b->...", bar, rep.gammas[mu], psi.values)
        out.append(ScalarGridField(psi.grid, j.real, psi.valid_margin))
    return out


def current_split(psi: SpinorGridField, rep: GammaRepresentation) -> dict[str, np.ndarray]:
    """Chiral pieces of the current, each of shape extents + (4,).

    ``plus``/``minus`` are psi_bar_pm gamma^mu psi_pm; ``cross`` is
    psi_bar_+ gamma^mu psi_- (identically zero in exact arithmetic).
    """
    p = chiral_project(psi.values, 1, rep)
    m = chiral_project(psi.values, -1, rep)
    pb, mb = dirac_adjoint(p, rep), dirac_adjoint(m, rep)
    bil = lambda l, r: np.einsum("...a,mab,...b->...m", l, rep.gammas, r)
    return {"plus": bil(pb, p), "minus": bil(mb, m), "cross": bil(pb, m)}


def four_divergence(j: Sequence[ScalarGridField]) -> ScalarGridField:
    parts = [derivative(j[mu], mu, 1) for mu in range(4)]
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    return total


def convergence_order(levels: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of log(norm) against log(h)."""
    if len(levels) < 3:
        raise ValueError("need at least three refinement levels")
    hs = np.array([h for h, _ in levels], dtype=float)
    ns = np.array([r for _, r in levels], dtype=float)
    order = np.argsort(-hs)
    hs, ns = hs[order], ns[order]
    if not np.all(np.diff(ns) < 0):
        warnings.warn(f"residual norms are not monotonically decreasing: {ns.tolist()}", ConvergenceWarning)
    slope, _ = np.polyfit(np.log(hs), np.log(ns), 1)
    return float(slope)


# -- dump format -----------------------------------------------------------

_HEADER = struct.Struct("<Q")


def dump_field(f: _GridField, path) -> None:
    """Length-prefixed JSON header, then little-endian row-major (re, im) float64 pairs."""
    header = {"format": "diracone-grid", "version": 1, "kind": f.kind, **f.grid.to_dict(),
              "margins": [list(m) for m in f.valid_margin]}
    raw = json.dumps(header, sort_keys=True).encode()
    data = np.ascontiguousarray(f.values, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(len(raw)))
        fh.write(raw)
        fh.write(data.tobytes(order="C"))


def load_field(path) -> _GridField:
    with open(path, "rb") as fh:
        (n,) = _HEADER.unpack(fh.read(_HEADER.size))
        header = json.loads(fh.read(n))
        payload = fh.read()
    if header.get("format") != "diracone-grid":
        raise ValueError(f"{path}: not a grid dump")
    grid = SpacetimeGrid.from_dict(header)
    cls = {"scalar": ScalarGridField, "spinor": SpinorGridField}[header["kind"]]
    values = np.frombuffer(payload, dtype="<c16").reshape(grid.extents + cls.tail).astype(complex)
    return cls(grid, values, tuple(tuple(m) for m in header["margins"]))


def export_csv(f: _GridField, path, fixed: dict[int, int] | None = None) -> int:
    """Write a 1D/2D slice of the valid interior as CSV; returns the number of rows."""
    fixed = dict(fixed or {})
    free = [m for m in range(4) if f.grid.extents[m] > 1 and m not in fixed]
    if len(free) > 2:
        raise ValueError(f"slice has {len(free)} free axes; fix some with `fixed`")
    index = []
    for m in range(4):
        if m in fixed:
            index.append(slice(fixed[m], fixed[m] + 1))
        else:
            index.append(f.valid_slices[m])
    index = tuple(index)
    x = f.grid.coords[index].reshape(-1, 4)
    v = f.values[index].reshape(x.shape[0], -1)
    ncomp = v.shape[1]
    cols = ["x0", "x1", "x2", "x3"]
    cols += [f"{p}{c}" for c in range(ncomp) for p in ("re", "im")] if f.tail else ["re", "im"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for xi, vi in zip(x, v):
            row = [repr(float(c)) for c in xi]
            for z in vi:
                row += [repr(float(np.real(z))), repr(float(np.imag(z)))]
            w.writerow(row)
    return x.shape[0]

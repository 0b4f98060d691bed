import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from diracone.clifford import build_sigma, builtin_representation
from diracone.emfield import (
    CATALOG,
    FieldConfigError,
    FieldTensor,
    catalog,
    describe,
    divergence_a,
    field_matrix,
    field_tensor,
    from_config,
    raise_index,
)

X = sp.symbols("x0:4", real=True)
G = (1, -1, -1, -1)

SYMBOLIC = {
    ("constant-E", (("E", 0.7),)): lambda: [-0.7 * X[1], 0, 0, 0],
    ("constant-E", (("E", 0.7), ("gauge", 1))): lambda: [0, 0.7 * X[0], 0, 0],
    ("constant-E", (("E", 0.7), ("axis", 2))): lambda: [-0.7 * X[2], 0, 0, 0],
    ("constant-H", (("H", 1.3),)): lambda: [0, 0, -1.3 * X[1], 0],
    ("constant-H", (("H", 1.3), ("axis", 1))): lambda: [0, 0, 0, -1.3 * X[2]],
    ("plane-wave", (("amplitude", 0.4), ("omega", 1.5))): lambda: [
        0, 0, 0.4 * sp.cos(1.5 * X[0] - 1.5 * X[1]), 0.4 * sp.sin(1.5 * X[0] - 1.5 * X[1])],
    ("plane-wave", (("amplitude", 0.4), ("omega", 1.5), ("k", 0.9), ("ellipticity", 0.0), ("phase", 0.3))):
        lambda: [0, 0, 0.4 * sp.cos(1.5 * X[0] - 0.9 * X[1] + 0.3), 0],
    ("polynomial-test", (("c0", 0.2), ("L12", 0.5), ("Q30", -0.8), ("L00", 0.1))): lambda: [
        0.2 + 0.1 * X[0], 0.5 * X[2], 0, -0.4 * X[0] ** 2],
}


def _sym_tensor(a_low):
    """F^{mu nu} from A_mu by symbolic differentiation."""
    f = sp.zeros(4, 4)
    for m in range(4):
        for n in range(4):
            f[m, n] = G[m] * G[n] * (sp.diff(a_low[n], X[m]) - sp.diff(a_low[m], X[n]))
    return f


@pytest.mark.parametrize("key", list(SYMBOLIC), ids=lambda k: k[0] + "-" + "-".join(p for p, _ in k[1]))
def test_potentials_against_symbolic(key):
    name, params = key
    pot = catalog(name, dict(params))
    a_sym = SYMBOLIC[key]()
    rng = np.random.default_rng(0)
    pts = rng.uniform(-2, 2, size=(5, 4))
    f_sym = _sym_tensor(a_sym)
    for x in pts:
        sub = dict(zip(X, x))
        a_exact = np.array([float(sp.sympify(c).subs(sub)) for c in a_sym])
        d_exact = np.array([[float(sp.diff(a_sym[m], X[n]).subs(sub)) for n in range(4)] for m in range(4)])
        assert np.allclose(pot(x), a_exact, atol=1e-13)
        assert np.allclose(pot.derivatives(x), d_exact, atol=1e-13)
        f_exact = np.array(f_sym.subs(sub), dtype=float)
        assert np.allclose(field_tensor(pot, x).f_upup, f_exact, atol=1e-13)


def test_constant_fields_have_expected_e_and_h():
    x = np.zeros(4)
    assert np.allclose(field_tensor(catalog("constant-E", {"E": 0.5}), x).E, [0.5, 0, 0])
    assert np.allclose(field_tensor(catalog("constant-E", {"E": 0.5, "gauge": 1}), x).E, [0.5, 0, 0])
    assert np.allclose(field_tensor(catalog("constant-H", {"H": 2.0}), x).H, [0, 0, 2.0])
    assert np.allclose(field_tensor(catalog("constant-H", {"H": 2.0, "axis": 2}), x).H, [0, 2.0, 0])
    t = field_tensor(catalog("crossed-constant", {"E": 0.3, "H": 0.4}), x)
    assert np.allclose(t.E, [0.3, 0, 0]) and np.allclose(t.H, [0, 0, 0.4])


def test_plane_wave_is_lorenz_gauge_and_null():
    pot = catalog("plane-wave", {"amplitude": 0.5, "omega": 1.0})
    x = np.random.default_rng(1).uniform(-3, 3, size=(50, 4))
    assert np.abs(divergence_a(pot, x)).max() < 1e-15
    t = field_tensor(pot, x)
    # null field: E.H = 0 and |E| = |H|
    assert np.abs(np.sum(t.E * t.H, axis=-1)).max() < 1e-14
    assert np.allclose(np.linalg.norm(t.E, axis=-1), np.linalg.norm(t.H, axis=-1))


def test_circular_wave_has_constant_field_strength():
    pot = catalog("plane-wave", {"amplitude": 0.5, "omega": 1.0})
    x = np.random.default_rng(2).uniform(-3, 3, size=(50, 4))
    assert np.allclose(np.linalg.norm(field_tensor(pot, x).E, axis=-1), 0.5)


def test_field_tensor_is_antisymmetric():
    pot = catalog("polynomial-test", {"L01": 0.3, "L23": -1.1, "Q12": 0.4, "L30": 0.2})
    x = np.random.default_rng(3).uniform(-1, 1, size=(10, 4))
    f = field_tensor(pot, x).f_upup
    assert np.abs(f + np.swapaxes(f, -1, -2)).max() == 0


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=6, max_size=6))
def test_from_e_h_round_trip(v):
    t = FieldTensor.from_e_h(v[:3], v[3:])
    assert np.allclose(t.E, v[:3]) and np.allclose(t.H, v[3:])


def test_field_matrix_against_explicit_sum():
    rng = np.random.default_rng(4)
    for name in ("chiral", "dirac-standard", "majorana"):
        r = builtin_representation(name)
        t = FieldTensor.from_e_h(rng.normal(size=3), rng.normal(size=3))
        f_low = t.f_downdown
        expected = np.zeros((4, 4), dtype=complex)
        for n in range(4):
            for m in range(4):
                expected += 0.5 * f_low[n, m] * build_sigma(r, n, m)
        assert np.allclose(field_matrix(t, r), expected, atol=1e-14)


def test_chiral_field_matrix_block_form():
    """Chiral representation: F = diag(i f.sigma, -i conj(f).sigma) with f = E + i H."""
    rng = np.random.default_rng(5)
    r = builtin_representation("chiral")
    pauli = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]])
    for _ in range(10):
        e, h = rng.normal(size=3), rng.normal(size=3)
        fm = field_matrix(FieldTensor.from_e_h(e, h), r)
        f = e + 1j * h
        upper = np.array([[1j * f[2], 1j * f[0] + f[1]], [1j * f[0] - f[1], -1j * f[2]]])
        lower = -1j * np.einsum("i,iab->ab", f.conj(), pauli)
        assert np.abs(fm[:2, 2:]).max() < 1e-15 and np.abs(fm[2:, :2]).max() < 1e-15
        assert np.allclose(fm[:2, :2], upper, atol=1e-14)
        assert np.allclose(fm[2:, 2:], lower, atol=1e-14)


def test_raise_index():
    assert np.array_equal(raise_index([1.0, 2.0, 3.0, 4.0]), [1, -2, -3, -4])


def test_catalog_errors():
    with pytest.raises(FieldConfigError, match="unknown"):
        catalog("nope")
    with pytest.raises(FieldConfigError, match="missing"):
        catalog("constant-E", {})
    with pytest.raises(FieldConfigError, match="does not take"):
        catalog("constant-E", {"E": 1, "H": 2})
    with pytest.raises(FieldConfigError, match="axis"):
        catalog("constant-H", {"H": 1, "axis": 0})
    with pytest.raises(FieldConfigError):
        from_config({"params": {}})


def test_config_round_trip_and_describe():
    pot = catalog("plane-wave", {"amplitude": 0.5, "omega": 2})
    again = from_config(pot.config())
    x = np.random.default_rng(6).normal(size=(4, 4))
    assert np.array_equal(pot(x), again(x))
    for name in CATALOG:
        assert describe(name).startswith(name)

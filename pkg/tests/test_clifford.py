import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diracone.clifford import (
    BUILTIN_NAMES,
    METRIC,
    PAULI,
    BasisError,
    GammaRepresentation,
    RepresentationError,
    build_sigma,
    builtin_representation,
    charge_conjugate,
    chiral_project,
    chiral_projector,
    coefficient_quadruple,
    dirac_adjoint,
    find_charge_conjugation,
    lorentz_spinor_map,
    make_chiral_basis,
    pair,
    sandwich,
    validate_representation,
    vector_lorentz_map,
)
from diracone.emfield import FieldTensor, field_matrix

from .conftest import PINNED_ETA, PINNED_XI, random_spinors, spinors

Z2 = np.zeros((2, 2))


def test_metric_is_its_own_inverse():
    assert np.array_equal(np.diag(METRIC), [1, -1, -1, -1])
    assert np.array_equal(METRIC @ METRIC, np.eye(4))


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_builtins_validate(name):
    report = validate_representation(builtin_representation(name))
    assert report.passed, str(report)
    assert "c_squared" in report.deviations


def test_chiral_matrices_explicit(chiral):
    assert np.array_equal(chiral.gamma5, np.diag([1, 1, -1, -1]))
    expected_c = np.block([[-1j * PAULI[1], Z2], [Z2, 1j * PAULI[1]]])
    assert np.array_equal(chiral.C, expected_c)
    assert np.array_equal(chiral.gammas[0] @ chiral.gammas[0], np.eye(4))
    assert np.array_equal(chiral.gammas[0], np.block([[Z2, -np.eye(2)], [-np.eye(2), Z2]]))


def test_unknown_representation_lists_names():
    with pytest.raises(RepresentationError, match="chiral"):
        builtin_representation("bogus")


def test_scaled_gamma_breaks_clifford(chiral):
    g = chiral.gammas.copy()
    g[1] = 1.1 * g[1]
    report = validate_representation(GammaRepresentation("bad", g, chiral.gamma5, chiral.C))
    assert "clifford" in report.failures


def test_similarity_transforms_and_hermiticity(chiral):
    rng = np.random.default_rng(3)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    u, _ = np.linalg.qr(m)
    unitary = GammaRepresentation("u", [u @ g @ u.conj().T for g in chiral.gammas],
                                  u @ chiral.gamma5 @ u.conj().T)
    assert validate_representation(unitary).passed
    s = np.eye(4) + 0.3 * m
    si = np.linalg.inv(s)
    skew = GammaRepresentation("s", [s @ g @ si for g in chiral.gammas], s @ chiral.gamma5 @ si)
    report = validate_representation(skew)
    assert report.deviations["clifford"] < 1e-12
    assert "hermiticity_gamma" in report.failures


def test_sigma_examples(rep, chiral):
    assert np.array_equal(build_sigma(rep, 2, 2), np.zeros((4, 4)))
    for m in range(4):
        for n in range(4):
            assert np.array_equal(build_sigma(rep, m, n), -build_sigma(rep, n, m))
    s3 = PAULI[2]
    assert np.allclose(build_sigma(chiral, 1, 2), np.block([[s3, Z2], [Z2, s3]]), atol=1e-15)
    with pytest.raises(IndexError):
        build_sigma(rep, 0, 4)


def test_gamma5_commutes_with_sigma(rep):
    sig = rep.sigmas()
    assert np.abs(np.einsum("ab,mnbc->mnac", rep.gamma5, sig) - np.einsum("mnab,bc->mnac", sig, rep.gamma5)).max() < 1e-12


def test_found_c_for_chiral_is_builtin_up_to_sign(chiral):
    c = find_charge_conjugation(chiral)
    assert np.allclose(c, -chiral.C, atol=1e-13)
    # documented rule: first nonzero entry has argument in (-pi/2, pi/2]
    first = c.ravel()[np.argmax(np.abs(c.ravel()) > 1e-12)]
    assert -np.pi / 2 < np.angle(first) <= np.pi / 2


def test_found_c_satisfies_constraints(rep):
    c = find_charge_conjugation(rep)
    ci = np.linalg.inv(c)
    for g in rep.gammas:
        assert np.abs(c @ g @ ci + g.T).max() < 1e-12
    assert np.abs(c.T + c).max() < 1e-12
    assert np.abs(c @ c + np.eye(4)).max() < 1e-12


def test_non_admissible_gammas_rejected(chiral):
    g = chiral.gammas.copy()
    g[2] = 1.1 * g[2]
    with pytest.raises(RepresentationError):
        find_charge_conjugation(GammaRepresentation("bad", g, chiral.gamma5))


def test_json_round_trip(rep):
    text = rep.dumps()
    data = json.loads(text)
    assert set(data) == {"name", "gamma0", "gamma1", "gamma2", "gamma3", "gamma5", "C"}
    assert len(data["gamma0"]) == 4 and len(data["gamma0"][0][0]) == 2
    back = GammaRepresentation.loads(text)
    assert np.array_equal(back.gammas, rep.gammas) and np.array_equal(back.C, rep.C)
    with pytest.raises(RepresentationError):
        GammaRepresentation.from_dict({**data, "gamma6": data["gamma5"]})


def test_dirac_adjoint_examples(chiral):
    assert np.array_equal(dirac_adjoint([1, 0, 0, 0], chiral), [0, 0, -1, 0])
    assert np.array_equal(dirac_adjoint(np.zeros(4), chiral), np.zeros(4))
    chi = np.array([1 + 2j, -1j, 0.5, 3])
    bar = dirac_adjoint(chi, chiral)
    # bar = chi^dagger gamma0, so (bar gamma0)^dagger recovers chi
    assert np.allclose((bar @ chiral.gammas[0]).conj(), chi)


@settings(max_examples=50, deadline=None)
@given(chi=spinors, eta=spinors)
def test_charge_conjugation_antisymmetry(chi, eta):
    for name in BUILTIN_NAMES:
        r = builtin_representation(name)
        scale = 1 + np.abs(chi).max() * np.abs(eta).max() + np.abs(chi).max() ** 2
        assert abs(pair(dirac_adjoint(chi, r), charge_conjugate(chi, r))) <= 1e-12 * scale
        lhs = pair(dirac_adjoint(chi, r), charge_conjugate(eta, r))
        rhs = -pair(dirac_adjoint(eta, r), charge_conjugate(chi, r))
        assert abs(lhs - rhs) <= 1e-12 * scale


def test_conjugate_flips_chirality(chiral):
    xi_c = charge_conjugate(PINNED_XI, chiral)
    assert np.allclose(chiral.gamma5 @ xi_c, xi_c)  # xi has -1, xi^c has +1


def test_projector_algebra(rep):
    p, m = chiral_projector(1, rep), chiral_projector(-1, rep)
    assert np.abs(p + m - np.eye(4)).max() <= 1e-14
    assert np.abs(p @ p - p).max() <= 1e-14
    assert np.abs(p @ m).max() <= 1e-14
    with pytest.raises(ValueError):
        chiral_projector(0, rep)


def test_chiral_projection_example(chiral):
    psi = np.array([1, 2, 3, 4], dtype=complex)
    assert np.array_equal(chiral_project(psi, 1, chiral), [1, 2, 0, 0])
    assert np.array_equal(chiral_project(psi, 1, chiral) + chiral_project(psi, -1, chiral), psi)
    assert np.array_equal(chiral_project(chiral_project(psi, -1, chiral), 1, chiral), np.zeros(4))


def test_default_basis_is_deterministic_and_valid(rep):
    for s in (1, -1):
        b = make_chiral_basis(rep, s)
        b2 = make_chiral_basis(rep, s)
        assert np.array_equal(b.xi, b2.xi) and np.array_equal(b.eta, b2.eta)
        assert np.allclose(rep.gamma5 @ b.xi, s * b.xi, atol=1e-12)
        assert np.allclose(rep.gamma5 @ b.eta, s * b.eta, atol=1e-12)
        assert abs(pair(dirac_adjoint(b.xi, rep), charge_conjugate(b.eta, rep))) > 1e-8


def test_chiral_default_basis_spans_lower_components(chiral):
    b = make_chiral_basis(chiral, -1)
    assert np.allclose(b.xi[:2], 0) and np.allclose(b.eta[:2], 0)
    override = make_chiral_basis(chiral, -1, (PINNED_XI, PINNED_ETA))
    assert np.array_equal(override.xi, PINNED_XI)


def test_basis_rejections(chiral):
    with pytest.raises(BasisError, match="independent"):
        make_chiral_basis(chiral, -1, (PINNED_XI, 2 * PINNED_XI))
    with pytest.raises(BasisError, match="eigenvector"):
        make_chiral_basis(chiral, -1, ([1, 0, 0, 0], PINNED_ETA))


def _pinned_basis(chiral):
    return make_chiral_basis(chiral, -1, (PINNED_XI, PINNED_ETA))


def _f_matrix(rep, e, h):
    return field_matrix(FieldTensor.from_e_h(e, h), rep)


def test_coefficients_pure_e1(chiral):
    q = coefficient_quadruple(_pinned_basis(chiral), _f_matrix(chiral, [1, 0, 0], [0, 0, 0]), chiral)
    assert np.allclose([q.a, q.b, q.a_prime, q.b_prime], [0, -1j, -1j, 0], atol=1e-15)


def test_coefficients_pure_h3_degenerate(chiral):
    q = coefficient_quadruple(_pinned_basis(chiral), _f_matrix(chiral, [0, 0, 0], [0, 0, 1]), chiral)
    assert np.allclose([q.a, q.b], [-1, 0], atol=1e-15)


def test_coefficients_zero_field(rep):
    q = coefficient_quadruple(make_chiral_basis(rep, 1), np.zeros((4, 4)), rep)
    assert q == (0, 0, 0, 0)


def test_b_prime_equals_minus_a_on_random_fields(rep):
    rng = np.random.default_rng(11)
    basis = make_chiral_basis(rep, -1)
    f = _f_matrix(rep, rng.normal(size=(100, 3)), rng.normal(size=(100, 3)))
    q = coefficient_quadruple(basis, f, rep)
    assert np.abs(q.b_prime + q.a).max() <= 1e-12


def test_symmetric_field_bilinear(rep):
    rng = np.random.default_rng(5)
    chi, eta = random_spinors(rng, 100), random_spinors(rng, 100)
    f = _f_matrix(rep, rng.normal(size=(100, 3)), rng.normal(size=(100, 3)))
    lhs = sandwich(dirac_adjoint(chi, rep), f, charge_conjugate(eta, rep))
    rhs = sandwich(dirac_adjoint(eta, rep), f, charge_conjugate(chi, rep))
    assert np.abs(lhs - rhs).max() <= 1e-12 * np.abs(lhs).max()


def test_c_sign_flip_leaves_coefficients_identical(rep):
    rng = np.random.default_rng(8)
    flipped = rep.with_c(-rep.C)
    basis = make_chiral_basis(rep, -1)
    f = _f_matrix(rep, rng.normal(size=(20, 3)), rng.normal(size=(20, 3)))
    q1 = coefficient_quadruple(basis, f, rep)
    q2 = coefficient_quadruple(basis, f, flipped)
    for x, y in zip(q1, q2):
        assert np.abs(x - y).max() <= 1e-14


def test_lorentz_map_identity_and_gamma5(rep):
    assert np.allclose(lorentz_spinor_map(np.zeros((4, 4)), rep), np.eye(4), atol=1e-15)
    rng = np.random.default_rng(2)
    low = rng.normal(size=(4, 4))
    low = low - low.T
    omega = METRIC @ low  # raise first index
    lam = lorentz_spinor_map(omega, rep)
    assert np.abs(lam @ rep.gamma5 - rep.gamma5 @ lam).max() <= 1e-10


def test_lorentz_map_covariance(rep):
    omega = np.zeros((4, 4))
    omega[0, 1] = omega[1, 0] = 0.3  # boost along x^1
    omega[1, 2], omega[2, 1] = 0.2, -0.2  # rotation in the 1-2 plane
    lam = lorentz_spinor_map(omega, rep)
    vec = vector_lorentz_map(omega)
    li = np.linalg.inv(lam)
    for m in range(4):
        assert np.abs(li @ rep.gammas[m] @ lam - np.einsum("n,nab->ab", vec[m], rep.gammas)).max() <= 1e-10


def test_lorentz_map_against_taylor_series(chiral):
    omega = np.zeros((4, 4))
    omega[0, 1] = omega[1, 0] = 0.3
    low = METRIC @ omega
    gen = -0.25j * np.einsum("mn,mnab->ab", low, chiral.sigmas())
    series, term = np.eye(4, dtype=complex), np.eye(4, dtype=complex)
    for n in range(1, 30):
        term = term @ gen / n
        series = series + term
    assert np.abs(lorentz_spinor_map(omega, chiral) - series).max() <= 1e-12


def test_boosted_spinor_keeps_chirality(chiral):
    omega = np.zeros((4, 4))
    omega[0, 1] = omega[1, 0] = 0.3
    moved = lorentz_spinor_map(omega, chiral) @ PINNED_XI
    assert np.abs(chiral.gamma5 @ moved + moved).max() <= 1e-10


def test_non_antisymmetric_omega_rejected(chiral):
    omega = np.zeros((4, 4))
    omega[0, 1] = 0.3
    with pytest.raises(ValueError):
        lorentz_spinor_map(omega, chiral)

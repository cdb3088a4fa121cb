import numpy as np
import pytest
from scipy import sparse

from weaknoise.direct import (
    COMPARE_COLUMNS,
    DirectMatrix,
    asymptotic_ratio_fit,
    compare_curves,
    curves_to_csv,
    fit_fixed_power,
    fit_power_law,
    lattice_eigenvalue,
    leading_eigenvalue,
    nystrom_eigenvalue,
    quadrature_matrix,
)
from weaknoise.errors import AccuracyError, ContractError, ConvergenceError
from weaknoise.maps import linear_map
from weaknoise.operators import build_B
from weaknoise.cycles import locate_cycle


def test_power_iteration_diagonal():
    assert leading_eigenvalue(np.diag([0.3, 0.9, -0.5])) == pytest.approx(0.9, rel=1e-12)
    assert leading_eigenvalue(sparse.diags([0.3, 0.9, -0.5]).tocsr()) == pytest.approx(0.9, rel=1e-12)


def test_power_iteration_triangular_block(quartic):
    c = locate_cycle(quartic, (0,))
    B = build_B(quartic, c, 0, 12, 12).entries
    assert leading_eigenvalue(B) == pytest.approx(1 / abs(c.multiplier), rel=1e-12)


def test_power_iteration_equal_modulus():
    with pytest.raises(ConvergenceError):
        leading_eigenvalue(np.diag([1.0, -1.0]), maxiter=2000)


def test_non_finite_matrix_refused():
    with pytest.raises(ContractError):
        leading_eigenvalue(np.array([[1.0, np.nan], [0.0, 1.0]]))


@pytest.mark.parametrize("sigma", [0.01, 0.05, 0.2])
@pytest.mark.parametrize("slope", [2.0, -3.0])
def test_linear_map_direct_solvers(slope, sigma):
    m = linear_map(slope)
    want = 1 / abs(slope)
    assert leading_eigenvalue(quadrature_matrix(m, sigma, 12)) == pytest.approx(want, rel=1e-10)
    assert nystrom_eigenvalue(m, sigma) == pytest.approx(want, rel=1e-10)
    assert lattice_eigenvalue(m, sigma, bins=512) == pytest.approx(want, abs=5e-3)


@pytest.mark.parametrize("sigma", [0.05, 0.1, 0.2, 0.3])
def test_quartic_lattice_against_nystrom(quartic, sigma):
    ref = nystrom_eigenvalue(quartic, sigma)
    assert lattice_eigenvalue(quartic, sigma, bins=1024) == pytest.approx(ref, abs=1e-3)


def test_lattice_refinement(quartic):
    ref = nystrom_eigenvalue(quartic, 0.1)
    errs = [abs(lattice_eigenvalue(quartic, 0.1, bins=b) - ref) for b in (128, 256, 512)]
    assert errs[0] > errs[1] > errs[2]


def test_nystrom_panel_refinement(quartic):
    a = nystrom_eigenvalue(quartic, 0.05, check=None)
    b = nystrom_eigenvalue(quartic, 0.05, panel_width=0.5, check=None)
    assert a == pytest.approx(b, rel=1e-11)


def test_quadrature_refinement_is_stable(quartic):
    A = quadrature_matrix(quartic, 0.3, 20)
    B = quadrature_matrix(quartic, 0.3, 20, nodes=512)
    tol = 1e-10 * np.abs(B.entries) + 64 * (A.rounding_bound + B.rounding_bound)
    assert np.all(np.abs(A.entries - B.entries) <= tol)
    assert isinstance(A, DirectMatrix) and A.size == 20


def test_quadrature_matches_nystrom_at_large_noise(quartic):
    lam = leading_eigenvalue(quadrature_matrix(quartic, 0.3, 30))
    assert lam == pytest.approx(nystrom_eigenvalue(quartic, 0.3), rel=1e-6)


def test_quadrature_basis_limit(quartic):
    with pytest.raises(ContractError):
        quadrature_matrix(quartic, 0.1, 41)
    with pytest.raises(ContractError):
        quadrature_matrix(quartic, 0.0, 10)


def test_quadrature_small_noise_not_certified(quartic):
    with pytest.raises(AccuracyError):
        leading_eigenvalue(quadrature_matrix(quartic, 0.02, 30))


def test_lattice_contract(quartic):
    with pytest.raises(ContractError):
        lattice_eigenvalue(quartic, 0.1, bins=16)
    with pytest.raises(ContractError):
        lattice_eigenvalue(quartic, 0.1, padding=0.1)


def test_compare_curves(quartic, quartic_run6):
    e = quartic_run6[3]
    rows = compare_curves(quartic, [0.0, 0.05, 0.1], e, bins=256, polybasis=False)
    assert list(rows[0]) == COMPARE_COLUMNS
    zero = rows[0]
    assert zero["lambda_direct"] == zero["lambda_lattice"] == e.nu_coeff(0)
    assert all(zero[f"diff_K{k}"] == 0.0 for k in range(6))
    r = rows[1]
    assert r["sum_K1"] == pytest.approx(e.nu_coeff(0) + e.nu_coeff(2) * 0.05**2, rel=1e-15)
    assert np.isnan(r["lambda_polybasis"])
    assert abs(r["diff_K2"]) < abs(r["diff_K1"]) < abs(r["diff_K0"])
    text = curves_to_csv(rows, header_lines=["run"])
    assert text.splitlines()[0] == "# run"
    assert text.splitlines()[1].split(",") == COMPARE_COLUMNS


def test_compare_curves_rejects_bad_grid(quartic, quartic_run6):
    with pytest.raises(ContractError):
        compare_curves(quartic, [0.1, 0.05], quartic_run6[3])


def test_power_law_fits():
    s = np.linspace(0.02, 0.1, 9)
    slope, amp = fit_power_law(s, -3.0 * s**4)
    assert slope == pytest.approx(4.0, rel=1e-12)
    assert amp == pytest.approx(3.0, rel=1e-12)
    assert fit_fixed_power(s, 5.0 * s**6, 6) == pytest.approx(5.0, rel=1e-12)


def test_growth_fit():
    from math import factorial
    nu = [1.0] + [2.0 * factorial(k) * 1.5**k * k**0.5 for k in range(1, 7)]
    fit = asymptotic_ratio_fit(nu)
    assert fit.a == pytest.approx(1.5, rel=1e-10)
    assert fit.b == pytest.approx(0.5, rel=1e-8)
    assert fit.log_c == pytest.approx(np.log(2.0), abs=1e-8)
    with pytest.raises(ContractError):
        asymptotic_ratio_fit([1.0, 2.0, 0.0, 3.0, 0.0])

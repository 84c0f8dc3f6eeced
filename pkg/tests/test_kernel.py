import numpy as np
import pytest
from scipy import integrate

from tripod_hom import (
    decompose,
    kernel_fast_memory,
    kernel_from_matrix,
    kernel_gaussian_toy,
    kernel_ideal,
    make_grid,
)
from tripod_hom.errors import (
    DegenerateKernelError,
    InvalidParameterError,
    NonSymmetricKernelError,
    UnphysicalKernelError,
)
from tripod_hom.kernel import (
    bessel_j0,
    commutator_matrix,
    commutator_min_eigenvalue,
    load_kernel,
    save_kernel,
    symmetry_residual,
    weighted_commutator,
)

# J0 reference values from mpmath at 40 digits
J0_REFERENCE = [
    (0.0, 1.0),
    (1.0, 0.7651976865579665514497175),
    (10.0, -0.2459357644513483351977609),
]


@pytest.mark.parametrize("x, expected", J0_REFERENCE)
def test_bessel_j0_reference(x, expected):
    assert bessel_j0(x) == pytest.approx(expected, rel=1e-12, abs=0)


def test_bessel_j0_first_zero():
    # float nearest the first zero; mpmath gives -6.1087652597e-17 there
    assert abs(bessel_j0(2.404825557695773) - (-6.108765259736730e-17)) < 1e-15


def test_ideal_two_point():
    k = kernel_ideal(make_grid(2, 1.0, "trapezoid"))
    np.testing.assert_array_equal(k.matrix, np.diag([2.0, 2.0]))


@pytest.mark.parametrize("rule", ["trapezoid", "gauss-legendre"])
def test_ideal_is_identity_map(rule, rng):
    g = make_grid(33, 2.0, rule)
    f = rng.normal(size=33)
    assert np.max(np.abs(kernel_ideal(g).apply(f) - f)) < 1e-13


def test_ideal_spectrum_all_ones(grid64):
    dec = decompose(kernel_ideal(grid64))
    assert dec.retained_count == 64
    np.testing.assert_allclose(dec.eigenvalues, 1.0, atol=1e-12)


def test_ideal_commutator_vanishes(grid64):
    k = kernel_ideal(grid64)
    assert np.max(np.abs(weighted_commutator(k))) <= 1e-10
    w = grid64.weights
    assert np.max(np.abs(np.sqrt(w)[:, None] * commutator_matrix(k) * np.sqrt(w)[None, :])) <= 1e-10


def test_gaussian_rank_one_limit():
    dec = decompose(kernel_gaussian_toy(make_grid(32, 1.0), 1e6, 0.7), cutoff=0.0)
    assert dec.eigenvalues[0] == pytest.approx(0.49, abs=1e-12)
    assert np.all(dec.eigenvalues[1:] < 1e-10)


def test_gaussian_peak_rescaling(grid64):
    dec = decompose(kernel_gaussian_toy(grid64, 0.1, 0.9))
    assert abs(dec.eigenvalues[0] - 0.81) < 1e-10


def test_gaussian_grid_refinement():
    ratios = []
    for n in (64, 128):
        lam = decompose(kernel_gaussian_toy(make_grid(n, 1.0), 0.1, 0.9)).eigenvalues
        ratios.append(lam[1] / lam[0])
    assert abs(ratios[0] / ratios[1] - 1) < 1e-6


def test_gaussian_rejects_bad_parameters(grid64):
    with pytest.raises(InvalidParameterError):
        kernel_gaussian_toy(grid64, 0.0, 0.5)
    with pytest.raises(InvalidParameterError):
        kernel_gaussian_toy(grid64, 0.1, 1.5)
    with pytest.raises(DegenerateKernelError):
        kernel_gaussian_toy(make_grid(4, 1.0), 1e-3, 0.5)
    with pytest.raises(DegenerateKernelError):
        kernel_gaussian_toy(grid64, 1e-200, 0.5)


@pytest.mark.parametrize("L, T_W", [(1.0, 1.0), (3.0, 0.7), (0.2, 5.0)])
def test_fast_memory_symmetric(L, T_W):
    k = kernel_fast_memory(make_grid(40, T_W), L, 24)
    assert symmetry_residual(k.matrix) == 0.0


def test_fast_memory_physical(grid64):
    k = kernel_fast_memory(grid64, 1.0, 64)
    lam = decompose(k, cutoff=0.0).eigenvalues
    assert lam.min() >= 0 and lam.max() <= 1 + 1e-9
    assert commutator_min_eigenvalue(k) >= -1e-9


def test_fast_memory_endpoint_value():
    # at t = t' = T_W both Bessel arguments vanish and K = int_0^L dz = L
    k = kernel_fast_memory(make_grid(17, 1.0, "trapezoid"), 2.5, 16)
    assert k.matrix[-1, -1] == pytest.approx(2.5, rel=1e-14)
    errors = [abs(kernel_fast_memory(make_grid(n, 1.0), 2.5, 16).matrix[-1, -1] - 2.5) for n in (8, 32, 128)]
    assert errors[0] > errors[1] > errors[2]


def test_fast_memory_matches_adaptive_quadrature():
    L, T_W = 2.0, 1.5
    g = make_grid(12, T_W)
    k = kernel_fast_memory(g, L, 48)
    for a, b in [(0, 0), (3, 9), (11, 2), (7, 7)]:
        ta, tb = T_W - g.nodes[a], T_W - g.nodes[b]
        ref, _ = integrate.quad(lambda z: bessel_j0(2 * np.sqrt(z * ta)) * bessel_j0(2 * np.sqrt(z * tb)),
                                0, L, epsabs=1e-14, epsrel=1e-13)
        assert k.matrix[a, b] == pytest.approx(ref, rel=1e-11, abs=1e-13)


def test_fast_memory_underresolved_fails_loudly():
    with pytest.raises(UnphysicalKernelError):
        kernel_fast_memory(make_grid(32, 1.0), 1024.0, 32)


def test_fast_memory_rejects_bad_parameters(grid64):
    with pytest.raises(InvalidParameterError):
        kernel_fast_memory(grid64, 1.0, 1)
    with pytest.raises(InvalidParameterError):
        kernel_fast_memory(grid64, -1.0, 8)


def test_from_matrix_ideal_equivalent(grid64):
    k = kernel_from_matrix(grid64, np.diag(1 / grid64.weights))
    assert k.kind == "external"
    np.testing.assert_array_equal(k.matrix, kernel_ideal(grid64).matrix)
    np.testing.assert_allclose(decompose(k).eigenvalues, 1.0, atol=1e-12)


def test_from_matrix_rejects_asymmetric(grid64, rng):
    m = rng.normal(size=(64, 64))
    m = m + m.T
    m[3, 5] += 1e-3 * np.max(np.abs(m))
    with pytest.raises(NonSymmetricKernelError):
        kernel_from_matrix(grid64, m)


def test_from_matrix_symmetrizes_small_noise(grid64, rng):
    m = rng.normal(size=(64, 64))
    m = m + m.T
    m[3, 5] += 1e-8 * np.max(np.abs(m))
    k = kernel_from_matrix(grid64, m)
    assert k.input_residual == pytest.approx(1e-8, rel=1e-6)
    assert symmetry_residual(k.matrix) == 0.0


def test_from_matrix_dimension_mismatch(grid64):
    with pytest.raises(InvalidParameterError):
        kernel_from_matrix(grid64, np.eye(3))


def test_from_matrix_random_psd(rng):
    g = make_grid(24, 1.0)
    lam = np.sort(rng.uniform(0, 1, size=24))[::-1]
    q, _ = np.linalg.qr(rng.normal(size=(24, 24)))
    s = q @ np.diag(np.sqrt(lam)) @ q.T
    m = s / np.sqrt(np.outer(g.weights, g.weights))
    dec = decompose(kernel_from_matrix(g, m), cutoff=0.0)
    np.testing.assert_allclose(dec.eigenvalues, lam, atol=1e-12)


def test_kernel_file_round_trip(tmp_path):
    k = kernel_fast_memory(make_grid(9, 1.3, "trapezoid"), 2.0, 8)
    path = tmp_path / "kernel.txt"
    save_kernel(k, path)
    header = path.read_text().splitlines()[0].split()
    assert header == ["9", "1.3", "trapezoid"]
    back = load_kernel(path)
    assert back.grid == k.grid
    np.testing.assert_array_equal(back.matrix, k.matrix)


def test_kernel_file_malformed(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("3 1.0 trapezoid\n0 0.5 1\n")
    with pytest.raises(InvalidParameterError):
        load_kernel(path)


def test_kernel_matrix_read_only(grid64):
    with pytest.raises(ValueError):
        kernel_ideal(grid64).matrix[0, 0] = 1.0

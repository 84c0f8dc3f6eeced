"""Memory kernels G(t, t') sampled on a time grid.

Every builder returns the effective input-to-output map of one
write/store/read cycle, so the readout time reversal is already applied and
downstream code treats ``G`` as a direct linear map on the write window.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special

from .core import TimeGrid, format_float
from .errors import (
    DegenerateKernelError,
    InvalidParameterError,
    NonSymmetricKernelError,
    UnphysicalKernelError,
)

KINDS = ("ideal", "gaussian-toy", "fast-memory", "external")

SYMMETRY_TOL = 1e-10
EXTERNAL_SYMMETRY_TOL = 1e-6
PHYSICALITY_TOL = 1e-9


def bessel_j0(x):
    """Bessel function of the first kind, order zero."""
    return special.j0(x)


def symmetry_residual(matrix: np.ndarray) -> float:
    """max|G_kl - G_lk| relative to max|G| (0 for the zero matrix)."""
    scale = np.max(np.abs(matrix))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(matrix - matrix.T)) / scale)


@dataclass(frozen=True, eq=False)
class MemoryKernel:
    grid: TimeGrid
    matrix: np.ndarray
    kind: str
    params: dict = field(default_factory=dict)
    # residual before symmetrization, only meaningful for ingested kernels
    input_residual: float = 0.0

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        n = self.grid.n
        if matrix.shape != (n, n):
            raise InvalidParameterError(f"kernel matrix shape {matrix.shape} does not match grid size {n}")
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown kernel kind {self.kind!r}")
        if not np.all(np.isfinite(matrix)):
            raise InvalidParameterError("kernel matrix has non-finite entries")
        residual = symmetry_residual(matrix)
        if residual > SYMMETRY_TOL:
            raise NonSymmetricKernelError(f"kernel symmetry residual {residual:.3g} exceeds {SYMMETRY_TOL}")
        matrix.flags.writeable = False
        object.__setattr__(self, "matrix", matrix)

    @property
    def n(self) -> int:
        return self.grid.n

    def weighted(self) -> np.ndarray:
        """Nystrom matrix D^1/2 G D^1/2 with D = diag(weights)."""
        sw = np.sqrt(self.grid.weights)
        return sw[:, None] * self.matrix * sw[None, :]

    def apply(self, samples) -> np.ndarray:
        """Quadrature of  int dt' G(t_k, t') f(t')."""
        return self.matrix @ (self.grid.weights * np.asarray(samples))


def commutator_matrix(kernel: MemoryKernel) -> np.ndarray:
    """Vacuum-noise commutator C_kl = delta_kl / w_k - sum_m w_m G_km G_ml.

    Non-negativity of this matrix is what keeps the output field bosonic.
    """
    w = kernel.grid.weights
    G = kernel.matrix
    return np.diag(1.0 / w) - (G * w[None, :]) @ G


def weighted_commutator(kernel: MemoryKernel) -> np.ndarray:
    """D^1/2 C D^1/2, which equals I - S^2 for the Nystrom matrix S."""
    S = kernel.weighted()
    return np.eye(kernel.n) - S @ S


def commutator_min_eigenvalue(kernel: MemoryKernel) -> float:
    return float(np.linalg.eigvalsh(weighted_commutator(kernel))[0])


def _top_singular(kernel_matrix: np.ndarray, grid: TimeGrid) -> float:
    sw = np.sqrt(grid.weights)
    mu = np.linalg.eigvalsh(sw[:, None] * kernel_matrix * sw[None, :])
    return float(np.max(np.abs(mu)))


def kernel_ideal(grid: TimeGrid) -> MemoryKernel:
    """Discrete delta function: G f = f exactly on the grid."""
    return MemoryKernel(grid=grid, matrix=np.diag(1.0 / grid.weights), kind="ideal")


def kernel_gaussian_toy(grid: TimeGrid, sigma: float, mu1: float) -> MemoryKernel:
    """Gaussian-correlated test kernel with the top Schmidt amplitude fixed to ``mu1``.

    G(t, t') = c exp(-(t - t')^2 / 2 sigma^2) exp(-((t - T/2)^2 + (t' - T/2)^2) / 2 (4 sigma)^2)
    """
    if not (np.isfinite(sigma) and sigma > 0):
        raise InvalidParameterError(f"correlation time must be positive, got {sigma!r}")
    if not 0 < mu1 <= 1:
        raise InvalidParameterError(f"peak Schmidt amplitude must lie in (0, 1], got {mu1!r}")
    t = grid.nodes
    centre = 0.5 * grid.T_W
    diff = t[:, None] - t[None, :]
    with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
        envelope = np.exp(-((t - centre) ** 2) / (2.0 * (4.0 * sigma) ** 2))
        raw = np.exp(-(diff**2) / (2.0 * sigma**2)) * np.outer(envelope, envelope)
    if not np.all(np.isfinite(raw)):
        raise DegenerateKernelError(f"correlation time {sigma!r} is too small to sample on this grid")
    top = _top_singular(raw, grid)
    if not (np.isfinite(top) and top > 0):
        raise DegenerateKernelError("gaussian kernel vanishes on this grid; cannot rescale to the requested peak")
    return MemoryKernel(grid=grid, matrix=raw * (mu1 / top), kind="gaussian-toy",
                        params={"sigma": float(sigma), "mu1": float(mu1)})


def write_kernel(z: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Resonant fast-memory write kernel J0(2 sqrt(z tau)) on a (z, tau) mesh."""
    return bessel_j0(2.0 * np.sqrt(np.outer(z, tau)))


def kernel_fast_memory(grid: TimeGrid, L: float, nz: int = 64) -> MemoryKernel:
    """Write-then-read kernel of the broadband resonant memory.

    K(t, t') = int_0^L dz W(z, T_W - t) W(z, T_W - t'), with the spatial
    integral done by ``nz``-point Gauss-Legendre quadrature. The result is
    checked for physicality (all lambda_i <= 1) before being returned.
    """
    if not (np.isfinite(L) and L > 0):
        raise InvalidParameterError(f"cell length must be positive, got {L!r}")
    if int(nz) != nz or nz < 2:
        raise InvalidParameterError(f"nz must be an integer >= 2, got {nz!r}")
    x, wz = np.polynomial.legendre.leggauss(int(nz))
    z = 0.5 * L * (x + 1.0)
    wz = 0.5 * L * wz
    W = write_kernel(z, grid.T_W - grid.nodes)
    K = (W * wz[:, None]).T @ W
    K = 0.5 * (K + K.T)  # exact symmetry; the product is symmetric up to summation order
    top = _top_singular(K, grid)
    if top**2 > 1 + PHYSICALITY_TOL:
        raise UnphysicalKernelError(
            f"fast-memory kernel has lambda_1 = {top**2:.12g} > 1 (L={L}, T_W={grid.T_W}, "
            f"n={grid.n}, nz={nz}); refine the grids")
    return MemoryKernel(grid=grid, matrix=K, kind="fast-memory", params={"L": float(L), "nz": int(nz)})


def kernel_from_matrix(grid: TimeGrid, matrix) -> MemoryKernel:
    """Ingest an externally computed kernel, symmetrizing small asymmetries."""
    matrix = np.asarray(matrix)
    if np.iscomplexobj(matrix):
        if np.any(matrix.imag != 0):
            raise InvalidParameterError("complex kernels are not supported")
        matrix = matrix.real
    matrix = matrix.astype(float)
    if matrix.shape != (grid.n, grid.n):
        raise InvalidParameterError(f"matrix shape {matrix.shape} does not match grid size {grid.n}")
    residual = symmetry_residual(matrix)
    if residual > EXTERNAL_SYMMETRY_TOL:
        raise NonSymmetricKernelError(
            f"external kernel symmetry residual {residual:.3g} exceeds {EXTERNAL_SYMMETRY_TOL}")
    return MemoryKernel(grid=grid, matrix=0.5 * (matrix + matrix.T), kind="external", input_residual=residual)


def save_kernel(kernel: MemoryKernel, path) -> None:
    """Plain-text kernel file: header ``n T_W rule``, nodes, weights, then n rows."""
    g = kernel.grid
    lines = [f"{g.n} {format_float(g.T_W)} {g.rule}",
             " ".join(format_float(v) for v in g.nodes),
             " ".join(format_float(v) for v in g.weights)]
    lines.extend(" ".join(format_float(v) for v in row) for row in kernel.matrix)
    Path(path).write_text("\n".join(lines) + "\n")


def load_kernel(path) -> MemoryKernel:
    text = Path(path).read_text().split("\n", 1)
    header = text[0].split()
    if len(header) != 3:
        raise InvalidParameterError(f"{path}: header must be 'n T_W rule'")
    try:
        n, T_W = int(header[0]), float(header[1])
        values = np.array(text[1].split() if len(text) > 1 else [], dtype=float)
    except ValueError as exc:
        raise InvalidParameterError(f"{path}: {exc}") from None
    if values.size != 2 * n + n * n:
        raise InvalidParameterError(f"{path}: expected {2 * n + n * n} numbers after the header, got {values.size}")
    grid = TimeGrid(nodes=values[:n], weights=values[n:2 * n], T_W=T_W, rule=header[2])
    return kernel_from_matrix(grid, values[2 * n:].reshape(n, n))

"""Schmidt (eigenmode) decomposition of a memory kernel and mode projections.

The continuous eigenproblem  int dt' G(t, t') psi(t') = sqrt(lambda) psi(t)
is discretized with the Nystrom method: diagonalize S = D^1/2 G D^1/2 and
map eigenvectors back with psi = v / sqrt(w), so the modes are orthonormal
under the grid quadrature rather than the plain Euclidean product.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import TimeGrid, format_float
from .errors import (
    DegenerateKernelError,
    InvalidParameterError,
    NonSymmetricKernelError,
    UnphysicalKernelError,
)
from .kernel import PHYSICALITY_TOL, SYMMETRY_TOL, MemoryKernel, kernel_from_matrix, symmetry_residual

DEFAULT_CUTOFF = 1e-12
ORTHONORMALITY_TOL = 1e-9
NEGATIVE_CLAMP_TOL = 1e-9


def _fix_signs(modes: np.ndarray) -> np.ndarray:
    """Make the first non-negligible sample of every mode (column) positive."""
    modes = modes.copy()
    for i in range(modes.shape[1]):
        col = modes[:, i]
        peak = np.max(np.abs(col))
        if peak == 0:
            continue
        first = np.flatnonzero(np.abs(col) > 1e-8 * peak)[0]
        if col[first] < 0:
            modes[:, i] = -col
    return modes


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """Eigenvalues (descending) and mode functions psi_i(t_k) as columns."""

    eigenvalues: np.ndarray
    modes: np.ndarray
    grid: TimeGrid

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=float)
        modes = np.array(self.modes, dtype=float)
        if lam.ndim != 1 or modes.shape != (self.grid.n, lam.size):
            raise InvalidParameterError(
                f"modes must have shape (n, K) = ({self.grid.n}, {lam.size}), got {modes.shape}")
        if lam.size and (lam.min() < 0 or lam.max() > 1 + PHYSICALITY_TOL):
            raise UnphysicalKernelError(f"Schmidt eigenvalues outside [0, 1]: [{lam.min():.3g}, {lam.max():.12g}]")
        if np.any(np.diff(lam) > 0):
            raise InvalidParameterError("eigenvalues must be sorted in descending order")
        gram = (modes * self.grid.weights[:, None]).T @ modes
        err = np.max(np.abs(gram - np.eye(lam.size))) if lam.size else 0.0
        if err > ORTHONORMALITY_TOL:
            raise InvalidParameterError(f"mode functions are not orthonormal (Gram error {err:.3g})")
        lam.flags.writeable = False
        modes.flags.writeable = False
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "modes", modes)

    @property
    def retained_count(self) -> int:
        return self.eigenvalues.size

    @property
    def singular_values(self) -> np.ndarray:
        return np.sqrt(self.eigenvalues)

    def mode(self, index: int) -> np.ndarray:
        """Samples of psi_index, 1-based like the usual mode labels."""
        if not 1 <= index <= self.retained_count:
            raise InvalidParameterError(f"mode index {index} outside 1..{self.retained_count}")
        return self.modes[:, index - 1]

    def gram(self) -> np.ndarray:
        return (self.modes * self.grid.weights[:, None]).T @ self.modes

    def truncated(self, K: int) -> "SchmidtDecomposition":
        if not 1 <= K <= self.retained_count:
            raise InvalidParameterError(f"mode cutoff {K} outside 1..{self.retained_count}")
        return SchmidtDecomposition(self.eigenvalues[:K], self.modes[:, :K], self.grid)


def decompose(kernel: MemoryKernel, cutoff: float = DEFAULT_CUTOFF) -> SchmidtDecomposition:
    """Schmidt decomposition keeping modes with lambda_i >= cutoff * lambda_1."""
    if not 0 <= cutoff < 1:
        raise InvalidParameterError(f"cutoff must lie in [0, 1), got {cutoff!r}")
    residual = symmetry_residual(kernel.matrix)
    if residual > SYMMETRY_TOL:
        raise NonSymmetricKernelError(f"kernel symmetry residual {residual:.3g} exceeds {SYMMETRY_TOL}")
    mu, vecs = np.linalg.eigh(kernel.weighted())
    order = np.argsort(-mu, kind="stable")
    mu, vecs = mu[order], vecs[:, order]
    top = mu[0]
    if top <= 0:
        if np.max(np.abs(mu)) == 0:
            raise DegenerateKernelError("kernel is identically zero")
        raise UnphysicalKernelError(f"kernel has no positive eigenvalue (largest {top:.3g})")
    if top**2 > 1 + PHYSICALITY_TOL:
        raise UnphysicalKernelError(f"lambda_1 = {top**2:.12g} exceeds 1; the kernel would amplify")
    if mu[-1] < -NEGATIVE_CLAMP_TOL * top:
        raise UnphysicalKernelError(
            f"kernel eigenvalue {mu[-1]:.3g} is negative beyond rounding (lambda_1 amplitude {top:.3g})")
    mu = np.clip(mu, 0.0, None)
    lam = np.minimum(mu**2, 1.0)  # overshoot within tolerance is rounding
    keep = lam >= cutoff * lam[0]
    modes = vecs[:, keep] / np.sqrt(kernel.grid.weights)[:, None]
    return SchmidtDecomposition(lam[keep], _fix_signs(modes), kernel.grid)


def reconstruct(dec: SchmidtDecomposition) -> MemoryKernel:
    """G_kl = sum_i sqrt(lambda_i) psi_i(t_k) psi_i(t_l)."""
    matrix = (dec.modes * dec.singular_values[None, :]) @ dec.modes.T
    return kernel_from_matrix(dec.grid, matrix)


def schmidt_number(dec: SchmidtDecomposition) -> float:
    """Effective number of modes, (sum lambda)^2 / sum lambda^2."""
    lam = dec.eigenvalues
    denom = float(np.sum(lam**2))
    if denom == 0:
        raise DegenerateKernelError("Schmidt spectrum is identically zero")
    return float(np.sum(lam)) ** 2 / denom


@dataclass(frozen=True, eq=False)
class TemporalEnvelope:
    """Normalized single-photon wave packet sampled on a grid.

    ``profile`` optionally keeps the continuous shape the samples came from
    so the envelope can be shifted in time exactly instead of interpolated.
    """

    samples: np.ndarray
    grid: TimeGrid
    profile: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        samples = np.array(self.samples, dtype=complex)
        if samples.shape != (self.grid.n,):
            raise InvalidParameterError(f"envelope has {samples.shape} samples, grid has {self.grid.n}")
        norm = self.grid.integrate(np.abs(samples) ** 2)
        if abs(norm - 1) > 1e-10:
            raise InvalidParameterError(f"envelope is not normalized (norm^2 = {norm!r})")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    def overlap(self, other: "TemporalEnvelope") -> complex:
        """<self|other> under the grid quadrature."""
        _check_same_grid(self.grid, other.grid)
        return complex(self.grid.integrate(np.conj(self.samples) * other.samples))

    def scaled(self, phase: complex) -> "TemporalEnvelope":
        if abs(abs(phase) - 1) > 1e-12:
            raise InvalidParameterError("global phase factor must have unit modulus")
        return TemporalEnvelope(self.samples * phase, self.grid)

    def shifted(self, delay: float) -> tuple["TemporalEnvelope", float]:
        """Envelope delayed by ``delay`` and renormalized, plus the weight pushed out of the window."""
        g = self.grid
        if not abs(delay) < g.T_W:
            raise InvalidParameterError(f"delay {delay!r} moves the envelope entirely outside [0, {g.T_W}]")
        if self.profile is not None:
            base = np.asarray(self.profile(g.nodes), dtype=complex)
            moved = np.asarray(self.profile(g.nodes - delay), dtype=complex)
        else:
            base = self.samples
            moved = (np.interp(g.nodes - delay, g.nodes, self.samples.real, left=0.0, right=0.0)
                     + 1j * np.interp(g.nodes - delay, g.nodes, self.samples.imag, left=0.0, right=0.0))
        base_norm = g.integrate(np.abs(base) ** 2).real
        moved_norm = g.integrate(np.abs(moved) ** 2).real
        if not moved_norm > 1e-300:
            raise InvalidParameterError(f"delayed envelope has no weight inside the window (delay {delay!r})")
        truncation = max(0.0, 1.0 - moved_norm / base_norm)
        return TemporalEnvelope(moved / np.sqrt(moved_norm), g, self.profile), truncation


def _check_same_grid(a: TimeGrid, b: TimeGrid):
    if a != b:
        raise InvalidParameterError(f"grid mismatch: {a!r} vs {b!r}")


def envelope_from_function(grid: TimeGrid, func: Callable[[np.ndarray], np.ndarray]) -> TemporalEnvelope:
    samples = np.asarray(func(grid.nodes), dtype=complex)
    norm = grid.integrate(np.abs(samples) ** 2).real
    if not norm > 0:
        raise InvalidParameterError("envelope vanishes on the grid")
    return TemporalEnvelope(samples / np.sqrt(norm), grid, func)


def gaussian_envelope(grid: TimeGrid, center: float, width: float, phase: float = 0.0) -> TemporalEnvelope:
    """Gaussian pulse whose intensity |f|^2 has standard deviation ``width``."""
    if not width > 0:
        raise InvalidParameterError(f"envelope width must be positive, got {width!r}")

    def profile(t):
        return np.exp(-((t - center) ** 2) / (4.0 * width**2) + 1j * phase)

    return envelope_from_function(grid, profile)


def envelope_from_samples(grid: TimeGrid, samples, normalize: bool = True) -> TemporalEnvelope:
    samples = np.asarray(samples, dtype=complex)
    if normalize:
        norm = grid.integrate(np.abs(samples) ** 2).real
        if not norm > 0:
            raise InvalidParameterError("envelope samples vanish")
        samples = samples / np.sqrt(norm)
    return TemporalEnvelope(samples, grid)


def mode_envelope(dec: SchmidtDecomposition, coefficients) -> TemporalEnvelope:
    """Superposition sum_i c_i psi_i; an int selects the single mode psi_index."""
    if isinstance(coefficients, (int, np.integer)):
        return TemporalEnvelope(dec.mode(int(coefficients)).astype(complex), dec.grid)
    c = np.asarray(coefficients, dtype=complex)
    if c.size > dec.retained_count:
        raise InvalidParameterError(f"{c.size} coefficients for {dec.retained_count} modes")
    return envelope_from_samples(dec.grid, dec.modes[:, : c.size] @ c)


@dataclass(frozen=True)
class ModeAmplitudes:
    coefficients: np.ndarray
    residual_norm: float

    @property
    def truncation_weight(self) -> float:
        return self.residual_norm**2


def project(envelope: TemporalEnvelope, dec: SchmidtDecomposition) -> ModeAmplitudes:
    """c_i = sum_k w_k psi_i(t_k) f(t_k), residual r^2 = 1 - sum |c_i|^2."""
    _check_same_grid(envelope.grid, dec.grid)
    c = dec.modes.T @ (dec.grid.weights * envelope.samples)
    r2 = 1.0 - float(np.sum(np.abs(c) ** 2))
    if r2 < -1e-12:
        raise InvalidParameterError(f"projection weight exceeds one by {-r2:.3g}; modes or envelope not normalized")
    return ModeAmplitudes(coefficients=c, residual_norm=float(np.sqrt(max(r2, 0.0))))


def write_spectrum_csv(dec: SchmidtDecomposition, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["index", "lambda", "sqrt_lambda"])
    for i, lam in enumerate(dec.eigenvalues, start=1):
        writer.writerow([i, format_float(lam), format_float(np.sqrt(lam))])


def write_modes_csv(dec: SchmidtDecomposition, fh, K: Optional[int] = None) -> None:
    K = dec.retained_count if K is None else K
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["node", "weight"] + [f"psi_{i}" for i in range(1, K + 1)])
    for t, w, row in zip(dec.grid.nodes, dec.grid.weights, dec.modes[:, :K]):
        writer.writerow([format_float(t), format_float(w)] + [format_float(v) for v in row])

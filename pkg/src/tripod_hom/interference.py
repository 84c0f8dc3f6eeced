"""Two-photon interference through the per-mode lossy memory channel.

In every Schmidt mode i the two readout stages act as a balanced beam
splitter followed by loss:

    e_{+,i} = sqrt(lambda_i) (e_{1,i} + e_{2,i}) / sqrt(2) + sqrt(1 - lambda_i) v_{+,i}
    e_{-,i} = sqrt(lambda_i) (e_{1,i} - e_{2,i}) / sqrt(2) + sqrt(1 - lambda_i) v_{-,i}

'+' labels the first readout stage (Omega_1 = Omega_2), '-' the second
(Omega_1 = -Omega_2). Photon counts n_+, n_- are summed over all modes.
Envelope weight outside the retained modes is treated as lost.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .core import format_float
from .errors import InsufficientModesError, InvalidParameterError, UndefinedConditionalWarning
from .schmidt import ModeAmplitudes, SchmidtDecomposition, TemporalEnvelope, project

OUTCOMES = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
OUTCOME_KEYS = ("p00", "p10", "p01", "p20", "p11", "p02")
DEFAULT_TRUNCATION_BOUND = 1e-6
MAX_ORACLE_MODES = 6


@dataclass(frozen=True)
class TwoPhotonInput:
    envelope_1: TemporalEnvelope
    envelope_2: TemporalEnvelope
    decomposition: SchmidtDecomposition

    def __post_init__(self):
        for env in (self.envelope_1, self.envelope_2):
            if env.grid != self.decomposition.grid:
                raise InvalidParameterError("envelopes must live on the decomposition's grid")

    def amplitudes(self, K: int) -> tuple[ModeAmplitudes, ModeAmplitudes]:
        dec = self.decomposition.truncated(K)
        return project(self.envelope_1, dec), project(self.envelope_2, dec)


@dataclass(frozen=True, eq=False)
class OutputStatistics:
    """Joint photon-number distribution of the two readout pulses.

    ``rho2`` is the two-photon block on {|2,0>, |1,1>, |0,2>} after tracing
    out which Schmidt modes the photons occupy (unnormalized).
    """

    p00: float
    p10: float
    p01: float
    p20: float
    p11: float
    p02: float
    rho2: np.ndarray
    mode_cutoff: int = 0
    truncation_weight: float = 0.0

    def __post_init__(self):
        rho2 = np.array(self.rho2, dtype=complex)
        if rho2.shape != (3, 3):
            raise InvalidParameterError("rho2 must be 3x3")
        rho2.flags.writeable = False
        object.__setattr__(self, "rho2", rho2)

    @property
    def probabilities(self) -> dict:
        return {key: getattr(self, key) for key in OUTCOME_KEYS}

    def probability(self, n_plus: int, n_minus: int) -> float:
        return getattr(self, f"p{n_plus}{n_minus}")

    @property
    def total(self) -> float:
        return sum(self.probabilities.values())

    def check(self, tol: float = 1e-12) -> None:
        """Raise AssertionError if probability conservation or rho2 consistency fails."""
        assert abs(self.total - 1) <= tol, f"probabilities sum to {self.total!r}"
        diag = np.real(np.diag(self.rho2))
        assert np.allclose(diag, [self.p20, self.p11, self.p02], rtol=0, atol=tol), "rho2 diagonal mismatch"
        assert np.allclose(self.rho2, self.rho2.conj().T, rtol=0, atol=tol), "rho2 not Hermitian"
        assert np.linalg.eigvalsh(self.rho2)[0] >= -1e-10, "rho2 not positive semidefinite"

    def max_deviation(self, other: "OutputStatistics") -> float:
        return max(abs(getattr(self, k) - getattr(other, k)) for k in OUTCOME_KEYS)


@dataclass(frozen=True)
class HomMetrics:
    coincidence: float
    total_efficiency: float
    bunching_conditional: Optional[float]
    noon_fidelity: Optional[float]

    @property
    def conditional_defined(self) -> bool:
        return self.bunching_conditional is not None

    def as_dict(self) -> dict:
        """Metric values; undefined conditional metrics are left out."""
        out = {
            "coincidence": self.coincidence,
            "bunching_conditional": self.bunching_conditional,
            "noon_fidelity": self.noon_fidelity,
            "total_efficiency": self.total_efficiency,
        }
        return {k: v for k, v in out.items() if v is not None}


def _resolve_cutoff(inp: TwoPhotonInput, mode_cutoff: Optional[int]) -> int:
    retained = inp.decomposition.retained_count
    K = retained if mode_cutoff is None else mode_cutoff
    if int(K) != K or not 1 <= K <= retained:
        raise InvalidParameterError(f"mode cutoff must lie in 1..{retained}, got {mode_cutoff!r}")
    return int(K)


def analytic_statistics(inp: TwoPhotonInput, mode_cutoff: Optional[int] = None,
                        truncation_bound: float = DEFAULT_TRUNCATION_BOUND) -> OutputStatistics:
    """Closed-form output statistics for two independent single photons.

    Photon 1 (channel 1) and photon 2 (channel 2) end up in orthogonal
    single-particle states alpha, beta. For detector groups s in {+, -, loss}
    with a_s = <alpha|P_s|alpha>, b_s = <beta|P_s|beta>, x_s = <alpha|P_s|beta>:

        P(s, s)  = a_s b_s + |x_s|^2
        P(s, s') = a_s b_s' + a_s' b_s + 2 Re(x_s conj(x_s'))
    """
    K = _resolve_cutoff(inp, mode_cutoff)
    amp1, amp2 = inp.amplitudes(K)
    truncation = amp1.truncation_weight + amp2.truncation_weight
    if truncation > truncation_bound:
        raise InsufficientModesError(
            f"envelope weight {truncation:.3g} lies outside the first {K} Schmidt modes "
            f"(bound {truncation_bound:.3g}); raise the mode cutoff or lower the decomposition cutoff",
            truncation)
    lam = inp.decomposition.eigenvalues[:K]
    c1, c2 = amp1.coefficients, amp2.coefficients

    half = 0.5 * lam
    a_plus = a_minus = float(np.sum(half * np.abs(c1) ** 2))
    b_plus = b_minus = float(np.sum(half * np.abs(c2) ** 2))
    x_plus = complex(np.sum(half * np.conj(c1) * c2))
    x_minus = -x_plus
    a = {"+": a_plus, "-": a_minus, "l": 1.0 - a_plus - a_minus}
    b = {"+": b_plus, "-": b_minus, "l": 1.0 - b_plus - b_minus}
    x = {"+": x_plus, "-": x_minus, "l": -(x_plus + x_minus)}

    def same(s):
        return a[s] * b[s] + abs(x[s]) ** 2

    def split(s, t):
        return a[s] * b[t] + a[t] * b[s] + 2.0 * (x[s] * np.conj(x[t])).real

    # Two-photon block from the first-quantized wavefunction over (path, mode).
    root = np.sqrt(half)
    alpha = np.stack([c1 * root, c1 * root])
    beta = np.stack([c2 * root, -c2 * root])
    psi = (np.einsum("ai,bj->aibj", alpha, beta) + np.einsum("ai,bj->aibj", beta, alpha)) / math.sqrt(2.0)
    rho_path = np.einsum("aibj,cidj->abcd", psi, psi.conj()).reshape(4, 4)
    rho2 = _path_to_fock_block(rho_path)

    return OutputStatistics(
        p00=_prob(same("l")), p10=_prob(split("+", "l")), p01=_prob(split("-", "l")),
        p20=_prob(same("+")), p11=_prob(split("+", "-")), p02=_prob(same("-")),
        rho2=rho2, mode_cutoff=K, truncation_weight=truncation,
    )


def _prob(value) -> float:
    # clip rounding excursions of order 1e-16
    return min(max(float(np.real(value)), 0.0), 1.0)


_SQRT_HALF = 1.0 / math.sqrt(2.0)
# Columns: |++>, (|+-> + |-+>)/sqrt2, |-->, (|+-> - |-+>)/sqrt2 in the ordered path basis ++, +-, -+, --.
_PATH_BASIS = np.array([
    [1.0, 0.0, 0.0, 0.0],
    [0.0, _SQRT_HALF, 0.0, _SQRT_HALF],
    [0.0, _SQRT_HALF, 0.0, -_SQRT_HALF],
    [0.0, 0.0, 1.0, 0.0],
])


def _path_to_fock_block(rho_path: np.ndarray) -> np.ndarray:
    # The path density matrix commutes with the exchange operator, so the
    # antisymmetric (1,1) component carries no coherence and only adds to P(1,1).
    rotated = _PATH_BASIS.T @ rho_path @ _PATH_BASIS
    rho2 = rotated[:3, :3].copy()
    rho2[1, 1] += rotated[3, 3]
    return rho2


def _channel_matrix(lam: np.ndarray) -> np.ndarray:
    """Unitary mode transformation (rows = outputs, columns = inputs).

    Inputs:  e1_i, e2_i, v+_i, v-_i, residual_1, residual_2
    Outputs: +_i, -_i, loss+_i, loss-_i, residual_1, residual_2
    """
    K = lam.size
    M = np.zeros((4 * K + 2, 4 * K + 2))
    s = _SQRT_HALF
    for i, li in enumerate(lam):
        t, r = math.sqrt(li), math.sqrt(max(0.0, 1.0 - li))
        e1, e2, vp, vm = i, K + i, 2 * K + i, 3 * K + i
        plus, minus, lp, lm = i, K + i, 2 * K + i, 3 * K + i
        M[plus, [e1, e2, vp]] = [t * s, t * s, r]
        M[minus, [e1, e2, vm]] = [t * s, -t * s, r]
        M[lp, [e1, e2, vp]] = [r * s, r * s, -t]
        M[lm, [e1, e2, vm]] = [r * s, -r * s, -t]
    M[4 * K, 4 * K] = M[4 * K + 1, 4 * K + 1] = 1.0
    return M


def _create(state: dict, vector: np.ndarray) -> dict:
    """Apply sum_j vector_j a_j^dagger to a Fock-basis state {occupations: amplitude}."""
    out: dict = {}
    nonzero = np.flatnonzero(vector)
    for occ, amp in state.items():
        for j in nonzero:
            new = list(occ)
            new[j] += 1
            key = tuple(new)
            out[key] = out.get(key, 0.0) + amp * vector[j] * math.sqrt(new[j])
    return out


def _apply_passive(state: dict, M: np.ndarray) -> dict:
    """Map every input Fock state prod_j (b_j^dag)^n_j / sqrt(n_j!) |0> through b_j^dag -> sum_o M_oj a_o^dag."""
    vacuum = tuple([0] * M.shape[0])
    out: dict = {}
    for occ, amp in state.items():
        term = {vacuum: amp / math.sqrt(math.prod(math.factorial(n) for n in occ))}
        for j, n in enumerate(occ):
            for _ in range(n):
                term = _create(term, M[:, j])
        for key, value in term.items():
            out[key] = out.get(key, 0.0) + value
    return out


def fock_oracle(inp: TwoPhotonInput, mode_cutoff: int) -> OutputStatistics:
    """Brute-force occupation-basis simulation of the same channel, for validation."""
    if int(mode_cutoff) != mode_cutoff or not 1 <= mode_cutoff <= MAX_ORACLE_MODES:
        raise InvalidParameterError(f"oracle supports 1..{MAX_ORACLE_MODES} modes, got {mode_cutoff!r}")
    K = _resolve_cutoff(inp, mode_cutoff)
    amp1, amp2 = inp.amplitudes(K)
    lam = inp.decomposition.eigenvalues[:K]
    M = _channel_matrix(lam)
    if not np.allclose(M @ M.T, np.eye(M.shape[0]), atol=1e-13):
        raise AssertionError("channel dilation is not unitary")

    size = M.shape[1]
    photon_1 = np.zeros(size, dtype=complex)
    photon_1[:K] = amp1.coefficients
    photon_1[4 * K] = amp1.residual_norm
    photon_2 = np.zeros(size, dtype=complex)
    photon_2[K:2 * K] = amp2.coefficients
    photon_2[4 * K + 1] = amp2.residual_norm

    state_in = _create(_create({tuple([0] * size): 1.0 + 0j}, photon_1), photon_2)
    state_out = _apply_passive(state_in, M)

    probs = dict.fromkeys(OUTCOMES, 0.0)
    # two-photon sector amplitudes keyed by the Schmidt-mode occupation pattern
    sector_20: dict = {}
    sector_02: dict = {}
    cross: dict = {}  # (i, j) -> amplitude of a+_i^dag a-_j^dag |0>
    for occ, amp in state_out.items():
        plus, minus = occ[:K], occ[K:2 * K]
        n_plus, n_minus = sum(plus), sum(minus)
        probs[(n_plus, n_minus)] += abs(amp) ** 2
        if n_plus == 2:
            sector_20[plus] = sector_20.get(plus, 0) + amp
        elif n_minus == 2:
            sector_02[minus] = sector_02.get(minus, 0) + amp
        elif n_plus == 1 and n_minus == 1:
            key = (plus.index(1), minus.index(1))
            cross[key] = cross.get(key, 0) + amp

    rho2 = np.zeros((3, 3), dtype=complex)
    for pair in combinations_with_replacement(range(K), 2):
        pattern = tuple(pair.count(m) for m in range(K))
        i, j = pair
        if i == j:
            sym = cross.get((i, i), 0)
        else:
            sym = (cross.get((i, j), 0) + cross.get((j, i), 0)) * _SQRT_HALF
        vec = np.array([sector_20.get(pattern, 0), sym, sector_02.get(pattern, 0)])
        rho2 += np.outer(vec, vec.conj())
    # antisymmetric (1,1) states only add population
    rho2[1, 1] = sum(abs(v) ** 2 for v in cross.values())

    return OutputStatistics(
        p00=_prob(probs[(0, 0)]), p10=_prob(probs[(1, 0)]), p01=_prob(probs[(0, 1)]),
        p20=_prob(probs[(2, 0)]), p11=_prob(probs[(1, 1)]), p02=_prob(probs[(0, 2)]),
        rho2=rho2, mode_cutoff=K,
        truncation_weight=amp1.truncation_weight + amp2.truncation_weight,
    )


_NOON = np.array([1.0, 0.0, -1.0]) * _SQRT_HALF
UNDEFINED_TRACE = 1e-300


def hom_metrics(stats: OutputStatistics) -> HomMetrics:
    trace = stats.p20 + stats.p11 + stats.p02
    if trace <= UNDEFINED_TRACE:
        warnings.warn("two-photon sector is empty; conditional metrics undefined",
                      UndefinedConditionalWarning, stacklevel=2)
        return HomMetrics(coincidence=stats.p11, total_efficiency=float(trace),
                          bunching_conditional=None, noon_fidelity=None)
    fidelity = float(np.real(_NOON @ stats.rho2 @ _NOON)) / float(np.real(np.trace(stats.rho2)))
    return HomMetrics(
        coincidence=stats.p11,
        total_efficiency=min(float(trace), 1.0),
        bunching_conditional=float((stats.p20 + stats.p02) / trace),
        noon_fidelity=min(max(fidelity, 0.0), 1.0),
    )


class DelayPoint(NamedTuple):
    delay: float
    metrics: HomMetrics
    statistics: OutputStatistics
    overlap: float
    truncation_weight: float


def delay_sweep(dec: SchmidtDecomposition, base_envelope: TemporalEnvelope, delays: Sequence[float],
                mode_cutoff: Optional[int] = None,
                truncation_bound: float = DEFAULT_TRUNCATION_BOUND) -> list[DelayPoint]:
    """HOM dip: photon 2 is photon 1's envelope delayed by each value in ``delays``.

    ``overlap`` is |<f_delayed|f>|^2; ``truncation_weight`` is the part of the
    delayed pulse pushed out of the write window before renormalization.
    """
    points = []
    for delay in delays:
        moved, cut = base_envelope.shifted(float(delay))
        stats = analytic_statistics(TwoPhotonInput(base_envelope, moved, dec), mode_cutoff, truncation_bound)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UndefinedConditionalWarning)
            metrics = hom_metrics(stats)
        points.append(DelayPoint(float(delay), metrics, stats, abs(base_envelope.overlap(moved)) ** 2, cut))
    return points


def statistics_to_dict(stats: OutputStatistics, metrics: Optional[HomMetrics] = None) -> dict:
    out = {key: float(value) for key, value in stats.probabilities.items()}
    out["rho2"] = {
        "real": [float(v) for v in stats.rho2.real.ravel()],
        "imag": [float(v) for v in stats.rho2.imag.ravel()],
    }
    if metrics is not None:
        out["metrics"] = metrics.as_dict()
    return out


def statistics_to_json(stats: OutputStatistics, metrics: Optional[HomMetrics] = None, **extra) -> str:
    payload = statistics_to_dict(stats, metrics)
    payload.update(extra)
    return json.dumps(payload, indent=2, sort_keys=True)


SWEEP_COLUMNS = ("delay", "overlap", "truncation_weight") + OUTCOME_KEYS + (
    "coincidence", "bunching_conditional", "noon_fidelity", "total_efficiency")


def _cell(value) -> str:
    return "" if value is None else format_float(value)


def write_sweep_csv(points: Sequence[DelayPoint], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for p in points:
        m = p.metrics
        writer.writerow([_cell(p.delay), _cell(p.overlap), _cell(p.truncation_weight)]
                        + [_cell(v) for v in p.statistics.probabilities.values()]
                        + [_cell(m.coincidence), _cell(m.bunching_conditional),
                           _cell(m.noon_fidelity), _cell(m.total_efficiency)])

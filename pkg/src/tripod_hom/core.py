"""Physical parameters, dimensionless units and time-grid quadrature."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import FastProtocolWarning, InvalidParameterError

QUADRATURE_RULES = ("gauss-legendre", "trapezoid")

# (Omega_1, Omega_2) in units of Omega for each stage of the protocol.
DRIVING_STAGES = {
    "write-1": (1.0, 0.0),
    "write-2": (0.0, 1.0),
    "read+": (1.0, 1.0),
    "read-": (1.0, -1.0),
}


@dataclass(frozen=True)
class UnitsConfig:
    """Physical parameters of the tripod memory cell.

    Frequencies in rad/s, ``linear_concentration`` in atoms per unit length,
    ``cell_length`` in the same length unit, ``write_time`` in seconds.
    The readout time equals the write time.
    """

    rabi_frequency: float
    coupling_constant: float
    linear_concentration: float
    cell_length: float
    write_time: float
    relaxation_rate: float
    fast_protocol_threshold: float = 0.1

    def __post_init__(self):
        for name in ("rabi_frequency", "coupling_constant", "linear_concentration",
                     "cell_length", "write_time", "relaxation_rate",
                     "fast_protocol_threshold"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidParameterError(f"{name} must be a positive finite number, got {value!r}")
        if not self.fast_protocol_ok:
            warnings.warn(
                f"gamma*T_W = {self.relaxation_rate * self.write_time:.3g} is not below "
                f"{self.fast_protocol_threshold}; fast-memory kernel assumptions are stretched",
                FastProtocolWarning,
                stacklevel=3,
            )

    @property
    def read_time(self) -> float:
        return self.write_time

    @property
    def fast_protocol_ok(self) -> bool:
        return self.relaxation_rate * self.write_time < self.fast_protocol_threshold

    def stage_rabi(self, stage: str) -> tuple[float, float]:
        """Driving-field Rabi frequencies (Omega_1, Omega_2) for a protocol stage."""
        try:
            s1, s2 = DRIVING_STAGES[stage]
        except KeyError:
            raise InvalidParameterError(f"unknown stage {stage!r}; expected one of {sorted(DRIVING_STAGES)}") from None
        return s1 * self.rabi_frequency, s2 * self.rabi_frequency

    @classmethod
    def from_dimensionless(cls, params: "DimensionlessParams", rabi_frequency, coupling_constant,
                           linear_concentration, relaxation_rate, **kwargs) -> "UnitsConfig":
        """Physical configuration reproducing ``params`` for the given Omega, g, N, gamma."""
        return cls(
            rabi_frequency=rabi_frequency,
            coupling_constant=coupling_constant,
            linear_concentration=linear_concentration,
            cell_length=params.L * rabi_frequency / (2.0 * coupling_constant**2 * linear_concentration),
            write_time=params.T_W / rabi_frequency,
            relaxation_rate=relaxation_rate,
            **kwargs,
        )


@dataclass(frozen=True)
class DimensionlessParams:
    T_W: float
    L: float

    def __post_init__(self):
        for name in ("T_W", "L"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidParameterError(f"{name} must be a positive finite number, got {value!r}")


def to_dimensionless(units: UnitsConfig) -> DimensionlessParams:
    """Scale time by Omega and length by 2 g^2 N / Omega."""
    if not isinstance(units, UnitsConfig):
        raise InvalidParameterError("expected a UnitsConfig")
    omega = units.rabi_frequency
    return DimensionlessParams(
        T_W=omega * units.write_time,
        L=2.0 * units.coupling_constant**2 * units.linear_concentration * units.cell_length / omega,
    )


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Quadrature nodes and weights on the write window [0, T_W]."""

    nodes: np.ndarray
    weights: np.ndarray
    T_W: float
    rule: str = field(default="external")

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size < 2:
            raise InvalidParameterError("grid needs matching 1-D nodes and weights with at least 2 points")
        if not self.T_W > 0:
            raise InvalidParameterError(f"T_W must be positive, got {self.T_W!r}")
        if np.any(np.diff(nodes) <= 0):
            raise InvalidParameterError("grid nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise InvalidParameterError("quadrature weights must be positive")
        if nodes[0] < -1e-12 * self.T_W or nodes[-1] > self.T_W * (1 + 1e-12):
            raise InvalidParameterError("grid nodes must lie in [0, T_W]")
        if abs(weights.sum() - self.T_W) > 1e-12 * self.T_W:
            raise InvalidParameterError(
                f"weights sum to {weights.sum()!r}, expected T_W = {self.T_W!r}")
        nodes.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self) -> int:
        return self.nodes.size

    def integrate(self, values) -> complex | float:
        return np.dot(self.weights, values)

    def __eq__(self, other):
        if not isinstance(other, TimeGrid):
            return NotImplemented
        return (self is other) or (
            self.T_W == other.T_W
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = object.__hash__

    def __repr__(self):
        return f"TimeGrid(n={self.n}, T_W={self.T_W!r}, rule={self.rule!r})"


def make_grid(n: int, T_W: float, rule: str = "gauss-legendre") -> TimeGrid:
    if int(n) != n or n < 2:
        raise InvalidParameterError(f"grid needs n >= 2 points, got {n!r}")
    n = int(n)
    if not (np.isfinite(T_W) and T_W > 0):
        raise InvalidParameterError(f"T_W must be positive, got {T_W!r}")
    if rule == "gauss-legendre":
        x, w = np.polynomial.legendre.leggauss(n)
        nodes = 0.5 * T_W * (x + 1.0)
        weights = 0.5 * T_W * w
    elif rule == "trapezoid":
        nodes = np.linspace(0.0, T_W, n)
        h = T_W / (n - 1)
        weights = np.full(n, h)
        weights[0] = weights[-1] = 0.5 * h
    else:
        raise InvalidParameterError(f"unknown quadrature rule {rule!r}; expected one of {QUADRATURE_RULES}")
    return TimeGrid(nodes=nodes, weights=weights, T_W=float(T_W), rule=rule)


def format_float(x: float) -> str:
    """17 significant digits, enough for an exact float round trip."""
    return f"{float(x):.17g}"

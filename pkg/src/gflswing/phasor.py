"""Complex-phasor arithmetic, per-unit bases and continuous-angle bookkeeping.

Angles are exchanged in degrees (the usual convention in relay settings and
swing studies) and converted to radians only inside trigonometric calls.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

__all__ = [
    "Phasor",
    "PerUnitBase",
    "UnwrappedAngle",
    "wrap_degrees",
    "unwrap_degrees",
]


def wrap_degrees(angle: float) -> float:
    """Wrap an angle in degrees to the interval (-180, 180]."""
    a = math.fmod(angle, 360.0)
    if a > 180.0:
        a -= 360.0
    elif a <= -180.0:
        a += 360.0
    return a


def unwrap_degrees(prev: float, wrapped: float) -> float:
    """Continue a running angle with a new wrapped measurement.

    ``prev`` is the accumulated (continuous) angle; ``wrapped`` is the new
    measurement in (-180, 180].  The result is the branch of ``wrapped``
    closest to ``prev``, so successive values never jump across the +-180
    seam.  Valid while the true per-step change stays below 180 degrees,
    which the simulator step size guarantees by a wide margin.
    """
    return prev + wrap_degrees(wrapped - prev)


@dataclass(frozen=True)
class Phasor:
    """A complex phasor with rectangular storage and polar views.

    The unit (p.u., volt, ampere or ohm) is contextual; conversions between
    physical units and per-unit go through :class:`PerUnitBase`.
    """

    re: float
    im: float

    @classmethod
    def from_polar(cls, magnitude: float, angle_deg: float) -> "Phasor":
        """Build a phasor from magnitude and angle in degrees."""
        if magnitude < 0.0:
            raise ValueError(f"phasor magnitude must be >= 0, got {magnitude}")
        z = cmath.rect(magnitude, math.radians(angle_deg))
        return cls(z.real, z.imag)

    @classmethod
    def from_complex(cls, z: complex) -> "Phasor":
        return cls(z.real, z.imag)

    @property
    def z(self) -> complex:
        """The phasor as a plain complex number."""
        return complex(self.re, self.im)

    @property
    def magnitude(self) -> float:
        return abs(self.z)

    @property
    def angle_deg(self) -> float:
        """Angle in degrees wrapped to (-180, 180]; 0 for the zero phasor."""
        if self.re == 0.0 and self.im == 0.0:
            return 0.0
        a = math.degrees(math.atan2(self.im, self.re))
        return wrap_degrees(a)

    def to_polar(self) -> tuple[float, float]:
        return self.magnitude, self.angle_deg

    def __abs__(self) -> float:
        return self.magnitude

    def __add__(self, other: "Phasor | complex") -> "Phasor":
        return Phasor.from_complex(self.z + _as_complex(other))

    def __sub__(self, other: "Phasor | complex") -> "Phasor":
        return Phasor.from_complex(self.z - _as_complex(other))

    def __mul__(self, other: "Phasor | complex | float") -> "Phasor":
        return Phasor.from_complex(self.z * _as_complex(other))

    def __truediv__(self, other: "Phasor | complex | float") -> "Phasor":
        return Phasor.from_complex(self.z / _as_complex(other))


def _as_complex(x) -> complex:
    if isinstance(x, Phasor):
        return x.z
    return complex(x)


# Quantity kinds accepted by the per-unit conversions.
_KINDS = ("impedance", "voltage", "current")


@dataclass(frozen=True)
class PerUnitBase:
    """Three-phase per-unit base: line-to-line voltage, apparent power, frequency.

    The impedance base is v_base**2 / s_base and the current base uses the
    three-phase convention s_base / (sqrt(3) * v_base).
    """

    v_base: float  # line-to-line voltage base, V
    s_base: float  # power base, VA
    f0: float      # nominal frequency, Hz

    def __post_init__(self) -> None:
        if self.v_base <= 0.0 or self.s_base <= 0.0:
            raise ValueError("voltage and power bases must be positive")
        if self.f0 <= 0.0:
            raise ValueError(f"nominal frequency must be positive, got {self.f0}")

    @property
    def z_base(self) -> float:
        return self.v_base ** 2 / self.s_base

    @property
    def i_base(self) -> float:
        return self.s_base / (math.sqrt(3.0) * self.v_base)

    @property
    def omega0(self) -> float:
        """Nominal angular frequency, rad/s."""
        return 2.0 * math.pi * self.f0

    def _scale(self, kind: str) -> float:
        if kind == "impedance":
            return self.z_base
        if kind == "voltage":
            return self.v_base
        if kind == "current":
            return self.i_base
        raise ValueError(f"unknown quantity kind {kind!r}; expected one of {_KINDS}")

    def to_per_unit(self, x: Phasor, kind: str) -> Phasor:
        """Convert a physical-unit phasor (ohm, volt or ampere) to per-unit."""
        return Phasor.from_complex(x.z / self._scale(kind))

    def from_per_unit(self, x: Phasor, kind: str) -> Phasor:
        """Convert a per-unit phasor back to physical units."""
        return Phasor.from_complex(x.z * self._scale(kind))

    def reactance_of_mh(self, l_mh: float) -> float:
        """Reactance in ohms of an inductance given in millihenry at f0."""
        return self.omega0 * l_mh * 1e-3


@dataclass(frozen=True)
class UnwrappedAngle:
    """A continuous angle in degrees that tracks across the +-180 seam."""

    value: float

    def update(self, wrapped_deg: float) -> "UnwrappedAngle":
        """Absorb a new wrapped measurement, staying on the continuous branch."""
        return UnwrappedAngle(unwrap_degrees(self.value, wrapped_deg))

    @property
    def wrapped(self) -> float:
        return wrap_degrees(self.value)

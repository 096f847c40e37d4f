"""Diamond-structure crystal math.

Momentum transfer, reflection classification, structure factors, the
Debye-Waller correction, and the Q-dependent scattering length

    b(Q) = b_nuclear - b_ne * Z * [1 - f(Q)]

whose tiny electrostatic term carries the neutron charge-radius signal.
All operations are pure functions of immutable inputs.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from . import formfactor
from .errors import ForbiddenReflection
from .formfactor import FormFactorTable


class ReflectionClass(enum.Enum):
    """Diamond-structure reflection classes by Miller-index parity.

    Mixed parity is extinct for any fcc lattice; for all-even or all-odd
    indices the two-atom basis gives |1 + i^(h+k+l)| = 0, sqrt(2) or 2.
    """

    DISALLOWED = "disallowed"  # mixed parity (fcc extinction)
    FORBIDDEN = "forbidden"    # h+k+l = 2 mod 4 (basis interference)
    WEAK = "weak"              # h+k+l odd
    STRONG = "strong"          # h+k+l = 0 mod 4

    def __str__(self):
        return self.value


# |F| = UNIT_CELL_ATOMS * |1 + i^(h+k+l)| * b_meas
_CLASS_AMPLITUDE = {
    ReflectionClass.DISALLOWED: 0.0,
    ReflectionClass.FORBIDDEN: 0.0,
    ReflectionClass.WEAK: 4.0 * math.sqrt(2.0),
    ReflectionClass.STRONG: 8.0,
}


@dataclass(frozen=True, order=True)
class Reflection:
    """Miller indices (h, k, l)."""

    h: int
    k: int
    l: int

    def __post_init__(self):
        for v in (self.h, self.k, self.l):
            if v != int(v):
                raise ValueError("Miller indices must be integers")

    @property
    def n_sq(self) -> int:
        """h^2 + k^2 + l^2."""
        return self.h * self.h + self.k * self.k + self.l * self.l

    def canonical(self) -> "Reflection":
        """Equivalent reflection with h >= k >= l >= 0."""
        h, k, l = sorted((abs(self.h), abs(self.k), abs(self.l)), reverse=True)
        return Reflection(h, k, l)

    def scaled(self, n: int) -> "Reflection":
        return Reflection(n * self.h, n * self.k, n * self.l)

    def primitive(self) -> tuple["Reflection", int]:
        """Direction generator along the same reciprocal-lattice ray.

        Returns (g, m) with self = m * g and gcd(g) = 1. For (0,0,0) the
        generator is the zero reflection with m = 1.
        """
        g = math.gcd(math.gcd(abs(self.h), abs(self.k)), abs(self.l))
        if g == 0:
            return self, 1
        return Reflection(self.h // g, self.k // g, self.l // g), g

    def label(self) -> str:
        if max(abs(self.h), abs(self.k), abs(self.l)) < 10 and min(self.h, self.k, self.l) >= 0:
            return f"{self.h}{self.k}{self.l}"
        return f"{self.h},{self.k},{self.l}"


def classify(r: Reflection) -> ReflectionClass:
    """Assign the reflection class; the four cases partition all triples."""
    parities = {r.h % 2, r.k % 2, r.l % 2}
    if len(parities) > 1:
        return ReflectionClass.DISALLOWED
    s = r.h + r.k + r.l
    if s % 2 != 0:
        return ReflectionClass.WEAK
    return ReflectionClass.STRONG if s % 4 == 0 else ReflectionClass.FORBIDDEN


@dataclass(frozen=True)
class CrystalSpec:
    """A cubic diamond-structure crystal with its measured bulk constants.

    a0                lattice constant, angstrom
    Z                 atomic number
    b_nuclear         forward nuclear scattering length, fm (one sigma)
    B                 temperature factor, angstrom^2 (one sigma)
    """

    name: str
    a0: float
    Z: int
    b_nuclear: float
    sigma_b_nuclear: float
    B: float
    sigma_B: float
    structure: str = "diamond"

    def __post_init__(self):
        if self.a0 <= 0:
            raise ValueError("a0 must be positive")
        if self.Z < 1:
            raise ValueError("Z must be >= 1")
        if self.b_nuclear <= 0:
            raise ValueError("b_nuclear must be positive")
        if self.B < 0:
            raise ValueError("B must be non-negative")
        if self.structure != "diamond":
            raise ValueError(f"unsupported structure {self.structure!r}")


@dataclass(frozen=True)
class ScatteringModel:
    """Parameters of the Q-dependent scattering length b(Q).

    b_nuclear  forward nuclear value, fm
    b_ne       neutron-electron scattering length, fm (signed, ~1e-3 fm)
    Z          atomic number
    B          temperature factor, angstrom^2
    form_factor  normalized atomic form factor table
    """

    b_nuclear: float
    b_ne: float
    Z: int
    B: float
    form_factor: FormFactorTable


def q_over_4pi(crystal: CrystalSpec, r: Reflection) -> float:
    """Q/4pi = sqrt(h^2+k^2+l^2) / (2 a0), in 1/angstrom."""
    return math.sqrt(r.n_sq) / (2.0 * crystal.a0)


def debye_waller(B: float, q_over_4pi: float) -> float:
    """Thermal attenuation exp[-B (Q/4pi)^2]; 1 at Q=0 or B=0."""
    if B < 0:
        raise ValueError("B must be non-negative")
    return math.exp(-B * q_over_4pi * q_over_4pi)


def b_of_q(m: ScatteringModel, q_over_4pi: float) -> float:
    """Scattering length b(Q) = b_nuclear - b_ne Z [1 - f(Q)], in fm."""
    if q_over_4pi == 0.0:
        return m.b_nuclear
    f = m.form_factor.f_at(q_over_4pi)
    return m.b_nuclear - m.b_ne * m.Z * (1.0 - f)


def b_meas(m: ScatteringModel, q_over_4pi: float) -> float:
    """Measured (thermally attenuated) value b(Q) exp[-B (Q/4pi)^2], fm."""
    return b_of_q(m, q_over_4pi) * debye_waller(m.B, q_over_4pi)


def b_from_b_meas(b_meas_value: float, B: float, q_over_4pi: float) -> float:
    """Invert the Debye-Waller attenuation; exact inverse of b_meas."""
    return b_meas_value / debye_waller(B, q_over_4pi)


def structure_factor_magnitude(crystal: CrystalSpec, m: ScatteringModel, r: Reflection) -> float:
    """|F_hkl| in fm: 4 |1 + i^(h+k+l)| b_meas(Q_hkl); 0 if extinct."""
    amp = _CLASS_AMPLITUDE[classify(r)]
    if amp == 0.0:
        return 0.0
    return amp * b_meas(m, q_over_4pi(crystal, r))


def require_observable(r: Reflection) -> ReflectionClass:
    """Return the class, raising ForbiddenReflection for extinct ones."""
    cls = classify(r)
    if cls in (ReflectionClass.DISALLOWED, ReflectionClass.FORBIDDEN):
        raise ForbiddenReflection(f"({r.label()}) is {cls} (|F| = 0)")
    return cls


SILICON = CrystalSpec(
    name="Si", a0=5.43072, Z=14,
    b_nuclear=4.1507, sigma_b_nuclear=0.0002,
    B=0.4613, sigma_B=0.0027,
)

GERMANIUM = CrystalSpec(
    name="Ge", a0=5.6575, Z=32,
    b_nuclear=8.1929, sigma_b_nuclear=0.0017,
    B=0.57, sigma_B=0.01,
)

BUILTIN_CRYSTALS = {"Si": SILICON, "Ge": GERMANIUM}


def scattering_model(crystal: CrystalSpec, b_ne: float,
                     table: FormFactorTable | None = None,
                     B: float | None = None) -> ScatteringModel:
    """Build a ScatteringModel for a crystal and a b_ne hypothesis."""
    if table is None:
        try:
            table = formfactor.BUILTIN_TABLES[crystal.name]
        except KeyError:
            raise ValueError(f"no built-in form-factor table for {crystal.name}; pass one")
    return ScatteringModel(
        b_nuclear=crystal.b_nuclear, b_ne=b_ne, Z=crystal.Z,
        B=crystal.B if B is None else B, form_factor=table,
    )

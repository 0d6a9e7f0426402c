"""
PT-symmetric 2*pi-periodic potentials given as finite Fourier series

    u(x) = sum_l c_l exp(i l x),   c_l real,   c_0 = 0.

Real coefficients are exactly the condition u(x) = conj(u(-x)) for this form. c_l and c_{-l} are independent,
so one-sided potentials (all l > 0) are allowed and stored without their missing half.
"""
import json
import math
from dataclasses import dataclass
from typing import Dict, Mapping, Tuple

import numpy as np

from ptbloch.config import PERIOD
from ptbloch.errors import InvalidPotential

PT_CHECK_POINTS = 64
PT_CHECK_TOL = 1e-14


@dataclass(frozen=True)
class PotentialSpec:
    """
    Sparse Fourier coefficients, sorted by index.

    The plain constructor is the raw one: it accepts complex values so that non-PT inputs can be represented
    and rejected by pt_check. Use from_coefficients / from_dict / from_json to get a validated PT potential.
    """
    terms: Tuple[Tuple[int, complex], ...] = ()

    def __post_init__(self):
        cleaned = {}
        for index, value in self.terms:
            if int(index) != index:
                raise InvalidPotential(f"Fourier index {index!r} is not an integer")
            index = int(index)
            if index in cleaned:
                raise InvalidPotential(f"Fourier index {index} given twice")
            if index == 0:
                if value != 0:
                    raise InvalidPotential("c_0 must be zero; shift the energy instead of the potential")
                continue
            if not np.isfinite(value):
                raise InvalidPotential(f"coefficient c_{index} is not finite: {value!r}")
            cleaned[index] = value
        object.__setattr__(self, "terms", tuple(sorted(cleaned.items())))
        object.__setattr__(self, "_indices", np.array([i for i, _ in self.terms], dtype=float))
        object.__setattr__(self, "_values", np.array([v for _, v in self.terms], dtype=complex))

    @classmethod
    def from_coefficients(cls, coefficients: Mapping[int, float]) -> 'PotentialSpec':
        terms = []
        for index, value in coefficients.items():
            if isinstance(value, complex) or (isinstance(value, np.complexfloating)):
                if value.imag != 0:
                    raise InvalidPotential(f"coefficient c_{index} = {value} is not real (PT symmetry)")
                value = value.real
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise InvalidPotential(f"coefficient c_{index} = {value!r} is not a real number")
            terms.append((index, value))
        return cls(tuple(terms))

    @classmethod
    def from_dict(cls, data: Mapping) -> 'PotentialSpec':
        """JSON form: {"coefficients": {"1": 0.2, "-1": -0.05}}."""
        if not isinstance(data, Mapping) or "coefficients" not in data:
            raise InvalidPotential("potential must be a mapping with a 'coefficients' entry")
        raw = data["coefficients"] or {}
        if not isinstance(raw, Mapping):
            raise InvalidPotential("'coefficients' must map integer indices to real values")
        coefficients = {}
        for key, value in raw.items():
            try:
                index = int(str(key).strip())
            except ValueError:
                raise InvalidPotential(f"coefficient key {key!r} is not a decimal integer")
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise InvalidPotential(f"coefficient {key!r} must be a finite real number, got {value!r}")
            coefficients[index] = value
        return cls.from_coefficients(coefficients)

    @classmethod
    def from_json(cls, text: str) -> 'PotentialSpec':
        return cls.from_dict(json.loads(text))

    @classmethod
    def free(cls) -> 'PotentialSpec':
        return cls(())

    def to_dict(self) -> Dict:
        return {"coefficients": {str(index): float(np.real(value)) for index, value in self.terms}}

    def coefficient(self, index: int) -> complex:
        for i, value in self.terms:
            if i == index:
                return value
        return 0.0

    def resonant_pair(self, n: int) -> Tuple[float, float]:
        """(c_n, c_{-n}), zeros for absent entries."""
        return self.coefficient(n), self.coefficient(-n)

    @property
    def indices(self) -> np.ndarray:
        return self._indices

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self._values)))

    @property
    def is_free(self) -> bool:
        return len(self.terms) == 0

    def scaled(self, factor: float) -> 'PotentialSpec':
        return PotentialSpec(tuple((i, v * factor) for i, v in self.terms))

    def evaluate(self, x):
        """u(x) for scalar or array x (real or complex)."""
        x = np.asarray(x)
        if not self.terms:
            return np.zeros(x.shape, dtype=complex) if x.shape else 0j
        phases = np.exp(1j * np.multiply.outer(x, self._indices))
        result = phases @ self._values
        return complex(result) if np.ndim(result) == 0 else result

    def __call__(self, x):
        return self.evaluate(x)


def evaluate(spec: PotentialSpec, x):
    return spec.evaluate(x)


def pt_check(spec: PotentialSpec, points: int = PT_CHECK_POINTS, tol: float = PT_CHECK_TOL) -> bool:
    """True iff every coefficient is real, c_0 is absent and u(x) = conj(u(-x)) holds on a sample grid."""
    if any(index == 0 for index, _ in spec.terms):
        return False
    if any(np.imag(value) != 0 for _, value in spec.terms):
        return False
    grid = np.linspace(-PERIOD / 2, PERIOD / 2, points)
    defect = np.max(np.abs(spec.evaluate(grid) - np.conj(spec.evaluate(-grid)))) if spec.terms else 0.0
    return bool(defect <= tol * (1.0 + spec.l1_norm))


def sampled_potential(values, harmonics: int, imag_tol: float = 1e-8):
    """
    Real Fourier coefficients of a real, even, 2*pi-periodic function sampled on a uniform grid starting at
    its symmetry point. Returns (PotentialSpec, mean). The mean is split off because c_0 is not allowed.
    """
    values = np.asarray(values, dtype=complex)
    count = values.size
    if harmonics >= count // 2:
        raise InvalidPotential(f"{harmonics} harmonics need more than {2 * harmonics} samples, got {count}")
    spectrum = np.fft.fft(values) / count
    mean = spectrum[0].real
    coefficients = {}
    for index in range(1, harmonics + 1):
        for signed in (index, -index):
            value = spectrum[signed % count]
            if abs(value.imag) > imag_tol * (1.0 + abs(value)):
                raise InvalidPotential(f"sampled potential is not PT symmetric at harmonic {signed}: {value}")
            if value.real != 0.0:
                coefficients[signed] = value.real
    if not math.isfinite(mean):
        raise InvalidPotential("sampled potential has a non-finite mean")
    return PotentialSpec.from_coefficients(coefficients), mean

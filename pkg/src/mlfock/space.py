"""Coefficient-space model of the Mittag-Leffler space on the slitted plane.

A state ``f(z) = sum_n a_n z^(q n)`` is stored by its monomial coefficients.
The scalar product is ``<f, g> = sum_n conj(a_n) b_n Gamma(q n + 1)``,
anti-linear in the first slot. Powers of ``z`` use the principal branch,
so points on the closed negative real axis are rejected.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, IncompatibleSpaceError, WeightOverflowError
from .specfun import EvalControl, _check_q, _log_gamma, mittag_leffler
from .summation import CompensatedSum

# largest argument accepted by math.exp
_EXP_MAX = 709.782712893384


@dataclass(frozen=True, eq=False)
class MLState:
    """Truncated state: order ``q`` and coefficients ``a_0 .. a_N`` of ``z^(q n)``."""

    q: float
    coeffs: np.ndarray

    def __init__(self, q: float, coeffs: Iterable[complex]):
        q = _check_q(q)
        arr = np.array(list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs,
                       dtype=complex).reshape(-1)
        if arr.size == 0:
            arr = np.zeros(1, dtype=complex)
        if not np.all(np.isfinite(arr)):
            raise DomainError("state coefficients must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "coeffs", arr)

    @property
    def N(self) -> int:
        return len(self.coeffs) - 1

    def __len__(self) -> int:
        return len(self.coeffs)

    def __add__(self, other: MLState) -> MLState:
        _same_space(self, other)
        n = max(len(self), len(other))
        return MLState(self.q, _pad(self.coeffs, n) + _pad(other.coeffs, n))

    def __sub__(self, other: MLState) -> MLState:
        return self + (-1.0) * other

    def __mul__(self, alpha: complex) -> MLState:
        return MLState(self.q, self.coeffs * complex(alpha))

    __rmul__ = __mul__

    def to_dict(self) -> dict:
        return {"q": self.q, "coeffs": [[float(c.real), float(c.imag)] for c in self.coeffs]}

    @classmethod
    def from_dict(cls, data: dict) -> MLState:
        try:
            q = data["q"]
            pairs = data["coeffs"]
            coeffs = [complex(float(re), float(im)) for re, im in pairs]
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed state record: {exc}") from None
        return cls(q, coeffs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> MLState:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class SlitPoint:
    """A point of the plane with the closed negative real axis removed."""

    z: complex

    def __init__(self, z: complex):
        z = complex(z)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise DomainError(f"point must be finite, got {z}")
        if z.imag == 0.0 and z.real <= 0.0:
            raise DomainError(f"point {z} lies on the slit (-inf, 0]")
        object.__setattr__(self, "z", z)

    @property
    def log(self) -> complex:
        """Principal logarithm, imaginary part in (-pi, pi)."""
        return cmath.log(self.z)


def _as_point(p: SlitPoint | complex) -> SlitPoint:
    return p if isinstance(p, SlitPoint) else SlitPoint(p)


def _pad(arr: np.ndarray, n: int) -> np.ndarray:
    if len(arr) >= n:
        return arr
    out = np.zeros(n, dtype=complex)
    out[: len(arr)] = arr
    return out


def _same_space(f: MLState, g: MLState) -> None:
    if f.q != g.q:
        raise IncompatibleSpaceError(f"states live in different spaces (q={f.q} vs q={g.q})")


def zero_state(q: float, N: int = 0) -> MLState:
    return MLState(q, np.zeros(N + 1, dtype=complex))


def basis_state(q: float, n: int) -> MLState:
    """The unit vector psi_n = z^(q n) / sqrt(Gamma(q n + 1))."""
    q = _check_q(q)
    if n < 0 or int(n) != n:
        raise DomainError(f"basis index must be a non-negative integer, got {n}")
    coeffs = np.zeros(n + 1, dtype=complex)
    coeffs[n] = math.exp(-0.5 * _log_gamma(q * n + 1.0))
    return MLState(q, coeffs)


def _log_abs(c: complex) -> float:
    return math.log(abs(c))


def inner(f: MLState, g: MLState) -> complex:
    """``sum conj(a_n) b_n Gamma(q n + 1)``, conjugate-linear in ``f``.

    Each term is assembled as ``exp(ln|a_n| + ln|b_n| + lnGamma(qn+1))``
    times a unit phase, so tiny coefficients against huge weights neither
    underflow nor overflow prematurely. Swapping ``f`` and ``g`` produces
    the exact complex conjugate.
    """
    _same_space(f, g)
    q = f.q
    acc = CompensatedSum()
    for n in range(min(len(f), len(g))):
        a = complex(f.coeffs[n])
        b = complex(g.coeffs[n])
        if a == 0 or b == 0:
            continue
        expo = (_log_abs(a) + _log_abs(b)) + _log_gamma(q * n + 1.0)
        if expo > _EXP_MAX:
            raise WeightOverflowError(n, f"Gamma-weighted term overflows at index {n}")
        phase = (a / abs(a)).conjugate() * (b / abs(b))
        acc.add(phase * math.exp(expo))
    return acc.complex_value


def norm(f: MLState) -> float:
    return math.sqrt(max(inner(f, f).real, 0.0))


def evaluate(f: MLState, p: SlitPoint | complex) -> complex:
    """``sum a_n exp(q n Log z)`` on the principal branch."""
    point = _as_point(p)
    log_z = point.log
    q = f.q
    acc = CompensatedSum()
    for n, a in enumerate(f.coeffs):
        if a == 0:
            continue
        acc.add(complex(a) * cmath.exp(q * n * log_z))
    return acc.complex_value


def kernel(
    q: float,
    z: SlitPoint | complex,
    w: SlitPoint | complex,
    ctl: EvalControl | None = None,
) -> complex:
    """Reproducing kernel ``E_q(conj(z)^q w^q)``.

    ``conj(z)^q`` equals ``conj(z^q)`` off the slit, so this is the closed
    form of ``sum_n conj(psi_n(z)) psi_n(w)``.
    """
    q = _check_q(q)
    zp, wp = _as_point(z), _as_point(w)
    u = cmath.exp(q * (zp.log.conjugate() + wp.log))
    return mittag_leffler(q, u, ctl)


def kernel_state(q: float, w: SlitPoint | complex, N: int) -> MLState:
    """Truncation at ``N`` of ``K_w = sum_n conj(psi_n(w)) psi_n``.

    Its coefficients are ``conj(w^(q n)) / Gamma(q n + 1)``, and
    ``inner(kernel_state(q, w, N), f) == evaluate(f, w)`` for every state
    of length at most ``N + 1``.
    """
    q = _check_q(q)
    log_w = _as_point(w).log
    coeffs = np.empty(N + 1, dtype=complex)
    for n in range(N + 1):
        coeffs[n] = cmath.exp(q * n * log_w.conjugate() - _log_gamma(q * n + 1.0))
    return MLState(q, coeffs)


def coeff_growth_report(f: MLState) -> np.ndarray:
    """Partial sums ``S_N = sum_{n<=N} |a_n|^2 Gamma(q n + 1)``.

    Saturates at ``inf`` once a partial sum leaves double range.
    """
    q = f.q
    out = np.empty(len(f))
    acc = CompensatedSum()
    overflowed = False
    for n, a in enumerate(f.coeffs):
        if not overflowed and a != 0:
            expo = 2.0 * _log_abs(complex(a)) + _log_gamma(q * n + 1.0)
            if expo > _EXP_MAX:
                overflowed = True
            else:
                acc.add(math.exp(expo))
        out[n] = math.inf if overflowed else acc.real
    return out


def state_from_basis(q: float, amplitudes: Sequence[complex]) -> MLState:
    """Build ``sum_n c_n psi_n`` from amplitudes in the orthonormal basis."""
    q = _check_q(q)
    coeffs = np.array(
        [complex(c) * math.exp(-0.5 * _log_gamma(q * n + 1.0)) for n, c in enumerate(amplitudes)],
        dtype=complex,
    )
    return MLState(q, coeffs)


def basis_amplitudes(f: MLState) -> np.ndarray:
    """Amplitudes ``<psi_n, f> = a_n sqrt(Gamma(q n + 1))``."""
    q = f.q
    return np.array(
        [complex(a) * math.exp(0.5 * _log_gamma(q * n + 1.0)) for n, a in enumerate(f.coeffs)],
        dtype=complex,
    )

"""Thermal states: partition function, probabilities, observables, abscissa.

The thermal state is diagonal in the psi_n basis with weights
``exp(-s n_q) / Z``, ``Z = sum_n exp(-s n_q)``. Summation runs in ascending
n with Neumaier compensation and stops once a bound on the remaining mass
is below the tolerance. The bound depends on the shape of the levels:

* q >= 1: level increments never shrink, so successive term ratios never
  grow and the geometric tail ``t_{M+1} / (1 - r)`` is an upper bound.
* q < 1: increments shrink and the geometric tail undershoots. Here the
  log-log slope of the levels increases towards q, which gives a power-law
  envelope and an incomplete-Gamma bound on the remaining integral.

Small q needs many terms (about 1e9 for q = 0.3, s = 0.1 at 1e-12). Terms
are generated in numpy blocks (SIMD exp/log) and accumulated by short
numba loops, about 20 ns per term.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit

from .errors import ConsistencyError, ConvergenceError, DomainError
from .specfun import EvalControl, _check_q, _levels, _log_level_block, level_spectrum
from .summation import neumaier_add_jit

# exp(-745.2) is the smallest subnormal; beyond it terms are exact zeros
UNDERFLOW_EXPONENT = 745.0
# relative cushion so rounding cannot push a tight tail bound below the truth
_TAIL_GUARD = 1e-10
# rounding in p_n = t_n / Z and in summing them shifts sum(p) by up to ~2 eps
_ROUNDING_MASS = 2.0 * np.finfo(float).eps
# probabilities are materialized as arrays only up to this many terms
MAX_DENSE_TERMS = 50_000_000

_CONVERGED, _EXHAUSTED, _NOT_MONOTONE = 0, 1, 2


@njit(cache=True)
def _tail_bound(q, s, n, ll_n, ll_next):
    """Upper bound on sum_{k > n} exp(-s n_q(k)) from log-levels at n, n+1."""
    lam_next = math.exp(ll_next)
    x1 = s * lam_next
    if x1 > UNDERFLOW_EXPONENT:
        return 0.0
    t1 = math.exp(-x1)
    if q >= 1.0:
        one_minus_r = -math.expm1(-s * (lam_next - math.exp(ll_n)))
        if one_minus_r <= 0.0:
            return math.inf
        return t1 / one_minus_r * (1.0 + _TAIL_GUARD)
    # secant slope of ln(level) vs ln(n) on [n, n+1]: a lower bound for the
    # slope on [n+1, inf) because that slope increases for q < 1
    slope = (ll_next - ll_n) / math.log1p(1.0 / n)
    if not slope > 0.0:
        return math.inf
    excess = max(1.0 / slope - 1.0, 0.0)
    if x1 <= excess:
        return math.inf
    # int_{n+1}^inf exp(-x1 (x/(n+1))^slope) dx, with
    # Gamma(a, u) <= u^(a-1) e^-u / (1 - (a-1)/u)
    integral = t1 * (n + 1.0) / (slope * x1) / (1.0 - excess / x1)
    return (t1 + integral) * (1.0 + _TAIL_GUARD)


@njit(cache=True)
def _scan_partition(q, s, n0, ll, x, t, acc, rel_tol, abs_tol, max_terms):
    """Advance the partition sum over n = n0 .. n0 + len(t) - 2.

    The block carries one element of lookahead so the tail bound at the
    last index can see level n + 1. ``acc`` holds (total, comp, prev) and
    is updated in place. Returns (status, used, tail), with status -1
    meaning "keep going".
    """
    total, comp, prev = acc[0], acc[1], acc[2]
    m = t.shape[0] - 1
    status = -1
    used = n0
    tail = math.inf
    for i in range(m):
        n = n0 + i
        if x[i] > UNDERFLOW_EXPONENT:
            status, used, tail = _CONVERGED, n, 0.0
            break
        ti = t[i]
        if not ti < prev:
            status, used = _NOT_MONOTONE, n
            break
        total, comp = neumaier_add_jit(total, comp, ti)
        prev = ti
        used = n + 1
        if used >= 8:
            tol = max(rel_tol * (total + comp), abs_tol)
            t1 = t[i + 1]
            # cheap lower bounds on the tail; the exact bound only when they pass
            if q >= 1.0:
                floor = t1
            else:
                floor = t1 + t1 * (n + 1.0) / (q * x[i + 1]) if t1 > 0.0 else 0.0
            if floor <= tol:
                tail = _tail_bound(q, s, float(n), ll[i], ll[i + 1])
                if tail <= tol:
                    status = _CONVERGED
                    break
        if used >= max_terms:
            tail = _tail_bound(q, s, float(n), ll[i], ll[i + 1])
            status = _EXHAUSTED
            break
    acc[0], acc[1], acc[2] = total, comp, prev
    return status, used, tail


@njit(cache=True)
def _neumaier_block(acc, t):
    total, comp = acc[0], acc[1]
    for i in range(t.shape[0]):
        total, comp = neumaier_add_jit(total, comp, t[i])
    acc[0], acc[1] = total, comp


@njit(cache=True)
def _moments_block(acc, n0, lam, x, t, Z, log_z):
    """Accumulate sum p, sum n p, sum n_q p, sum p (x + ln Z) and monotonicity.

    ``acc`` layout: 4 (sum, comp) pairs, then prev p, then a decreasing flag.
    """
    prev = acc[8]
    ok = acc[9]
    for i in range(t.shape[0]):
        p = t[i] / Z
        if not (p < prev and p > 0.0):
            ok = 0.0
        prev = p
        acc[0], acc[1] = neumaier_add_jit(acc[0], acc[1], p)
        acc[2], acc[3] = neumaier_add_jit(acc[2], acc[3], (n0 + i) * p)
        acc[4], acc[5] = neumaier_add_jit(acc[4], acc[5], lam[i] * p)
        acc[6], acc[7] = neumaier_add_jit(acc[6], acc[7], p * (x[i] + log_z))
    acc[8] = prev
    acc[9] = ok


_MAX_BLOCK = 1 << 16


def _blocks(q: float, s: float, start: int, stop: int, lookahead: int = 0):
    """Yield (n0, ln n_q, n_q, s n_q, exp(-s n_q)) over [start, stop) in blocks.

    Blocks start small and double, so short sums stay cheap. n = 0 must be
    handled by the caller (its level is 0). Elementwise numpy results do not
    depend on block boundaries, so every partial sum sees identical terms.
    The yielded arrays are reused between blocks.
    """
    cap = min(_MAX_BLOCK, max(stop - start, 0)) + lookahead
    buf = np.empty((4, cap))
    work = np.empty((2, cap))
    size = 64
    n0 = start
    while n0 < stop:
        n1 = min(n0 + size, stop)
        m = n1 - n0 + lookahead
        ll, lam, x, t = buf[0, :m], buf[1, :m], buf[2, :m], buf[3, :m]
        _log_level_block(q, n0, n1 + lookahead, out=ll, work=work)
        np.exp(ll, out=lam)
        np.multiply(lam, s, out=x)
        np.negative(x, out=t)
        np.exp(t, out=t)
        yield n0, ll, lam, x, t
        n0 = n1
        size = min(2 * size, _MAX_BLOCK)


def _partition_kernel(q, s, rel_tol, abs_tol, max_terms):
    acc = np.array([1.0, 0.0, 1.0])
    for n0, ll, _, x, t in _blocks(q, s, 1, max_terms, lookahead=1):
        status, used, tail = _scan_partition(
            q, s, n0, ll, x, t, acc, rel_tol, abs_tol, max_terms
        )
        if status >= 0:
            return acc[0] + acc[1], used, acc[2], tail, status
    raise AssertionError("max_terms must stop the scan")


def _term_sum(q, s, start, stop):
    """Compensated sum of exp(-s n_q) for start <= n < stop, ascending."""
    acc = np.zeros(2)
    if start == 0 and stop > 0:
        acc[0] = 1.0
        start = 1
    for _, _, _, x, t in _blocks(q, s, start, stop):
        _neumaier_block(acc, t)
        if x[-1] > UNDERFLOW_EXPONENT:
            break
    return acc[0] + acc[1]


def _thermal_sums(q, s, used, Z):
    """Single pass over p_n = t_n / Z: sum p, sum n p, sum n_q p, -sum p ln p."""
    acc = np.zeros(10)
    acc[8] = math.inf
    acc[9] = 1.0
    log_z = math.log(Z)
    one = np.ones(1)
    _moments_block(acc, 0, np.zeros(1), np.zeros(1), one, Z, log_z)
    for n0, _, lam, x, t in _blocks(q, s, 1, used):
        _moments_block(acc, n0, lam, x, t, Z, log_z)
    return acc[0] + acc[1], acc[2] + acc[3], acc[4] + acc[5], acc[6] + acc[7], acc[9] == 1.0


def _probabilities(q, s, used, Z):
    out = np.empty(used)
    out[0] = 1.0 / Z
    for n0, _, _, _, t in _blocks(q, s, 1, used):
        out[n0 : n0 + len(t)] = t / Z
    return out


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThermalSpec:
    q: float
    s: float
    ctl: EvalControl = field(default_factory=EvalControl)

    def __post_init__(self):
        _check_q(self.q)
        if not (self.s > 0 and math.isfinite(self.s)):
            raise DomainError(f"inverse temperature s must be positive, got {self.s}")


@dataclass(frozen=True)
class PartitionResult:
    Z: float
    terms_used: int
    last_term: float
    tail_estimate: float
    converged: bool


@dataclass(frozen=True)
class ThermalMoments:
    total_probability: float
    mean_occupation: float
    mean_level: float
    entropy: float
    strictly_decreasing: bool


@dataclass(frozen=True)
class DiagonalState:
    """Thermal state ``p_n = exp(-s n_q) / Z`` for ``n < terms_used``.

    Probabilities are generated on demand: at small q the retained range can
    reach 1e9 terms, far too many to hold in memory. ``tail_mass_bound``
    bounds ``1 - sum(p)`` for the computed probabilities: the tail bound
    over Z plus the rounding of the normalization.
    """

    q: float
    s: float
    Z: float
    terms_used: int
    tail_mass_bound: float

    def prob(self, n: int) -> float:
        if n < 0:
            raise DomainError("index must be non-negative")
        if n == 0:
            return 1.0 / self.Z
        x = self.s * np.exp(_log_level_block(self.q, n, n + 1))
        return float(np.exp(-x)[0]) / self.Z

    @property
    def probs(self) -> np.ndarray:
        if self.terms_used > MAX_DENSE_TERMS:
            raise MemoryError(
                f"{self.terms_used} probabilities exceed the dense limit; use moments()"
            )
        return _probabilities(self.q, self.s, self.terms_used, self.Z)

    def moments(self) -> ThermalMoments:
        total, occ, lev, ent, dec = _thermal_sums(self.q, self.s, self.terms_used, self.Z)
        return ThermalMoments(total, occ, lev, ent, bool(dec))


def partition(spec: ThermalSpec) -> PartitionResult:
    """Z(s, q) = sum_n exp(-s n_q), truncated once the tail bound is below tolerance.

    Exhausting ``max_terms`` yields ``converged=False`` with the partial sum
    and the current tail bound; nothing is extrapolated.
    """
    ctl = spec.ctl
    Z, used, last, tail, status = _partition_kernel(
        float(spec.q), float(spec.s), ctl.rel_tol, ctl.abs_tol, int(ctl.max_terms)
    )
    if status == _NOT_MONOTONE:
        raise ConsistencyError(
            f"partition terms for q={spec.q}, s={spec.s} stopped decreasing at n={used}"
        )
    return PartitionResult(
        Z=float(Z),
        terms_used=int(used),
        last_term=float(last),
        tail_estimate=float(tail),
        converged=status == _CONVERGED,
    )


def partial_partition(q: float, s: float, n_terms: int, start: int = 0) -> float:
    """Plain sum of ``exp(-s n_q)`` over ``start <= n < n_terms`` (no stopping rule)."""
    q = _check_q(q)
    return float(_term_sum(q, float(s), int(start), int(n_terms)))


def _check_converged(spec: ThermalSpec, result: PartitionResult) -> PartitionResult:
    if not result.converged:
        raise ConvergenceError(
            f"partition for q={spec.q}, s={spec.s} not converged after "
            f"{result.terms_used} terms",
            result.Z,
            result.terms_used,
        )
    return result


def thermal_state(spec: ThermalSpec, result: PartitionResult | None = None) -> DiagonalState:
    """Diagonal thermal state; pass ``result`` to reuse an earlier ``partition(spec)``."""
    result = _check_converged(spec, partition(spec) if result is None else result)
    return DiagonalState(
        q=float(spec.q),
        s=float(spec.s),
        Z=result.Z,
        terms_used=result.terms_used,
        tail_mass_bound=result.tail_estimate / result.Z + _ROUNDING_MASS,
    )


def mean_occupation(spec: ThermalSpec) -> float:
    return thermal_state(spec).moments().mean_occupation


def mean_level(spec: ThermalSpec) -> float:
    return thermal_state(spec).moments().mean_level


def entropy(spec: ThermalSpec) -> float:
    """Von Neumann entropy -sum p_n ln p_n of the diagonal state."""
    return thermal_state(spec).moments().entropy


def abscissa_profile(q: float, N: int) -> np.ndarray:
    """sigma_n = ln(n) / n_q for n = 2..N (element i belongs to n = i + 2)."""
    q = _check_q(q)
    if N < 2 or int(N) != N:
        raise DomainError(f"N must be an integer >= 2, got {N}")
    lv = _levels(q, int(N))
    n = np.arange(2, int(N) + 1)
    return np.log(n) / lv[2:]


def abscissa_tail_max(q: float, N: int) -> float:
    """max of sigma_n over n in [N/2, N]."""
    prof = abscissa_profile(q, N)
    lo = max(N // 2, 2)
    return float(prof[lo - 2 :].max())


@dataclass(frozen=True)
class ConvergenceReport:
    q: float
    s: float
    n_probe: int
    spectrum_valid: bool
    abscissa_tail_max: float
    partition: PartitionResult
    Z_doubled: float
    doubling_defect: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["partition"] = asdict(self.partition)
        return d


def convergence_report(spec: ThermalSpec, n_probe: int = 200) -> ConvergenceReport:
    """Bundle spectrum validity, abscissa decay, Z and the Z(M) vs Z(4M) check."""
    if n_probe < 2:
        raise DomainError("n_probe must be >= 2")
    spectrum = level_spectrum(spec.q, n_probe, strict=False)
    result = partition(spec)
    z4 = partial_partition(spec.q, spec.s, 4 * result.terms_used)
    return ConvergenceReport(
        q=float(spec.q),
        s=float(spec.s),
        n_probe=int(n_probe),
        spectrum_valid=spectrum.valid,
        abscissa_tail_max=abscissa_tail_max(spec.q, n_probe),
        partition=result,
        Z_doubled=z4,
        doubling_defect=abs(z4 - result.Z) / result.Z,
    )

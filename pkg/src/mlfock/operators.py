"""Ladder operators on truncated states and their matrices in the psi_n basis.

``annihilate`` is the Caputo derivative of order q acting on coefficients,
``create`` is multiplication by ``z^q`` and ``number_apply`` their product.
In the orthonormal basis the annihilator sends ``psi_n`` to
``sqrt(n_q) psi_{n-1}``; the square root is what makes ``a^dagger a psi_n =
n_q psi_n`` hold, and it reduces to ``sqrt(n)`` at q = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError
from .space import MLState, inner, norm, state_from_basis
from .specfun import _check_q, _levels


class OperatorKind(str, Enum):
    ANNIHILATION = "annihilation"
    CREATION = "creation"
    NUMBER = "number"


_ALIASES = {
    "a": OperatorKind.ANNIHILATION,
    "annihilation": OperatorKind.ANNIHILATION,
    "adag": OperatorKind.CREATION,
    "creation": OperatorKind.CREATION,
    "n": OperatorKind.NUMBER,
    "number": OperatorKind.NUMBER,
}


def parse_kind(kind: str | OperatorKind) -> OperatorKind:
    if isinstance(kind, OperatorKind):
        return kind
    try:
        return _ALIASES[str(kind).lower()]
    except KeyError:
        raise DomainError(f"unknown operator kind {kind!r}") from None


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    q: float
    kind: OperatorKind
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "kind": self.kind.value,
            "dim": self.dim,
            "entries": [[float(x) for x in row] for row in self.entries],
        }


def _levels_for(f: MLState) -> np.ndarray:
    return _levels(f.q, max(f.N, 1))


def annihilate(f: MLState) -> MLState:
    """b_{n-1} = a_n * n_q; the result is one index shorter."""
    if f.N == 0:
        return MLState(f.q, [0.0])
    lv = _levels_for(f)
    return MLState(f.q, f.coeffs[1:] * lv[1 : f.N + 1])


def create(f: MLState) -> MLState:
    """Multiplication by z^q: b_{n+1} = a_n."""
    return MLState(f.q, np.concatenate(([0.0], f.coeffs)))


def number_apply(f: MLState) -> MLState:
    """Apply a^dagger a: b_n = a_n * n_q, with b_0 = 0."""
    lv = _levels_for(f)
    coeffs = f.coeffs * lv[: f.N + 1]
    return MLState(f.q, coeffs)


def matrix(q: float, kind: str | OperatorKind, N: int) -> OperatorMatrix:
    """(N+1) x (N+1) matrix of the operator in the psi_0..psi_N basis."""
    q = _check_q(q)
    kind = parse_kind(kind)
    if N < 1 or int(N) != N:
        raise DomainError(f"N must be a positive integer, got {N}")
    lv = _levels(q, int(N))
    if kind is OperatorKind.NUMBER:
        entries = np.diag(lv)
    else:
        entries = np.diag(np.sqrt(lv[1:]), k=1)
        if kind is OperatorKind.CREATION:
            entries = entries.T.copy()
    entries.flags.writeable = False
    return OperatorMatrix(q=q, kind=kind, entries=entries)


def _random_state(rng: np.random.Generator, q: float, n: int) -> MLState:
    amps = rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1)
    return state_from_basis(q, amps)


def adjoint_defect(q: float, N: int, trials: int = 100, seed: int = 0) -> float:
    """Worst normalized ``|<a^dag f, g> - <f, a g>|`` over random pairs.

    ``f`` is truncated at ``N - 1`` and ``g`` at ``N`` so both sides involve
    the same finite set of coefficients and the identity is exact.
    """
    q = _check_q(q)
    if N < 2:
        raise DomainError(f"N must be >= 2, got {N}")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        f = _random_state(rng, q, N - 1)
        g = _random_state(rng, q, N)
        lhs = inner(create(f), g)
        rhs = inner(f, annihilate(g))
        worst = max(worst, abs(lhs - rhs) / (norm(f) * norm(g)))
    return worst


def commutator_diagonal(q: float, N: int) -> np.ndarray:
    """Diagonal of [a, a^dag] on span(psi_0..psi_{N-1}): n_{q,n+1} - n_{q,n}."""
    q = _check_q(q)
    if N < 1 or int(N) != N:
        raise DomainError(f"N must be a positive integer, got {N}")
    return np.diff(_levels(q, int(N)))


def classical_matrix(kind: str | OperatorKind, N: int) -> np.ndarray:
    """Textbook oscillator matrices (entries sqrt(n), diag n) for comparison at q = 1."""
    kind = parse_kind(kind)
    if kind is OperatorKind.NUMBER:
        return np.diag(np.arange(N + 1, dtype=float))
    a = np.diag([math.sqrt(n) for n in range(1, N + 1)], k=1)
    return a if kind is OperatorKind.ANNIHILATION else a.T

"""Compensated (Neumaier) summation.

Sums are always accumulated sequentially in the order terms are supplied,
so results are bit-reproducible for a fixed term sequence.
"""

from __future__ import annotations

from numba import njit


def neumaier_add(total: float, comp: float, x: float) -> tuple[float, float]:
    """Add ``x`` to the running pair ``(total, comp)`` and return the new pair."""
    t = total + x
    if abs(total) >= abs(x):
        comp += (total - t) + x
    else:
        comp += (x - t) + total
    return t, comp


# jitted twin for use inside numba kernels
neumaier_add_jit = njit(cache=True)(neumaier_add)


class CompensatedSum:
    """Running compensated sum of real or complex values.

    Complex input is handled as two independent real accumulators.

    >>> acc = CompensatedSum()
    >>> for x in (1e16, 1.0, -1e16):
    ...     acc.add(x)
    >>> acc.value
    1.0
    """

    __slots__ = ("_re", "_re_c", "_im", "_im_c")

    def __init__(self) -> None:
        self._re = self._re_c = 0.0
        self._im = self._im_c = 0.0

    def add(self, x: complex | float) -> None:
        if isinstance(x, complex):
            self._re, self._re_c = neumaier_add(self._re, self._re_c, x.real)
            self._im, self._im_c = neumaier_add(self._im, self._im_c, x.imag)
        else:
            self._re, self._re_c = neumaier_add(self._re, self._re_c, float(x))

    @property
    def real(self) -> float:
        return self._re + self._re_c

    @property
    def value(self) -> complex | float:
        if self._im == 0.0 and self._im_c == 0.0:
            return self.real
        return complex(self.real, self._im + self._im_c)

    @property
    def complex_value(self) -> complex:
        return complex(self.real, self._im + self._im_c)


def compensated_sum(values) -> complex | float:
    acc = CompensatedSum()
    for v in values:
        acc.add(v)
    return acc.value

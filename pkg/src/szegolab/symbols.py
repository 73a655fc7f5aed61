"""Trigonometric symbols on the unit circle.

A symbol is a function a(e^{it}) = sum_k a_k e^{ikt} with finitely many
nonzero Fourier coefficients.  This module evaluates symbols, takes the
continuous branch of log a on a uniform grid, and computes the two
constants that govern Toeplitz determinant asymptotics: the geometric mean
G[a] = exp (log a)_0 and the constant E[a] = exp sum_{k>=1} k (log a)_k
(log a)_{-k}, together with circle averages (1/2pi) int g(a).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, NamedTuple

import numpy as np

# Below this fraction of max |a| the grid data of log a is meaningless.
ZERO_PROXIMITY_RATIO = 1e-8


class ZeroProximityError(ValueError):
    """Symbol passes too close to zero on the sampling grid."""


class BranchError(ValueError):
    """log a has no continuous branch (nonzero winding number)."""


class TrigPolynomial:
    """Finite Fourier series: coefficient map {offset k: a_k}.

    Real-valued symbols (a_{-k} = conj(a_k) for every k) are detected and
    evaluated through a paired path that returns exactly real samples, so
    that sections built from them are exactly Hermitian.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Mapping[int, complex]):
        clean = {}
        for k, v in coeffs.items():
            c = complex(v)
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise ValueError(f"coefficient at offset {k} is not finite")
            if c != 0:
                clean[int(k)] = c
        self.coeffs = dict(sorted(clean.items()))

    @classmethod
    def constant(cls, c) -> "TrigPolynomial":
        return cls({0: c})

    @classmethod
    def from_function(cls, fn: Callable, max_offset: int, grid: int | None = None):
        """Fourier coefficients of fn(t) on [0, 2pi), truncated at |k| <= max_offset.

        Spectrally accurate for smooth 2pi-periodic fn; the grid defaults to
        a power of two well above the truncation order.
        """
        if max_offset < 0:
            raise ValueError("max_offset must be non-negative")
        n = grid if grid is not None else _default_grid(max_offset)
        t = 2.0 * np.pi * np.arange(n) / n
        samples = np.asarray([fn(tj) for tj in t], dtype=np.complex128)
        coeffs = _grid_coefficients(samples, max_offset)
        return cls(coeffs)

    def coefficient(self, k: int) -> complex:
        return self.coeffs.get(k, 0j)

    @property
    def support(self) -> tuple[int, int]:
        if not self.coeffs:
            return (0, 0)
        ks = list(self.coeffs)
        return (min(ks), max(ks))

    @property
    def bandwidth(self) -> int:
        lo, hi = self.support
        return max(abs(lo), abs(hi))

    @property
    def is_real_valued(self) -> bool:
        return all(
            self.coeffs.get(-k, 0j) == c.conjugate() for k, c in self.coeffs.items()
        )

    def reversed(self) -> "TrigPolynomial":
        """The symbol t -> a(1/t), i.e. coefficients reflected k -> -k."""
        return TrigPolynomial({-k: c for k, c in self.coeffs.items()})

    def __call__(self, t):
        return evaluate(self, t)

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = TrigPolynomial.constant(other)
        merged = dict(self.coeffs)
        for k, c in other.coeffs.items():
            merged[k] = merged.get(k, 0j) + c
        return TrigPolynomial(merged)

    __radd__ = __add__

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            return TrigPolynomial({k: other * c for k, c in self.coeffs.items()})
        out: dict[int, complex] = {}
        for k1, c1 in self.coeffs.items():
            for k2, c2 in other.coeffs.items():
                out[k1 + k2] = out.get(k1 + k2, 0j) + c1 * c2
        return TrigPolynomial(out)

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    def __sub__(self, other):
        return self + (-other if isinstance(other, TrigPolynomial) else -complex(other))

    def __eq__(self, other):
        return isinstance(other, TrigPolynomial) and self.coeffs == other.coeffs

    def __repr__(self):
        return f"TrigPolynomial({self.coeffs!r})"


@dataclass(frozen=True)
class LogSymbolData:
    """Fourier coefficients of the continuous branch of log a.

    ``coeffs`` maps offsets |k| <= K to the grid DFT coefficient computed on
    ``grid_size`` uniform points.
    """

    coeffs: Mapping[int, complex]
    grid_size: int

    def coefficient(self, k: int) -> complex:
        return self.coeffs.get(k, 0j)


class SzegoConstant(NamedTuple):
    value: complex
    tail_bound: float


def _default_grid(bandwidth: int) -> int:
    n = 1024
    while n < 8 * max(1, bandwidth):
        n *= 2
    return n


def evaluate(a: TrigPolynomial, t):
    """a(e^{it}) = sum_k a_k e^{ikt}; accepts a scalar angle or an array."""
    tv = np.asarray(t, dtype=np.float64)
    if a.is_real_valued:
        out = np.zeros(tv.shape, dtype=np.float64)
        out += a.coefficient(0).real
        for k, c in a.coeffs.items():
            if k > 0:
                out += 2.0 * (c * np.exp(1j * k * tv)).real
        result = out.astype(np.complex128)
    else:
        result = np.zeros(tv.shape, dtype=np.complex128)
        for k, c in a.coeffs.items():
            result += c * np.exp(1j * k * tv)
    if np.isscalar(t) or tv.ndim == 0:
        return complex(result)
    return result


def sample_circle(a: TrigPolynomial, n: int) -> np.ndarray:
    """Values of a on the uniform grid t_j = 2 pi j / n."""
    t = 2.0 * np.pi * np.arange(n) / n
    out = evaluate(a, t)
    return np.atleast_1d(np.asarray(out, dtype=np.complex128))


def _check_zero_proximity(samples: np.ndarray):
    mags = np.abs(samples)
    peak = float(mags.max()) if mags.size else 0.0
    low = float(mags.min()) if mags.size else 0.0
    if peak == 0.0 or low <= ZERO_PROXIMITY_RATIO * peak:
        raise ZeroProximityError(
            f"symbol passes too close to zero on the grid: min |a| = {low:.3e}, "
            f"max |a| = {peak:.3e}"
        )


def _phase_increments(samples: np.ndarray) -> np.ndarray:
    # Principal argument of consecutive ratios; each step lands in (-pi, pi].
    ratios = samples[1:] / samples[:-1]
    return np.angle(ratios)


def winding_number(a: TrigPolynomial, grid: int) -> int:
    """Winding number of a around the origin from grid phase accumulation."""
    samples = sample_circle(a, grid)
    _check_zero_proximity(samples)
    increments = _phase_increments(samples)
    closing = float(np.angle(samples[0] / samples[-1]))
    total = float(np.sum(increments)) + closing
    return int(round(total / (2.0 * np.pi)))


def _grid_coefficients(samples: np.ndarray, max_offset: int) -> dict[int, complex]:
    """DFT coefficients for |k| <= max_offset; conjugate symmetry is forced
    exactly when the samples are real."""
    n = len(samples)
    fft = np.fft.fft(samples) / n
    coeffs: dict[int, complex] = {}
    real_input = bool(np.all(samples.imag == 0.0))
    if real_input:
        coeffs[0] = complex(fft[0].real)
        for k in range(1, max_offset + 1):
            ck = complex(fft[k])
            coeffs[k] = ck
            coeffs[-k] = ck.conjugate()
    else:
        coeffs[0] = complex(fft[0])
        for k in range(1, max_offset + 1):
            coeffs[k] = complex(fft[k])
            coeffs[-k] = complex(fft[n - k])
    return coeffs


def log_coefficients(a: TrigPolynomial, grid: int, max_offset: int) -> LogSymbolData:
    """Fourier coefficients of the continuous branch of log a.

    Requires a power-of-two grid with grid >= 4*max_offset, no zeros of a on
    the grid, and winding number 0 (otherwise there is no continuous branch).
    The branch is fixed by unwrapping the argument along the grid.
    """
    if grid < 4 or grid & (grid - 1):
        raise ValueError(f"grid must be a power of two >= 4, got {grid}")
    if max_offset < 0 or grid < 4 * max_offset:
        raise ValueError(
            f"grid {grid} too small for max_offset {max_offset} (need grid >= 4*K)"
        )
    samples = sample_circle(a, grid)
    _check_zero_proximity(samples)
    increments = _phase_increments(samples)
    closing = float(np.angle(samples[0] / samples[-1]))
    winding = int(round((float(np.sum(increments)) + closing) / (2.0 * np.pi)))
    if winding != 0:
        raise BranchError(
            f"log a has no continuous branch: winding number {winding}"
        )
    phases = np.concatenate(([0.0], np.cumsum(increments))) + float(
        np.angle(samples[0])
    )
    logs = np.log(np.abs(samples)) + 1j * phases
    if np.all(phases == 0.0):
        logs = logs.real + 0j  # real positive symbol: keep logs exactly real
    return LogSymbolData(_grid_coefficients(logs, max_offset), grid)


def geometric_mean(a: TrigPolynomial, grid: int | None = None) -> complex:
    """G[a] = exp (log a)_0, the zeroth Fourier coefficient of log a."""
    n = grid if grid is not None else _default_grid(a.bandwidth)
    data = log_coefficients(a, n, 0)
    return complex(np.exp(data.coefficient(0)))


def strong_szego_constant(
    a: TrigPolynomial, truncation: int, grid: int | None = None
) -> SzegoConstant:
    """E[a] = exp sum_{k=1..K} k (log a)_k (log a)_{-k}, plus a tail estimate.

    The infinite series is truncated at K = ``truncation``; the reported tail
    bound sums the next K computed terms and extrapolates the remainder from
    the observed geometric decay of the coefficient pair products.
    """
    if truncation < 1:
        raise ValueError("truncation must be >= 1")
    extended = 2 * truncation
    n = grid if grid is not None else _default_grid(max(a.bandwidth, extended) * 2)
    if n < 4 * extended:
        raise ValueError(f"grid {n} too small for truncation {truncation}")
    data = log_coefficients(a, n, extended)
    total = 0j
    for k in range(1, truncation + 1):
        total += k * data.coefficient(k) * data.coefficient(-k)
    tail = 0.0
    for k in range(truncation + 1, extended + 1):
        tail += k * abs(data.coefficient(k)) * abs(data.coefficient(-k))
    tail += _tail_extrapolation(data, extended)
    return SzegoConstant(complex(np.exp(total)), tail)


def _tail_extrapolation(data: LogSymbolData, last: int) -> float:
    """Geometric extrapolation of sum_{k>last} k |c_k||c_{-k}|."""
    pair = lambda k: abs(data.coefficient(k)) * abs(data.coefficient(-k))
    p_last = pair(last)
    if p_last == 0.0:
        return 0.0
    steps = min(4, last - 1)
    p_ref = pair(last - steps)
    if p_ref == 0.0 or p_last >= p_ref:
        return math.inf
    q = (p_last / p_ref) ** (1.0 / steps)
    if q >= 1.0:
        return math.inf
    return p_last * (last * q / (1.0 - q) + q / (1.0 - q) ** 2)


def _apply_test_function(g, values: np.ndarray) -> np.ndarray:
    if hasattr(g, "apply"):
        return g.apply(values)
    try:
        out = g(values)
    except TypeError:
        out = np.asarray([g(v) for v in values])
    return np.asarray(out, dtype=np.complex128)


def symbol_average(a: TrigPolynomial, g, grid: int) -> complex:
    """(1/N) sum_j g(a(e^{2 pi i j / N})), the trapezoid circle average."""
    samples = sample_circle(a, grid)
    values = _apply_test_function(g, samples)
    return complex(np.mean(values))


def symbol_to_json(a: TrigPolynomial) -> dict:
    """JSON form {offset: [re, im]} with string keys."""
    return {str(k): [c.real, c.imag] for k, c in a.coeffs.items()}


def symbol_from_json(obj: Mapping) -> TrigPolynomial:
    coeffs = {}
    for key, val in obj.items():
        k = int(key)
        if isinstance(val, (int, float)):
            coeffs[k] = complex(val)
        else:
            re, im = val
            coeffs[k] = complex(re, im)
    return TrigPolynomial(coeffs)

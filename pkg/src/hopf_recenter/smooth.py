"""Smooth functions on the space-time torus: sums of ``c * y^m * exp(i <w, y>)``.

Keys are stored as rows ``[m | w]`` of an integer array, so products, derivatives
and multipliers are vectorised numpy operations.  Coefficients are complex
doubles; realness is a property of the Hermitian-symmetric coefficient map and
is checked on evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

PRUNE = 1e-15
REAL_TOL = 1e-12


class SymmetryError(ValueError):
    """Evaluation produced an imaginary part beyond round-off."""


class SmoothFunction:
    __slots__ = ("dim", "keys", "coeffs")

    def __init__(self, dim: int, keys: np.ndarray, coeffs: np.ndarray, canonical: bool = False):
        self.dim = dim  # number of coordinates, d + 1
        keys = np.asarray(keys, dtype=np.int64).reshape(-1, 2 * dim)
        coeffs = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
        if not canonical:
            keys, coeffs = _canonicalize(keys, coeffs)
        self.keys = keys
        self.coeffs = coeffs

    # -- constructors ------------------------------------------------------------------

    @classmethod
    def zero(cls, dim: int) -> SmoothFunction:
        return cls(dim, np.zeros((0, 2 * dim), np.int64), np.zeros(0), canonical=True)

    @classmethod
    def constant(cls, dim: int, c: complex) -> SmoothFunction:
        return cls(dim, np.zeros((1, 2 * dim), np.int64), [c])

    @classmethod
    def monomial(cls, m: Sequence[int], c: complex = 1.0) -> SmoothFunction:
        dim = len(m)
        return cls(dim, [list(m) + [0] * dim], [c])

    @classmethod
    def wave(cls, omega: Sequence[int], c: complex = 1.0) -> SmoothFunction:
        dim = len(omega)
        return cls(dim, [[0] * dim + list(omega)], [c])

    @classmethod
    def cos(cls, omega: Sequence[int]) -> SmoothFunction:
        neg = [-w for w in omega]
        return cls.wave(omega, 0.5) + cls.wave(neg, 0.5)

    @classmethod
    def shifted_monomial(cls, k: Sequence[int], x: Sequence[float]) -> SmoothFunction:
        """``(y - x)^k`` as a polynomial in ``y``."""
        out = cls.constant(len(k), 1.0)
        for j, kj in enumerate(k):
            if kj == 0:
                continue
            rows, cs = [], []
            for l in range(kj + 1):
                m = [0] * (2 * len(k))
                m[j] = l
                rows.append(m)
                cs.append(math.comb(kj, l) * (-x[j]) ** (kj - l))
            out = out * cls(len(k), rows, cs)
        return out

    # -- algebra ------------------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.coeffs)

    def is_zero(self) -> bool:
        return len(self.coeffs) == 0

    def __add__(self, other) -> SmoothFunction:
        if not isinstance(other, SmoothFunction):
            other = SmoothFunction.constant(self.dim, other)
        return SmoothFunction(self.dim, np.vstack([self.keys, other.keys]),
                              np.concatenate([self.coeffs, other.coeffs]))

    __radd__ = __add__

    def __neg__(self) -> SmoothFunction:
        return SmoothFunction(self.dim, self.keys, -self.coeffs, canonical=True)

    def __sub__(self, other) -> SmoothFunction:
        return self + (-other)

    def scale(self, s: complex) -> SmoothFunction:
        if s == 0:
            return SmoothFunction.zero(self.dim)
        return SmoothFunction(self.dim, self.keys, self.coeffs * s)

    def __mul__(self, other) -> SmoothFunction:
        if not isinstance(other, SmoothFunction):
            return self.scale(other)
        if self.is_zero() or other.is_zero():
            return SmoothFunction.zero(self.dim)
        keys = (self.keys[:, None, :] + other.keys[None, :, :]).reshape(-1, 2 * self.dim)
        coeffs = np.outer(self.coeffs, other.coeffs).reshape(-1)
        return SmoothFunction(self.dim, keys, coeffs)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> SmoothFunction:
        out = SmoothFunction.constant(self.dim, 1.0)
        for _ in range(n):
            out = out * self
        return out

    # -- calculus -------------------------------------------------------------------------

    def derive(self, n: Sequence[int]) -> SmoothFunction:
        """Exact ``d^n`` by iterated first-order Leibniz steps."""
        out = self
        for j, nj in enumerate(n):
            for _ in range(nj):
                out = out._derive_axis(j)
        return out

    def _derive_axis(self, j: int) -> SmoothFunction:
        if self.is_zero():
            return self
        dim = self.dim
        m = self.keys[:, j]
        w = self.keys[:, dim + j]
        wave_part = self.coeffs * (1j * w)
        poly_keys = self.keys.copy()
        poly_keys[:, j] -= 1
        has = m > 0
        keys = np.vstack([self.keys, poly_keys[has]])
        coeffs = np.concatenate([wave_part, (self.coeffs * m)[has]])
        return SmoothFunction(dim, keys, coeffs)

    def apply_multiplier(self, mult: Multiplier) -> SmoothFunction:
        return SmoothFunction(self.dim, self.keys, self.coeffs * mult(self.keys[:, self.dim:]))

    # -- evaluation -------------------------------------------------------------------------

    def _terms_at(self, y: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
        y = np.asarray(y, dtype=float)
        m = self.keys[:, : self.dim]
        w = self.keys[:, self.dim:]
        poly = np.prod(y[None, :] ** m, axis=1)
        phase = np.exp(1j * (w @ y))
        return poly, self.coeffs * poly * phase

    def evaluate(self, y: Sequence[float]) -> float:
        if self.is_zero():
            return 0.0
        poly, terms = self._terms_at(y)
        total = terms.sum()
        scale = float(np.sum(np.abs(self.coeffs) * np.maximum(1.0, np.abs(poly))))
        if abs(total.imag) > REAL_TOL * max(scale, 1e-300):
            raise SymmetryError(f"imaginary residue {total.imag:.3e} at scale {scale:.3e}")
        return float(total.real)

    def evaluate_complex(self, y: Sequence[float]) -> complex:
        if self.is_zero():
            return 0j
        return complex(self._terms_at(y)[1].sum())

    def abs_mass(self, y: Sequence[float]) -> float:
        """``sum |c| |y^m|``: the natural scale for round-off in ``evaluate``."""
        if self.is_zero():
            return 0.0
        poly, _ = self._terms_at(y)
        return float(np.sum(np.abs(self.coeffs) * np.abs(poly)))

    def mass(self) -> float:
        return float(np.sum(np.abs(self.coeffs)))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        mirror = self.keys.copy()
        mirror[:, self.dim:] *= -1
        conj = SmoothFunction(self.dim, mirror, np.conj(self.coeffs))
        diff = self - conj
        return diff.mass() <= tol * max(self.mass(), 1.0)

    # -- comparison and output ----------------------------------------------------------------

    def coefficient_map(self) -> dict[tuple[int, ...], complex]:
        return {tuple(int(v) for v in k): complex(c) for k, c in zip(self.keys, self.coeffs)}

    def allclose(self, other: SmoothFunction, rtol: float = 1e-13) -> bool:
        diff = self - other
        return diff.mass() <= rtol * max(self.mass(), other.mass(), 1e-300) or diff.is_zero()

    def to_json(self) -> list[dict]:
        d = self.dim
        return [{"m": [int(v) for v in k[:d]], "omega": [int(v) for v in k[d:]],
                 "re": float(c.real), "im": float(c.imag)}
                for k, c in zip(self.keys, self.coeffs)]

    @classmethod
    def from_json(cls, dim: int, data: Iterable[dict]) -> SmoothFunction:
        data = list(data)
        if not data:
            return cls.zero(dim)
        keys = [list(e["m"]) + list(e["omega"]) for e in data]
        return cls(dim, keys, [complex(e["re"], e["im"]) for e in data])

    def __repr__(self) -> str:
        return f"SmoothFunction(dim={self.dim}, terms={len(self)})"


_BITS = 6
_HALF = 1 << (_BITS - 1)


def _canonicalize(keys: np.ndarray, coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(coeffs) == 0:
        return keys, coeffs
    width = keys.shape[1]
    if width * _BITS <= 62 and len(keys) and -_HALF <= keys.min() and keys.max() < _HALF:
        # pack each row into one integer; row order of the packed values is lexicographic
        packed = np.zeros(len(keys), dtype=np.int64)
        for col in range(width):
            packed = (packed << _BITS) | (keys[:, col] + _HALF)
        _, first, inv = np.unique(packed, return_index=True, return_inverse=True)
        uniq = keys[first]
    else:
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    summed = np.zeros(len(uniq), dtype=np.complex128)
    np.add.at(summed, inv.reshape(-1), coeffs)
    keep = np.abs(summed) >= PRUNE
    return uniq[keep], summed[keep]


def linear_combination(dim: int, pairs: Iterable[tuple[SmoothFunction, complex]]) -> SmoothFunction:
    """``sum c f`` with a single canonicalisation pass."""
    keys, coeffs = [], []
    for f, c in pairs:
        if c == 0 or f.is_zero():
            continue
        keys.append(f.keys)
        coeffs.append(f.coeffs * c)
    if not keys:
        return SmoothFunction.zero(dim)
    return SmoothFunction(dim, np.vstack(keys), np.concatenate(coeffs))


@dataclass(frozen=True)
class Multiplier:
    """``g(w) = 1 / (1 + |w|^2)`` for ``w != 0`` and ``g(0) = zero_mode``.

    The default ``zero_mode = 0`` makes ``J`` annihilate polynomials, matching
    ``I_a(X^k) = 0`` in the abstract space.
    """

    zero_mode: float = 0.0

    def __call__(self, omega: np.ndarray) -> np.ndarray:
        omega = np.asarray(omega)
        sq = np.sum(omega.astype(float) ** 2, axis=-1)
        return np.where(sq == 0, self.zero_mode, 1.0 / (1.0 + sq))


DEFAULT_MULTIPLIER = Multiplier()


def apply_J(a: Sequence[int], f: SmoothFunction,
            mult: Multiplier = DEFAULT_MULTIPLIER) -> SmoothFunction:
    """``d^a J f``; stands in for convolution with ``d^a K``."""
    return f.apply_multiplier(mult).derive(a)


@dataclass(frozen=True)
class NoiseSpec:
    seed: int = 0
    bandwidth: int = 2
    amplitude: float = 1.0
    modes: int = 6

    def to_json(self) -> dict:
        return {"seed": self.seed, "bandwidth": self.bandwidth,
                "amplitude": self.amplitude, "modes": self.modes}


def random_noise(dim: int, seed: int, bandwidth: int = 2, amplitude: float = 1.0,
                 modes: int = 6) -> SmoothFunction:
    """Real trigonometric polynomial with ``modes`` random frequencies ``|w_j| <= B`` and a mean."""
    if bandwidth < 1:
        raise ValueError("bandwidth must be at least 1")
    rng = np.random.default_rng(seed)
    keys, coeffs = [[0] * (2 * dim)], [complex(amplitude * rng.standard_normal())]
    for _ in range(modes):
        w = rng.integers(-bandwidth, bandwidth + 1, size=dim)
        if not w.any():
            w[rng.integers(dim)] = 1
        c = amplitude * complex(rng.standard_normal(), rng.standard_normal()) / 2
        keys.append([0] * dim + [int(v) for v in w])
        coeffs.append(c)
        keys.append([0] * dim + [int(-v) for v in w])
        coeffs.append(c.conjugate())
    return SmoothFunction(dim, keys, coeffs)

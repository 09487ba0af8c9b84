"""Exact arithmetic over dyadic Gaussian rationals (a + bi) / 2^r.

Scalars are canonical (no common factor of two left between numerators and
denominator), so structural equality is value equality.  Matrices share a
single denominator exponent and keep their integer numerators in numpy
arrays; int64 storage is used while the entries provably fit and the arrays
switch to Python integers (object dtype) as soon as they might not.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

# Rows above this are refused unless the caller raises the limit.
MAX_ROWS = 2**12

_INT64_SAFE = 2**62


class DimensionError(ValueError):
    """Raised on shape mismatches between exact matrices."""


def _trailing_zeros(v: int) -> int:
    return (v & -v).bit_length() - 1


@dataclass(frozen=True)
class DyadicGaussian:
    """The complex number ``(re + im*i) / 2**denom_log`` in canonical form."""

    re: int
    im: int = 0
    denom_log: int = 0

    def __post_init__(self):
        if self.denom_log < 0:
            raise ValueError("denominator exponent must be non-negative")
        re, im, r = int(self.re), int(self.im), int(self.denom_log)
        if r:
            if re == 0 and im == 0:
                r = 0
            else:
                shift = min(r, _trailing_zeros(re | im) if (re | im) else r)
                re >>= shift
                im >>= shift
                r -= shift
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)
        object.__setattr__(self, "denom_log", r)

    @classmethod
    def coerce(cls, value) -> "DyadicGaussian":
        if isinstance(value, DyadicGaussian):
            return value
        if isinstance(value, (int, np.integer)):
            return cls(int(value))
        if isinstance(value, Fraction):
            den = value.denominator
            if den & (den - 1):
                raise ValueError(f"{value} is not dyadic")
            return cls(value.numerator, 0, den.bit_length() - 1)
        if isinstance(value, (float, complex, np.floating, np.complexfloating)):
            z = complex(value)
            re, im = Fraction(z.real), Fraction(z.imag)
            r = max(re.denominator, im.denominator).bit_length() - 1
            return cls(int(re * 2**r), int(im * 2**r), r)
        raise TypeError(f"cannot coerce {type(value).__name__} to DyadicGaussian")

    # arithmetic -------------------------------------------------------
    def _aligned(self, other: "DyadicGaussian"):
        r = max(self.denom_log, other.denom_log)
        a = self.denom_log
        b = other.denom_log
        return (self.re << (r - a), self.im << (r - a),
                other.re << (r - b), other.im << (r - b), r)

    def __add__(self, other):
        other = DyadicGaussian.coerce(other)
        a, b, c, d, r = self._aligned(other)
        return DyadicGaussian(a + c, b + d, r)

    __radd__ = __add__

    def __sub__(self, other):
        other = DyadicGaussian.coerce(other)
        a, b, c, d, r = self._aligned(other)
        return DyadicGaussian(a - c, b - d, r)

    def __rsub__(self, other):
        return DyadicGaussian.coerce(other) - self

    def __mul__(self, other):
        other = DyadicGaussian.coerce(other)
        a, b, c, d = self.re, self.im, other.re, other.im
        return DyadicGaussian(a * c - b * d, a * d + b * c,
                              self.denom_log + other.denom_log)

    __rmul__ = __mul__

    def __neg__(self):
        return DyadicGaussian(-self.re, -self.im, self.denom_log)

    def conj(self) -> "DyadicGaussian":
        return DyadicGaussian(self.re, -self.im, self.denom_log)

    def __eq__(self, other):
        try:
            other = DyadicGaussian.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return (self.re, self.im, self.denom_log) == (other.re, other.im, other.denom_log)

    def __hash__(self):
        return hash((self.re, self.im, self.denom_log))

    @property
    def real(self) -> Fraction:
        return Fraction(self.re, 2**self.denom_log)

    @property
    def imag(self) -> Fraction:
        return Fraction(self.im, 2**self.denom_log)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __complex__(self):
        return complex(self.real, self.imag)

    def __repr__(self):
        return f"({self.re}{self.im:+d}i)/2^{self.denom_log}"


def scalar_arith(op: str, x: DyadicGaussian, y: DyadicGaussian | None = None) -> DyadicGaussian:
    """Apply one of ``add, sub, mul, conj, neg``."""
    if op in ("conj", "neg"):
        return x.conj() if op == "conj" else -x
    if y is None:
        raise ValueError(f"{op} needs two operands")
    return {"add": operator.add, "sub": operator.sub, "mul": operator.mul}[op](x, y)


# matrices -------------------------------------------------------------------

def _maxabs(a: np.ndarray) -> int:
    if a.size == 0:
        return 0
    return int(max(abs(int(a.max())), abs(int(a.min()))))


def _settle(a: np.ndarray) -> np.ndarray:
    """Store as int64 when every entry fits, else as Python ints."""
    if a.dtype == object and _maxabs(a) < _INT64_SAFE:
        return a.astype(np.int64)
    return a


def _widen(a: np.ndarray) -> np.ndarray:
    return a if a.dtype == object else a.astype(object)


def int_matmul(a: np.ndarray, b: np.ndarray, inner: int | None = None) -> np.ndarray:
    """Integer matrix product that never overflows silently."""
    inner = a.shape[-1] if inner is None else inner
    if a.dtype != object and b.dtype != object:
        if _maxabs(a) * _maxabs(b) * max(inner, 1) < _INT64_SAFE:
            return a @ b
    return _settle(np.dot(_widen(a), _widen(b)))


def int_tensordot(a: np.ndarray, b: np.ndarray, axes) -> np.ndarray:
    """``np.tensordot`` with the same overflow policy as :func:`int_matmul`."""
    if a.dtype != object and b.dtype != object:
        inner = int(np.prod([a.shape[i] for i in axes[0]])) if axes[0] else 1
        if _maxabs(a) * _maxabs(b) * max(inner, 1) < _INT64_SAFE:
            return np.tensordot(a, b, axes=axes)
    return _settle(np.tensordot(_widen(a), _widen(b), axes=axes))


def int_add(a: np.ndarray, b: np.ndarray, sign: int = 1) -> np.ndarray:
    if a.dtype != object and b.dtype != object and _maxabs(a) + _maxabs(b) < _INT64_SAFE:
        return a + b if sign > 0 else a - b
    return _settle(_widen(a) + _widen(b) if sign > 0 else _widen(a) - _widen(b))


def int_shift(a: np.ndarray, k: int) -> np.ndarray:
    """Multiply by ``2**k`` (k >= 0) without overflow."""
    if k == 0:
        return a
    if a.dtype != object and _maxabs(a) < _INT64_SAFE >> k:
        return a << k
    return _settle(_widen(a) * (1 << k))


def _is_pow2(n: int) -> bool:
    return n > 0 and not (n & (n - 1))


def _index(i, width: int) -> int:
    if isinstance(i, str):
        if len(i) != width:
            raise IndexError(f"index string {i!r} must have length {width}")
        return int(i, 2) if i else 0
    return int(i)


class ExactMatrix:
    """Dense matrix ``(re + i*im) / 2**exp`` with power-of-two dimensions.

    Rows and columns may be indexed by integers or by bit strings (qubit 0
    is the most significant bit).  Instances are treated as immutable.
    """

    __slots__ = ("re", "im", "exp")

    def __init__(self, re, im=None, exp: int = 0, *, max_rows: int = MAX_ROWS):
        re = np.asarray(re)
        if re.ndim != 2:
            raise DimensionError("ExactMatrix needs a 2-d array")
        im = np.zeros_like(re, dtype=np.int64) if im is None else np.asarray(im)
        if im.shape != re.shape:
            raise DimensionError("real and imaginary parts differ in shape")
        rows, cols = re.shape
        if not (_is_pow2(rows) and _is_pow2(cols)):
            raise DimensionError(f"dimensions {rows}x{cols} are not powers of two")
        if rows > max_rows:
            raise DimensionError(f"{rows} rows exceeds the configured cap {max_rows}")
        re, im = _as_int_array(re), _as_int_array(im)
        re, im, exp = _normalize(re, im, int(exp))
        re.flags.writeable = False
        im.flags.writeable = False
        self.re, self.im, self.exp = re, im, exp

    # constructors -----------------------------------------------------
    @classmethod
    def from_entries(cls, rows: Sequence[Sequence], **kw) -> "ExactMatrix":
        vals = [[DyadicGaussian.coerce(v) for v in row] for row in rows]
        r = max((v.denom_log for row in vals for v in row), default=0)
        re = np.array([[v.re << (r - v.denom_log) for v in row] for row in vals], dtype=object)
        im = np.array([[v.im << (r - v.denom_log) for v in row] for row in vals], dtype=object)
        return cls(re, im, r, **kw)

    @classmethod
    def identity(cls, n: int) -> "ExactMatrix":
        return cls(np.eye(n, dtype=np.int64))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "ExactMatrix":
        return cls(np.zeros((rows, cols), dtype=np.int64))

    @classmethod
    def basis_projector(cls, bits: str) -> "ExactMatrix":
        d = 2 ** len(bits)
        a = np.zeros((d, d), dtype=np.int64)
        i = _index(bits, len(bits))
        a[i, i] = 1
        return cls(a)

    # shape ------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return self.re.shape

    @property
    def rows(self) -> int:
        return self.re.shape[0]

    @property
    def cols(self) -> int:
        return self.re.shape[1]

    @property
    def row_bits(self) -> int:
        return self.rows.bit_length() - 1

    @property
    def col_bits(self) -> int:
        return self.cols.bit_length() - 1

    def entry(self, i, j) -> DyadicGaussian:
        i = _index(i, self.row_bits)
        j = _index(j, self.col_bits)
        return DyadicGaussian(int(self.re[i, j]), int(self.im[i, j]), self.exp)

    def __getitem__(self, ij) -> DyadicGaussian:
        return self.entry(*ij)

    # algebra ----------------------------------------------------------
    def __matmul__(self, other: "ExactMatrix") -> "ExactMatrix":
        return mat_mul(self, other)

    def _combine(self, other: "ExactMatrix", sign: int) -> "ExactMatrix":
        if self.shape != other.shape:
            raise DimensionError(f"shape mismatch {self.shape} vs {other.shape}")
        r = max(self.exp, other.exp)
        a_re, a_im = int_shift(self.re, r - self.exp), int_shift(self.im, r - self.exp)
        b_re, b_im = int_shift(other.re, r - other.exp), int_shift(other.im, r - other.exp)
        return ExactMatrix(int_add(a_re, b_re, sign), int_add(a_im, b_im, sign), r,
                           max_rows=max(self.rows, MAX_ROWS))

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return ExactMatrix(-_widen(self.re), -_widen(self.im), self.exp,
                           max_rows=max(self.rows, MAX_ROWS))

    def scale(self, c) -> "ExactMatrix":
        c = DyadicGaussian.coerce(c)
        re = int_add(_widen(self.re) * c.re, _widen(self.im) * c.im, -1)
        im = int_add(_widen(self.re) * c.im, _widen(self.im) * c.re, 1)
        return ExactMatrix(re, im, self.exp + c.denom_log, max_rows=max(self.rows, MAX_ROWS))

    def conj(self) -> "ExactMatrix":
        return ExactMatrix(self.re, -_widen(self.im), self.exp, max_rows=max(self.rows, MAX_ROWS))

    @property
    def T(self) -> "ExactMatrix":
        return ExactMatrix(self.re.T, self.im.T, self.exp, max_rows=max(self.cols, MAX_ROWS))

    def dagger(self) -> "ExactMatrix":
        return self.conj().T

    def kron(self, other: "ExactMatrix") -> "ExactMatrix":
        re = int_add(np.kron(_widen(self.re), _widen(other.re)),
                     np.kron(_widen(self.im), _widen(other.im)), -1)
        im = int_add(np.kron(_widen(self.re), _widen(other.im)),
                     np.kron(_widen(self.im), _widen(other.re)), 1)
        return ExactMatrix(re, im, self.exp + other.exp,
                           max_rows=max(self.rows * other.rows, MAX_ROWS))

    def trace(self) -> DyadicGaussian:
        if self.rows != self.cols:
            raise DimensionError("trace of a non-square matrix")
        return DyadicGaussian(int(sum(int(v) for v in np.diagonal(self.re))),
                              int(sum(int(v) for v in np.diagonal(self.im))), self.exp)

    def is_hermitian(self) -> bool:
        return self.rows == self.cols and self == self.dagger()

    def is_zero(self) -> bool:
        return _maxabs(self.re) == 0 and _maxabs(self.im) == 0

    def to_numpy(self) -> np.ndarray:
        """Complex128 copy; exact whenever numerators fit in 53 bits."""
        scale = 2.0 ** -self.exp
        if self.re.dtype == object or self.im.dtype == object:
            f = np.vectorize(lambda v: float(Fraction(int(v), 2**self.exp)), otypes=[float])
            return f(self.re) + 1j * f(self.im)
        return self.re.astype(float) * scale + 1j * (self.im.astype(float) * scale)

    # comparison -------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        return (self.shape == other.shape and self.exp == other.exp
                and np.array_equal(self.re, other.re) and np.array_equal(self.im, other.im))

    __hash__ = None

    def __repr__(self):
        return f"ExactMatrix({self.rows}x{self.cols}, 2^-{self.exp})"


def _as_int_array(a: np.ndarray) -> np.ndarray:
    if a.dtype.kind in "biu":
        return a.astype(np.int64)
    if a.dtype == object:
        return _settle(np.vectorize(int, otypes=[object])(a) if a.size else a)
    raise TypeError(f"numerators must be integers, got dtype {a.dtype}")


def _normalize(re: np.ndarray, im: np.ndarray, exp: int):
    if exp == 0:
        return re, im, 0
    bits = 0
    for arr in (re, im):
        if arr.size:
            if arr.dtype == object:
                bits |= reduce(operator.or_, (abs(int(v)) for v in arr.flat), 0)
            else:
                bits |= int(np.bitwise_or.reduce(np.abs(arr), axis=None))
    if bits == 0:
        return re, im, 0
    shift = min(exp, _trailing_zeros(bits))
    if shift:
        re = re >> shift if re.dtype != object else _settle(re // (1 << shift))
        im = im >> shift if im.dtype != object else _settle(im // (1 << shift))
    return re, im, exp - shift


def mat_mul(a: ExactMatrix, b: ExactMatrix) -> ExactMatrix:
    """Exact product ``a @ b``."""
    if a.cols != b.rows:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    rr = int_matmul(a.re, b.re)
    ii = int_matmul(a.im, b.im)
    ri = int_matmul(a.re, b.im)
    ir = int_matmul(a.im, b.re)
    return ExactMatrix(int_add(rr, ii, -1), int_add(ri, ir, 1), a.exp + b.exp,
                       max_rows=max(a.rows, MAX_ROWS))


def mat_trace_power(a: ExactMatrix, e: int) -> DyadicGaussian:
    """``Tr(a**e)`` computed by exact repeated squaring."""
    if a.rows != a.cols:
        raise DimensionError("trace power needs a square matrix")
    if e < 1:
        raise ValueError("exponent must be positive")
    result = None
    base = a
    while e:
        if e & 1:
            result = base if result is None else mat_mul(result, base)
        e >>= 1
        if e:
            base = mat_mul(base, base)
    return result.trace()


def exact_sum(mats: Iterable[ExactMatrix]) -> ExactMatrix:
    mats = list(mats)
    if not mats:
        raise ValueError("empty sum")
    return reduce(operator.add, mats)

"""Finitely supported multivariate sequences and multirate lattice operations.

A ``CoefSeq`` stores a dense array over an integer support box together
with the box's lowest corner; lookups outside the box are zero.  The
operations here (convolution, correlation, lattice up/downsampling,
unimodular reindexing, tensor products) are the raw material for masks,
filters and signals alike.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.signal import convolve as _nd_convolve

from .errors import DimMismatchError, NotUnimodularError, SingularMatrixError
from .lattice import IntMatrix, determinant, is_unimodular, rational_inverse

Vec = tuple[int, ...]


@dataclass(frozen=True)
class Window:
    """Inclusive integer box [lo, hi] in Z^s."""

    lo: Vec
    hi: Vec

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("window corners must share dimension")
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"empty window {self.lo}..{self.hi}")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> Vec:
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))

    @property
    def cells(self) -> int:
        return math.prod(self.shape)

    def contains(self, point: Sequence[int]) -> bool:
        return all(l <= p <= h for l, p, h in zip(self.lo, point, self.hi))

    def points(self):
        return itertools.product(*[range(l, h + 1) for l, h in zip(self.lo, self.hi)])


class CoefSeq:
    """Finitely supported real sequence on Z^s (dense box storage)."""

    __slots__ = ("origin", "data")

    def __init__(self, origin: Sequence[int], data: np.ndarray):
        data = np.ascontiguousarray(np.asarray(data, dtype=np.float64))
        if data.ndim != len(origin):
            raise ValueError("origin length must match array rank")
        self.origin: Vec = tuple(int(x) for x in origin)
        self.data = data

    @property
    def dim(self) -> int:
        return self.data.ndim

    @property
    def shape(self) -> Vec:
        return self.data.shape

    @property
    def window(self) -> Window:
        return Window(self.origin,
                      tuple(o + n - 1 for o, n in zip(self.origin, self.shape)))

    def value(self, alpha: Sequence[int]) -> float:
        idx = tuple(int(a) - o for a, o in zip(alpha, self.origin))
        if any(i < 0 or i >= n for i, n in zip(idx, self.shape)):
            return 0.0
        return float(self.data[idx])

    def scaled(self, factor: float) -> "CoefSeq":
        return CoefSeq(self.origin, self.data * factor)

    def reversed(self) -> "CoefSeq":
        """The sequence alpha -> value(-alpha)."""
        flipped = self.data[tuple(slice(None, None, -1) for _ in range(self.dim))]
        origin = tuple(-(o + n - 1) for o, n in zip(self.origin, self.shape))
        return CoefSeq(origin, flipped.copy())

    def trimmed(self) -> "CoefSeq":
        """Shrink the box to the exact nonzero support (keeps one cell if all zero)."""
        nz = np.nonzero(self.data)
        if nz[0].size == 0:
            return CoefSeq((0,) * self.dim, np.zeros((1,) * self.dim))
        lo = [int(ix.min()) for ix in nz]
        hi = [int(ix.max()) for ix in nz]
        sl = tuple(slice(l, h + 1) for l, h in zip(lo, hi))
        return CoefSeq(tuple(o + l for o, l in zip(self.origin, lo)), self.data[sl].copy())

    def sum(self) -> float:
        return float(self.data.sum())

    def linf(self) -> float:
        return float(np.abs(self.data).max()) if self.data.size else 0.0

    def l2(self) -> float:
        return float(np.sqrt((self.data ** 2).sum()))

    def __repr__(self):
        return f"CoefSeq(dim={self.dim}, origin={self.origin}, shape={self.shape})"


def delta(s: int) -> CoefSeq:
    """The pulse: 1 at the origin of Z^s, 0 elsewhere."""
    if s < 1:
        raise ValueError("dimension must be >= 1")
    data = np.zeros((1,) * s)
    data[(0,) * s] = 1.0
    return CoefSeq((0,) * s, data)


def _check_dims(a: CoefSeq, b: CoefSeq):
    if a.dim != b.dim:
        raise DimMismatchError(f"dimensions {a.dim} and {b.dim} differ")


def convolve(a: CoefSeq, b: CoefSeq) -> CoefSeq:
    """(a*b)(gamma) = sum_alpha a(alpha) b(gamma - alpha)."""
    _check_dims(a, b)
    data = _nd_convolve(a.data, b.data, mode="full", method="direct")
    origin = tuple(oa + ob for oa, ob in zip(a.origin, b.origin))
    return CoefSeq(origin, data)


def correlate(a: CoefSeq, b: CoefSeq) -> CoefSeq:
    """(a x b)(gamma) = sum_alpha a(alpha) b(alpha - gamma)."""
    return convolve(a, b.reversed())


def _preimage_box(m: IntMatrix, window: Window) -> tuple[Vec, Vec] | None:
    """Integer bounding box of m^-1 applied to the window (None if empty)."""
    inv = rational_inverse(m)
    s = m.dim
    corners = [inv.apply(c)
               for c in itertools.product(*zip(window.lo, window.hi))]
    lo = tuple(math.ceil(min(c[i] for c in corners)) for i in range(s))
    hi = tuple(math.floor(max(c[i] for c in corners)) for i in range(s))
    if any(l > h for l, h in zip(lo, hi)):
        return None
    return lo, hi


def _image_box(m: IntMatrix, window: Window) -> tuple[Vec, Vec]:
    """Integer bounding box of m applied to the window."""
    s = m.dim
    corners = [m.apply(c) for c in itertools.product(*zip(window.lo, window.hi))]
    lo = tuple(min(c[i] for c in corners) for i in range(s))
    hi = tuple(max(c[i] for c in corners) for i in range(s))
    return lo, hi


def _gather(c: CoefSeq, m: IntMatrix) -> CoefSeq:
    """result(alpha) = c(m alpha) on the bounding box of m^-1(support)."""
    box = _preimage_box(m, c.window)
    if box is None:
        return CoefSeq((0,) * c.dim, np.zeros((1,) * c.dim))
    lo, hi = box
    shape = tuple(h - l + 1 for l, h in zip(lo, hi))
    idx = np.indices(shape, dtype=np.int64).reshape(c.dim, -1)
    idx += np.asarray(lo, dtype=np.int64)[:, None]
    beta = np.asarray(m.entries, dtype=np.int64) @ idx
    rel = beta - np.asarray(c.origin, dtype=np.int64)[:, None]
    ok = np.all((rel >= 0) & (rel < np.asarray(c.shape)[:, None]), axis=0)
    out = np.zeros(math.prod(shape))
    out[ok] = c.data[tuple(rel[:, ok])]
    return CoefSeq(lo, out.reshape(shape)).trimmed()


def downsample(c: CoefSeq, xi: IntMatrix) -> CoefSeq:
    """Keep the sublattice samples: result(alpha) = c(xi alpha)."""
    if xi.dim != c.dim:
        raise DimMismatchError(f"matrix dim {xi.dim} != sequence dim {c.dim}")
    if determinant(xi) == 0:
        raise SingularMatrixError("dilation matrix is singular")
    return _gather(c, xi)


def upsample(c: CoefSeq, xi: IntMatrix) -> CoefSeq:
    """Spread onto the sublattice: result(xi alpha) = c(alpha), zero off it."""
    if xi.dim != c.dim:
        raise DimMismatchError(f"matrix dim {xi.dim} != sequence dim {c.dim}")
    if determinant(xi) == 0:
        raise SingularMatrixError("dilation matrix is singular")
    lo, hi = _image_box(xi, c.window)
    shape = tuple(h - l + 1 for l, h in zip(lo, hi))
    out = np.zeros(shape)
    idx = np.indices(c.shape, dtype=np.int64).reshape(c.dim, -1)
    idx += np.asarray(c.origin, dtype=np.int64)[:, None]
    beta = np.asarray(xi.entries, dtype=np.int64) @ idx
    beta -= np.asarray(lo, dtype=np.int64)[:, None]
    out[tuple(beta)] = c.data.reshape(-1)
    return CoefSeq(lo, out)


def reindex(c: CoefSeq, theta: IntMatrix) -> CoefSeq:
    """Unimodular change of variables: result(alpha) = c(theta alpha)."""
    if theta.dim != c.dim:
        raise DimMismatchError(f"matrix dim {theta.dim} != sequence dim {c.dim}")
    if not is_unimodular(theta):
        raise NotUnimodularError("reindexing requires a unimodular matrix")
    return _gather(c, theta)


def tensor(factors: Sequence[CoefSeq]) -> CoefSeq:
    """Tensor product of univariate sequences: h(alpha) = prod h_j(alpha_j)."""
    if not factors:
        raise ValueError("tensor needs at least one factor")
    if any(f.dim != 1 for f in factors):
        raise DimMismatchError("tensor factors must be one-dimensional")
    data = factors[0].data
    for f in factors[1:]:
        data = np.multiply.outer(data, f.data)
    origin = tuple(f.origin[0] for f in factors)
    return CoefSeq(origin, data)


def qmf_residual(a: CoefSeq, xi: IntMatrix) -> float:
    """Deviation of a mask from the orthonormality (QMF) identity.

    Computes max over lattice lags gamma of
    |sum_alpha a(alpha) a(alpha - xi gamma) - |det xi| delta(gamma)|;
    zero means the mask is orthonormal for the dilation xi.
    """
    return cross_qmf_residual(a, a, xi, same=True)


def cross_qmf_residual(b: CoefSeq, b2: CoefSeq, xi: IntMatrix, same: bool) -> float:
    """Deviation of a filter pair from |det xi| . delta_{same} . delta."""
    _check_dims(b, b2)
    if xi.dim != b.dim:
        raise DimMismatchError(f"matrix dim {xi.dim} != sequence dim {b.dim}")
    d = determinant(xi)
    if d == 0:
        raise SingularMatrixError("dilation matrix is singular")
    lagged = downsample(correlate(b, b2), xi)
    if not same:
        return lagged.linf()
    arr = lagged.data.copy()
    idx = tuple(-o for o in lagged.origin)
    if all(0 <= i < n for i, n in zip(idx, lagged.shape)):
        arr[idx] -= abs(d)
        return float(np.abs(arr).max())
    return max(lagged.linf(), float(abs(d)))


def sample_polynomial(terms: Iterable[tuple[float, Sequence[int]]],
                      window: Window) -> CoefSeq:
    """Restrict a polynomial sum(coef * x^expo) to the integer window."""
    grids = np.meshgrid(*[np.arange(l, h + 1, dtype=np.float64)
                          for l, h in zip(window.lo, window.hi)], indexing="ij")
    out = np.zeros(window.shape)
    for coef, expo in terms:
        term = np.full(window.shape, float(coef))
        for g, e in zip(grids, expo):
            if e:
                term = term * g ** int(e)
        out += term
    return CoefSeq(window.lo, out)


# -- value-aligned arithmetic helpers ---------------------------------------

def _union_box(a: CoefSeq, b: CoefSeq) -> tuple[Vec, Vec]:
    lo = tuple(min(x, y) for x, y in zip(a.origin, b.origin))
    hi = tuple(max(x + n - 1, y + m - 1)
               for x, n, y, m in zip(a.origin, a.shape, b.origin, b.shape))
    return lo, hi


def embed(c: CoefSeq, lo: Vec, hi: Vec) -> np.ndarray:
    """Dense copy of c on the box [lo, hi] (zero padded)."""
    shape = tuple(h - l + 1 for l, h in zip(lo, hi))
    out = np.zeros(shape)
    sl = tuple(slice(o - l, o - l + n) for o, l, n in zip(c.origin, lo, c.shape))
    out[sl] = c.data
    return out


def seq_add(a: CoefSeq, b: CoefSeq) -> CoefSeq:
    _check_dims(a, b)
    lo, hi = _union_box(a, b)
    return CoefSeq(lo, embed(a, lo, hi) + embed(b, lo, hi))


def seq_sub(a: CoefSeq, b: CoefSeq) -> CoefSeq:
    _check_dims(a, b)
    lo, hi = _union_box(a, b)
    return CoefSeq(lo, embed(a, lo, hi) - embed(b, lo, hi))


def max_abs_diff(a: CoefSeq, b: CoefSeq) -> float:
    """Sup-norm distance treating both sequences as elements of l(Z^s)."""
    return seq_sub(a, b).linf()

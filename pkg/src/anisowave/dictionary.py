"""Univariate orthogonal filter families and the anisotropic bank builder.

Ships three univariate sets (Haar, Daubechies order 2, and the ternary
Chui-Lian orthogonal filters) with coefficients materialized from their
closed forms, and assembles multivariate filterbanks for an arbitrary
dilation matrix by tensoring the univariate filters over a compatible
diagonal and reindexing with the unimodular Smith factor.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import BadIndexError, ScaleMismatchError, WindowTooSmallError
from .lattice import (
    IntMatrix,
    SmithFactorization,
    determinant,
    inverse_unimodular,
    smith_with_target,
)
from .seqcore import (
    CoefSeq,
    Window,
    _preimage_box,
    cross_qmf_residual,
    reindex,
    sample_polynomial,
    tensor,
)

MOMENT_TOL = 1e-10


@dataclass(frozen=True)
class UnivariateQMFSet:
    """Orthogonal filters for one integer scale: filters[0] is the lowpass."""

    scale: int
    filters: tuple[CoefSeq, ...]

    def __post_init__(self):
        if self.scale < 2:
            raise ScaleMismatchError("scale must be >= 2")
        if len(self.filters) != self.scale:
            raise ScaleMismatchError(
                f"need {self.scale} filters, got {len(self.filters)}")
        if any(f.dim != 1 for f in self.filters):
            raise ScaleMismatchError("univariate filters must be 1-D")

    def qmf_residuals(self) -> dict[tuple[int, int], float]:
        """Residual of every ordered filter pair against the QMF identity."""
        xi = IntMatrix.from_rows([[self.scale]])
        return {(k, l): cross_qmf_residual(self.filters[k], self.filters[l], xi, k == l)
                for k in range(self.scale) for l in range(self.scale)}


def haar() -> UnivariateQMFSet:
    """Two-band Haar pair (1, 1) / (1, -1)."""
    g0 = CoefSeq((0,), np.array([1.0, 1.0]))
    g1 = CoefSeq((0,), np.array([1.0, -1.0]))
    return UnivariateQMFSet(2, (g0, g1))


def daubechies2() -> UnivariateQMFSet:
    """Orthogonal two-band filters of order 2, normalized to sum 2."""
    r3 = math.sqrt(3.0)
    g0 = CoefSeq((0,), np.array([1 + r3, 3 + r3, 3 - r3, 1 - r3]) / 4.0)
    g1 = CoefSeq((0,), np.array([1 - r3, -3 + r3, 3 + r3, -1 - r3]) / 4.0)
    return UnivariateQMFSet(2, (g0, g1))


def chui_lian_ternary() -> UnivariateQMFSet:
    """Orthogonal three-band filters with two vanishing moments."""
    r57 = math.sqrt(57.0)
    r2 = math.sqrt(2.0)
    g0 = CoefSeq((0,), np.array(
        [3 + r57, 9 + r57, 15 + r57, 15 - r57, 9 - r57, 3 - r57]) / 18.0)
    g1 = CoefSeq((0,), np.array([-r2 / 2, r2, -r2 / 2, 0.0, 0.0, 0.0]))
    lead = math.sqrt(11.0 - r57) / 144.0
    g2 = CoefSeq((0,), lead * np.array(
        [-21 + r57, -6 - 2 * r57, 9 - 5 * r57, 48 + 8 * r57, 6 + 2 * r57,
         -36 - 4 * r57]))
    return UnivariateQMFSet(3, (g0, g1, g2))


#: named families accepted by the CLI and config files
FAMILIES = {"haar": haar, "db2": daubechies2, "cl3": chui_lian_ternary}


def univariate_sets_from_names(names: Sequence[str]) -> tuple[UnivariateQMFSet, ...]:
    """Resolve named built-in families or JSON files holding custom sets."""
    import os

    sets = []
    for name in names:
        if name in FAMILIES:
            sets.append(FAMILIES[name]())
        elif os.path.isfile(name):
            import json

            from .formats import univariate_set_from_json

            with open(name, "r", encoding="utf-8") as handle:
                sets.append(univariate_set_from_json(json.load(handle)))
        else:
            raise ScaleMismatchError(
                f"unknown filter family {name!r} (known: {sorted(FAMILIES)})")
    return tuple(sets)


def moment_order(f: CoefSeq, tol: float = MOMENT_TOL) -> int:
    """Number of leading vanishing discrete moments of a 1-D sequence.

    Largest n such that sum_alpha alpha^k f(alpha) vanishes for all
    k < n; zero when the plain sum is nonzero.
    """
    if f.dim != 1:
        raise ScaleMismatchError("moment_order expects a 1-D sequence")
    positions = np.arange(f.origin[0], f.origin[0] + f.shape[0], dtype=np.float64)
    for k in range(f.shape[0] + 2):
        if abs(float((positions ** k * f.data).sum())) > tol:
            return k
    return f.shape[0] + 2


def moment_order_nd(f: CoefSeq, tol: float = MOMENT_TOL, cap: int = 16) -> int:
    """Multivariate analogue: moments over all exponents of total degree < n."""
    grids = np.meshgrid(*[np.arange(o, o + n, dtype=np.float64)
                          for o, n in zip(f.origin, f.shape)], indexing="ij")
    for k in range(cap):
        for expo in itertools.product(range(k + 1), repeat=f.dim):
            if sum(expo) != k:
                continue
            term = f.data
            for g, e in zip(grids, expo):
                if e:
                    term = term * g ** e
            if abs(float(term.sum())) > tol:
                return k
    return cap


@dataclass(frozen=True)
class AnisoFilterBank:
    """Critically sampled QMF filterbank for one dilation matrix.

    filters maps each index eta in Z_sigma1 x ... x Z_sigmas to its
    filter; the all-zero index is the lowpass mask.  The filters are the
    tensor filters of the univariate sets composed with theta1^-1 from
    the stored Smith factorization.
    """

    xi: IntMatrix
    fact: SmithFactorization
    sigma: tuple[int, ...]
    filters: Mapping[tuple[int, ...], CoefSeq] = field(repr=False)
    moment_orders: Mapping[tuple[int, ...], int] = field(repr=False)

    @property
    def dim(self) -> int:
        return self.xi.dim

    @property
    def det(self) -> int:
        return abs(determinant(self.xi))

    @property
    def lowpass(self) -> CoefSeq:
        return self.filters[(0,) * self.dim]

    def indices(self) -> list[tuple[int, ...]]:
        """All filter indices in lexicographic order (lowpass first)."""
        return sorted(self.filters.keys())

    def highpass_indices(self) -> list[tuple[int, ...]]:
        return [eta for eta in self.indices() if any(eta)]

    def filter_at(self, eta: Sequence[int]) -> CoefSeq:
        key = tuple(int(e) for e in eta)
        if key not in self.filters:
            raise BadIndexError(f"no filter with index {key}")
        return self.filters[key]

    def support_hull(self) -> Window:
        """Smallest box containing every filter's support."""
        lo = tuple(min(f.origin[i] for f in self.filters.values())
                   for i in range(self.dim))
        hi = tuple(max(f.origin[i] + f.shape[i] - 1 for f in self.filters.values())
                   for i in range(self.dim))
        return Window(lo, hi)

    def residual_matrix(self) -> dict[tuple[tuple[int, ...], tuple[int, ...]], float]:
        """Cross-QMF residual for every ordered pair of filters."""
        out = {}
        for eta in self.indices():
            for eta2 in self.indices():
                out[(eta, eta2)] = cross_qmf_residual(
                    self.filters[eta], self.filters[eta2], self.xi, eta == eta2)
        return out


def build_bank(xi: IntMatrix, target_sigma: Sequence[int],
               sets: Sequence[UnivariateQMFSet]) -> AnisoFilterBank:
    """Assemble the |det xi| filters for xi from univariate QMF sets.

    target_sigma must be a diagonal with the same Smith normal form as
    xi, and sets[j] must carry scale target_sigma[j].  Each filter is
    the tensor product of one univariate filter per axis, composed with
    theta1^-1 so the bank satisfies the QMF identities for xi itself.
    """
    sigma = tuple(int(t) for t in target_sigma)
    if len(sets) != len(sigma):
        raise ScaleMismatchError("one univariate set per diagonal entry required")
    for j, (s_j, uset) in enumerate(zip(sigma, sets)):
        if uset.scale != s_j:
            raise ScaleMismatchError(
                f"set {j} has scale {uset.scale}, diagonal wants {s_j}")
    fact = smith_with_target(xi, sigma)
    theta1_inv = inverse_unimodular(fact.theta1)
    identity = theta1_inv == IntMatrix.identity(xi.dim)

    filters: dict[tuple[int, ...], CoefSeq] = {}
    orders: dict[tuple[int, ...], int] = {}
    for eta in itertools.product(*[range(s_j) for s_j in sigma]):
        g_eta = tensor([sets[j].filters[eta[j]] for j in range(len(sigma))])
        b_eta = g_eta if identity else reindex(g_eta, theta1_inv)
        filters[eta] = b_eta
        orders[eta] = 0 if not any(eta) else moment_order_nd(b_eta)
    return AnisoFilterBank(xi, fact, sigma, filters, orders)


@dataclass(frozen=True)
class ReproductionRow:
    exponent: tuple[int, ...]
    detail_max: float
    fit_residual: float


@dataclass(frozen=True)
class ReproductionReport:
    """Polynomial reproduction diagnostics for a bank."""

    degree: int
    window: Window
    rows: tuple[ReproductionRow, ...]

    @property
    def max_detail(self) -> float:
        return max(r.detail_max for r in self.rows)

    @property
    def max_fit_residual(self) -> float:
        return max(r.fit_residual for r in self.rows)

    def passed(self, tol: float = MOMENT_TOL) -> bool:
        return self.max_detail <= tol


def analysis_core(window: Window, xi: IntMatrix, support: Window) -> list[tuple[int, ...]]:
    """Lags gamma whose analysis taps xi*gamma + support stay inside window."""
    lo = tuple(wl - sl for wl, sl in zip(window.lo, support.lo))
    hi = tuple(wh - sh for wh, sh in zip(window.hi, support.hi))
    if any(l > h for l, h in zip(lo, hi)):
        return []
    box = _preimage_box(xi, Window(lo, hi))
    if box is None:
        return []
    core = []
    for gamma in Window(*box).points():
        image = xi.apply(gamma)
        if all(l <= x <= h for l, x, h in zip(lo, image, hi)):
            core.append(gamma)
    return core


def _subdivision_core(window: Window, xi: IntMatrix,
                      mask: CoefSeq) -> list[tuple[int, ...]]:
    """Output cells of one subdivision step fed only by in-window data."""
    supp = [m for m in mask.window.points() if mask.value(m) != 0.0]
    fed: set[tuple[int, ...]] = set()
    for alpha in window.points():
        xa = xi.apply(alpha)
        for m in supp:
            fed.add(tuple(x + mm for x, mm in zip(xa, m)))
    if not fed:
        raise WindowTooSmallError("empty subdivision output")
    dims = range(xi.dim)
    fed_lo = tuple(min(b[i] for b in fed) for i in dims)
    fed_hi = tuple(max(b[i] for b in fed) for i in dims)
    # any alpha with xi*alpha in fed_box - supp_box can taint output cells
    reach_lo = tuple(fed_lo[i] - mask.window.hi[i] for i in dims)
    reach_hi = tuple(fed_hi[i] - mask.window.lo[i] for i in dims)
    box = _preimage_box(xi, Window(reach_lo, reach_hi))
    if box is not None:
        for alpha in Window(*box).points():
            if window.contains(alpha):
                continue
            xa = xi.apply(alpha)
            if any(x < rl or x > rh for x, rl, rh in zip(xa, reach_lo, reach_hi)):
                continue
            for m in supp:
                fed.discard(tuple(x + mm for x, mm in zip(xa, m)))
    if not fed:
        raise WindowTooSmallError("no boundary-free subdivision output cells")
    return sorted(fed)


def _fit_polynomial(points: np.ndarray, values: np.ndarray, degree: int) -> float:
    """Max residual of a least-squares polynomial fit of the given degree."""
    dim = points.shape[1]
    scale = max(1.0, float(np.abs(points).max()))
    cols = []
    for expo in itertools.product(range(degree + 1), repeat=dim):
        if sum(expo) > degree:
            continue
        col = np.ones(len(points))
        for d, e in enumerate(expo):
            if e:
                col = col * (points[:, d] / scale) ** e
        cols.append(col)
    vand = np.stack(cols, axis=1)
    coef, *_ = np.linalg.lstsq(vand, values, rcond=None)
    return float(np.abs(vand @ coef - values).max())


def reproduction_check(bank: AnisoFilterBank, degree: int,
                       window: Window) -> ReproductionReport:
    """Verify that the bank annihilates / reproduces polynomials.

    For every monomial of total degree <= degree, the analysis details
    must vanish on the boundary-unaffected core of the window, and one
    lowpass subdivision step applied to the samples must stay a
    polynomial of the same degree (reported as a fit residual).
    """
    from . import mmra
    from .subdivision import SubdivisionOp, subdivide

    hull = bank.support_hull()
    core = analysis_core(window, bank.xi, hull)
    if not core:
        raise WindowTooSmallError(
            f"window {window.lo}..{window.hi} has no boundary-free core")
    out_core = _subdivision_core(window, bank.xi, bank.lowpass)
    out_pts = np.array(out_core, dtype=np.float64)

    rows = []
    for expo in itertools.product(range(degree + 1), repeat=bank.dim):
        if sum(expo) > degree:
            continue
        samples = sample_polynomial([(1.0, expo)], window)
        parts = mmra.analyze(bank, samples)
        detail_max = max(
            max(abs(parts[eta].value(g)) for g in core)
            for eta in bank.highpass_indices())

        refined = subdivide(SubdivisionOp(bank.xi, bank.lowpass), samples)
        vals = np.array([refined.value(b) for b in out_core])
        fit = _fit_polynomial(out_pts, vals, sum(expo))
        rows.append(ReproductionRow(expo, detail_max, fit))
    return ReproductionReport(degree, window, tuple(rows))

"""Exact integer-lattice matrix algebra.

Dilation matrices, unimodular factors, Smith factorizations, coset
enumeration and the shear/dilation families driving the anisotropic
filterbank construction.  Everything in this module is exact: entries
are Python ints or ``fractions.Fraction``, never floats.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import (
    BadDigitError,
    BadScalesError,
    IncompatibleDiagonalError,
    InconclusiveError,
    NotUnimodularError,
    SingularMatrixError,
)

Vec = tuple[int, ...]

#: iteration cap for the exact expansiveness test
EXPANSIVE_ITERATION_CAP = 64


def _as_int(x) -> int:
    v = int(x)
    if v != x:
        raise ValueError(f"entry {x!r} is not an integer")
    return v


@dataclass(frozen=True)
class IntMatrix:
    """Square integer matrix with value semantics."""

    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        n = len(self.entries)
        if n == 0 or any(len(row) != n for row in self.entries):
            raise ValueError("matrix must be square and nonempty")

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]]) -> "IntMatrix":
        return cls(tuple(tuple(_as_int(x) for x in row) for row in rows))

    @classmethod
    def identity(cls, s: int) -> "IntMatrix":
        return cls(tuple(tuple(1 if i == j else 0 for j in range(s)) for i in range(s)))

    @classmethod
    def diagonal(cls, values: Sequence[int]) -> "IntMatrix":
        s = len(values)
        return cls(tuple(tuple(_as_int(values[i]) if i == j else 0 for j in range(s))
                         for i in range(s)))

    @property
    def dim(self) -> int:
        return len(self.entries)

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        n = self.dim
        return IntMatrix(tuple(
            tuple(sum(self.entries[i][k] * other.entries[k][j] for k in range(n))
                  for j in range(n))
            for i in range(n)))

    def apply(self, v: Sequence[int]) -> Vec:
        n = self.dim
        return tuple(sum(self.entries[i][k] * v[k] for k in range(n)) for i in range(n))

    def transpose(self) -> "IntMatrix":
        n = self.dim
        return IntMatrix(tuple(tuple(self.entries[j][i] for j in range(n)) for i in range(n)))

    def rows(self) -> list[list[int]]:
        return [list(r) for r in self.entries]

    def is_diagonal(self) -> bool:
        return all(self.entries[i][j] == 0
                   for i in range(self.dim) for j in range(self.dim) if i != j)


@dataclass(frozen=True)
class RatMatrix:
    """Square matrix over exact rationals."""

    entries: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        n = len(self.entries)
        if n == 0 or any(len(row) != n for row in self.entries):
            raise ValueError("matrix must be square and nonempty")

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable]) -> "RatMatrix":
        return cls(tuple(tuple(Fraction(x) for x in row) for row in rows))

    @classmethod
    def identity(cls, s: int) -> "RatMatrix":
        return cls.from_rows([[1 if i == j else 0 for j in range(s)] for i in range(s)])

    @classmethod
    def from_int(cls, m: IntMatrix) -> "RatMatrix":
        return cls.from_rows(m.entries)

    @property
    def dim(self) -> int:
        return len(self.entries)

    def __matmul__(self, other) -> "RatMatrix":
        o = RatMatrix.from_int(other) if isinstance(other, IntMatrix) else other
        n = self.dim
        return RatMatrix(tuple(
            tuple(sum(self.entries[i][k] * o.entries[k][j] for k in range(n))
                  for j in range(n))
            for i in range(n)))

    def apply(self, v: Sequence) -> tuple[Fraction, ...]:
        n = self.dim
        return tuple(sum(self.entries[i][k] * Fraction(v[k]) for k in range(n))
                     for i in range(n))

    def is_integral(self) -> bool:
        return all(x.denominator == 1 for row in self.entries for x in row)

    def to_int_matrix(self) -> IntMatrix:
        if not self.is_integral():
            raise ValueError("matrix has non-integer entries")
        return IntMatrix.from_rows([[int(x) for x in row] for row in self.entries])

    def norm_inf(self) -> Fraction:
        """Maximum absolute row sum."""
        return max(sum(abs(x) for x in row) for row in self.entries)

    def norm_one(self) -> Fraction:
        """Maximum absolute column sum."""
        n = self.dim
        return max(sum(abs(self.entries[i][j]) for i in range(n)) for j in range(n))


def determinant(m: IntMatrix) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    a = m.rows()
    n = m.dim
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def is_unimodular(m: IntMatrix) -> bool:
    return abs(determinant(m)) == 1


def rational_inverse(m: IntMatrix) -> RatMatrix:
    """Exact inverse over the rationals (Gauss-Jordan on Fractions)."""
    n = m.dim
    a = [[Fraction(x) for x in row] for row in m.entries]
    inv = [[Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise SingularMatrixError("matrix is singular")
        a[col], a[piv] = a[piv], a[col]
        inv[col], inv[piv] = inv[piv], inv[col]
        p = a[col][col]
        a[col] = [x / p for x in a[col]]
        inv[col] = [x / p for x in inv[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
                inv[r] = [x - f * y for x, y in zip(inv[r], inv[col])]
    return RatMatrix(tuple(tuple(row) for row in inv))


def inverse_unimodular(m: IntMatrix) -> IntMatrix:
    """Integer inverse of a unimodular matrix."""
    if not is_unimodular(m):
        raise NotUnimodularError(f"matrix has determinant {determinant(m)}")
    return rational_inverse(m).to_int_matrix()


def is_expansive(m: IntMatrix, cap: int = EXPANSIVE_ITERATION_CAP) -> bool:
    """Exact test that all eigenvalues exceed one in modulus.

    Iterates powers of the rational inverse until the maximum absolute
    row sum drops below 1 (expansive) or the cap is reached.  A matrix
    with |det| = 1 cannot be expansive and is rejected immediately;
    otherwise an undecided run raises ``InconclusiveError`` rather than
    silently returning False.
    """
    d = determinant(m)
    if d == 0:
        raise SingularMatrixError("matrix is singular")
    if abs(d) == 1:
        # eigenvalue moduli multiply to 1, so they cannot all exceed 1
        return False
    inv = rational_inverse(m)
    power = inv
    for _ in range(cap):
        if power.norm_inf() < 1:
            return True
        power = power @ inv
    raise InconclusiveError(
        f"no power of the inverse fell below norm 1 within {cap} iterations")


@dataclass(frozen=True)
class SmithFactorization:
    """Decomposition M = theta1 . diag(sigma) . theta2 with unimodular factors."""

    theta1: IntMatrix
    sigma: tuple[int, ...]
    theta2: IntMatrix

    def __post_init__(self):
        if not is_unimodular(self.theta1) or not is_unimodular(self.theta2):
            raise NotUnimodularError("Smith factors must be unimodular")

    def reconstruct(self) -> IntMatrix:
        return self.theta1 @ IntMatrix.diagonal(self.sigma) @ self.theta2


def _smith_eliminate(m: IntMatrix) -> tuple[IntMatrix, list[int], IntMatrix]:
    """Diagonalize by unimodular row/column operations.

    Gauss elimination with division by remainder and total pivoting,
    tracking theta1 and theta2 so that m = theta1 . diag . theta2 at
    every step.  The returned diagonal is nonnegative with the
    divisibility chain enforced.
    """
    n = m.dim
    a = m.rows()
    t1 = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    t2 = [[1 if i == j else 0 for j in range(n)] for i in range(n)]

    # row op  a <- E a  pairs with  t1 <- t1 E^-1  (a column op on t1);
    # col op  a <- a F  pairs with  t2 <- F^-1 t2  (a row op on t2).
    def row_swap(i, j):
        a[i], a[j] = a[j], a[i]
        for r in range(n):
            t1[r][i], t1[r][j] = t1[r][j], t1[r][i]

    def col_swap(i, j):
        for r in range(n):
            a[r][i], a[r][j] = a[r][j], a[r][i]
        t2[i], t2[j] = t2[j], t2[i]

    def row_add(i, j, k):  # a[i] += k * a[j]
        if k == 0:
            return
        a[i] = [x + k * y for x, y in zip(a[i], a[j])]
        for r in range(n):
            t1[r][j] -= k * t1[r][i]

    def col_add(i, j, k):  # a[:,i] += k * a[:,j]
        if k == 0:
            return
        for r in range(n):
            a[r][i] += k * a[r][j]
        t2[j] = [x - k * y for x, y in zip(t2[j], t2[i])]

    def row_negate(i):
        a[i] = [-x for x in a[i]]
        for r in range(n):
            t1[r][i] = -t1[r][i]

    def reduce_at(k):
        while True:
            # total pivot: smallest nonzero magnitude in the trailing block
            best = None
            for i in range(k, n):
                for j in range(k, n):
                    if a[i][j] != 0 and (best is None or abs(a[i][j]) < abs(a[best[0]][best[1]])):
                        best = (i, j)
            if best is None:
                return
            if best[0] != k:
                row_swap(k, best[0])
            if best[1] != k:
                col_swap(k, best[1])
            clean = True
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    row_add(i, k, -(a[i][k] // a[k][k]))
                    if a[i][k] != 0:
                        clean = False
            for j in range(k + 1, n):
                if a[k][j] != 0:
                    col_add(j, k, -(a[k][j] // a[k][k]))
                    if a[k][j] != 0:
                        clean = False
            if clean:
                return

    for k in range(n):
        reduce_at(k)

    for i in range(n):
        if a[i][i] < 0:
            row_negate(i)

    # enforce the divisibility chain d_i | d_j for i < j
    for i in range(n):
        for j in range(i + 1, n):
            di, dj = a[i][i], a[j][j]
            if di != 0 and dj % di == 0:
                continue
            col_add(i, j, 1)          # brings d_j into column i
            reduce_at(i)              # gcd lands at (i,i)
            for r in range(i, n):
                if a[r][r] < 0:
                    row_negate(r)

    return (IntMatrix.from_rows(t1), [a[i][i] for i in range(n)], IntMatrix.from_rows(t2))


def smith_normal_form(m: IntMatrix) -> SmithFactorization:
    """Smith factorization whose diagonal is the canonical normal form.

    The diagonal equals the quotients of successive determinantal
    divisors (gcds of all j x j minors), nonnegative, each value
    dividing the next; zero values (singular input) trail.
    """
    t1, diag, t2 = _smith_eliminate(m)
    fact = SmithFactorization(t1, tuple(diag), t2)
    if fact.reconstruct() != m:
        raise AssertionError("internal error: Smith reconstruction failed")
    return fact


def _row_hermite(rows: list[list[int]]) -> list[Vec]:
    """Canonical (row Hermite form) basis of the lattice spanned by rows."""
    rows = [list(r) for r in rows]
    m = len(rows)
    n = len(rows[0])
    piv = 0
    for col in range(n):
        if piv >= m:
            break
        while True:
            nz = [i for i in range(piv, m) if rows[i][col] != 0]
            if not nz:
                break
            best = min(nz, key=lambda i: abs(rows[i][col]))
            rows[piv], rows[best] = rows[best], rows[piv]
            clean = True
            for i in range(piv + 1, m):
                if rows[i][col]:
                    q = rows[i][col] // rows[piv][col]
                    rows[i] = [a - q * b for a, b in zip(rows[i], rows[piv])]
                    if rows[i][col]:
                        clean = False
            if clean:
                break
        if rows[piv][col] == 0:
            continue
        if rows[piv][col] < 0:
            rows[piv] = [-a for a in rows[piv]]
        for i in range(piv):
            q = rows[i][col] // rows[piv][col]
            rows[i] = [a - q * b for a, b in zip(rows[i], rows[piv])]
        piv += 1
    return [tuple(r) for r in rows[:piv]]


def _kernel_basis(m: IntMatrix) -> list[Vec]:
    """Canonical basis of the saturated integer kernel lattice of m."""
    fact = smith_normal_form(m)
    inv2 = inverse_unimodular(fact.theta2)
    cols = [j for j, s in enumerate(fact.sigma) if s == 0]
    raw = [[inv2.entries[i][j] for i in range(m.dim)] for j in cols]
    return _row_hermite(raw) if raw else []


def _similarity_transform(m: IntMatrix, target: Sequence[int]) -> IntMatrix | None:
    """Unimodular X with m X = X diag(target), if one exists columnwise.

    Solves each diagonal value's eigencondition over the integer
    lattice; succeeds exactly when the kernel dimensions match the
    multiplicities and the assembled matrix is unimodular.  Conjugated
    dilations (shears) land here and get their natural factors.
    """
    n = m.dim
    cols: list[list[int] | None] = [None] * n
    for value in sorted(set(target)):
        slots = [j for j, t in enumerate(target) if t == value]
        shifted = IntMatrix.from_rows(
            [[m.entries[i][j] - (value if i == j else 0) for j in range(n)]
             for i in range(n)])
        basis = _kernel_basis(shifted)
        if len(basis) != len(slots):
            return None
        for slot, vec in zip(slots, basis):
            cols[slot] = list(vec)
    x_rows = [[cols[j][i] for j in range(n)] for i in range(n)]
    x = IntMatrix.from_rows(x_rows)
    det = determinant(x)
    if abs(det) != 1:
        return None
    if det == -1:
        x = IntMatrix.from_rows(
            [[-v if j == n - 1 else v for j, v in enumerate(row)] for row in x_rows])
    if m @ x != x @ IntMatrix.diagonal(target):
        return None
    return x


def smith_with_target(m: IntMatrix, target: Sequence[int]) -> SmithFactorization:
    """Smith factorization with a prescribed diagonal.

    Requires diag(target) to have the same normal form as m.  A matrix
    that already equals diag(target) gets identity factors; a matrix
    integrally similar to diag(target) gets the similarity pair
    (theta2 = theta1^-1); otherwise the two normal forms are composed.
    """
    target = tuple(_as_int(t) for t in target)
    if len(target) != m.dim:
        raise IncompatibleDiagonalError("target length does not match dimension")
    if m == IntMatrix.diagonal(target):
        ident = IntMatrix.identity(m.dim)
        return SmithFactorization(ident, target, ident)

    fact_m = smith_normal_form(m)
    fact_t = smith_normal_form(IntMatrix.diagonal(target))
    if fact_m.sigma != fact_t.sigma:
        raise IncompatibleDiagonalError(
            f"normal form of target {fact_t.sigma} differs from {fact_m.sigma}")

    x = _similarity_transform(m, target)
    if x is not None:
        return SmithFactorization(x, target, inverse_unimodular(x))

    theta1 = fact_m.theta1 @ inverse_unimodular(fact_t.theta1)
    theta2 = inverse_unimodular(fact_t.theta2) @ fact_m.theta2
    fact = SmithFactorization(theta1, target, theta2)
    if fact.reconstruct() != m:
        raise AssertionError("internal error: target factorization failed")
    return fact


def coset_representatives(xi: IntMatrix) -> list[Vec]:
    """The |det| lattice points xi with xi^-1 . v in [0,1)^s.

    Scans the integer bounding box of the parallelepiped spanned by the
    columns of xi, testing membership in exact rational arithmetic.
    """
    d = determinant(xi)
    if d == 0:
        raise SingularMatrixError("dilation matrix is singular")
    inv = rational_inverse(xi)
    s = xi.dim
    corners = [xi.apply(c) for c in itertools.product((0, 1), repeat=s)]
    lo = [min(c[i] for c in corners) for i in range(s)]
    hi = [max(c[i] for c in corners) for i in range(s)]
    reps = []
    for point in itertools.product(*[range(lo[i], hi[i] + 1) for i in range(s)]):
        image = inv.apply(point)
        if all(0 <= x < 1 for x in image):
            reps.append(point)
    if len(reps) != abs(d):
        raise AssertionError("internal error: coset count != |det|")
    return reps


@dataclass(frozen=True)
class DilationFamily:
    """Anisotropic diagonal dilation together with its sheared conjugates.

    matrices[0] is diag(sigma1, ..., sigma1, sigma2); matrices[j] for
    j >= 1 equals shears[j]^-1 . matrices[0] . shears[j] where shears[j]
    is the codimension-1 shear with signed off-diagonal entry.
    """

    sigma1: int
    sigma2: int
    dim: int
    signs: tuple[int, ...]
    matrices: tuple[IntMatrix, ...] = field(repr=False)
    shears: tuple[IntMatrix, ...] = field(repr=False)

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.sigma2, self.sigma1)


def dilation_family(sigma1: int, sigma2: int, s: int,
                    signs: Sequence[int] | None = None) -> DilationFamily:
    """Build the s matrices Xi_0 ... Xi_{s-1} and their shears.

    signs is a vector in {0,1}^(s-1); entry 1 flips the sign of the
    corresponding shear's off-diagonal unit vector, selecting a
    different slope orthant.
    """
    if not (sigma1 > sigma2 > 1):
        raise BadScalesError(f"need sigma1 > sigma2 > 1, got {sigma1}, {sigma2}")
    if s < 2:
        raise BadScalesError("family needs dimension s >= 2")
    signs = tuple(0 for _ in range(s - 1)) if signs is None else tuple(signs)
    if len(signs) != s - 1 or any(b not in (0, 1) for b in signs):
        raise BadScalesError("signs must lie in {0,1}^(s-1)")

    xi0 = IntMatrix.diagonal([sigma1] * (s - 1) + [sigma2])
    shears = [IntMatrix.identity(s)]
    matrices = [xi0]
    for j in range(1, s):
        entry = (-1) ** (signs[j - 1] + 1)
        gamma = [[1 if i == k else 0 for k in range(s)] for i in range(s)]
        gamma[j - 1][s - 1] = entry
        gamma_m = IntMatrix.from_rows(gamma)
        xi_j = inverse_unimodular(gamma_m) @ xi0 @ gamma_m
        shears.append(gamma_m)
        matrices.append(xi_j)
    return DilationFamily(sigma1, sigma2, s, signs, tuple(matrices), tuple(shears))


def xi_product(family: DilationFamily, eps: Sequence[int]) -> IntMatrix:
    """Product Xi_eps = Xi_{eps_n} ... Xi_{eps_1} (first digit rightmost)."""
    out = IntMatrix.identity(family.dim)
    for d in eps:
        if not 0 <= d < family.dim:
            raise BadDigitError(f"digit {d} outside range(0, {family.dim})")
        out = family.matrices[d] @ out
    return out


def _signed_unit(family: DilationFamily, j: int) -> tuple[int, ...]:
    """Signed unit vector e_j in R^(s-1); zero vector for j = 0."""
    s = family.dim
    if not 0 <= j < s:
        raise BadDigitError(f"digit {j} outside range(0, {s})")
    if j == 0:
        return (0,) * (s - 1)
    return tuple(((-1) ** family.signs[j - 1] if i == j - 1 else 0) for i in range(s - 1))


def digit_polynomial(family: DilationFamily, eps: Sequence[int]) -> tuple[Fraction, ...]:
    """(1 - x) sum_k x^(k-1) e_{eps_k} evaluated at x = sigma2/sigma1."""
    s = family.dim
    x = family.ratio
    acc = [Fraction(0)] * (s - 1)
    power = Fraction(1)
    for d in eps:
        unit = _signed_unit(family, d)
        for i in range(s - 1):
            acc[i] += power * unit[i]
        power *= x
    return tuple((1 - x) * a for a in acc)


def xi_inverse_closed_form(family: DilationFamily, eps: Sequence[int]) -> RatMatrix:
    """Closed-form inverse of xi_product(family, eps), exact in rationals."""
    s = family.dim
    n = len(eps)
    p = digit_polynomial(family, eps)
    s1n = Fraction(1, family.sigma1 ** n)
    s2n = Fraction(1, family.sigma2 ** n)
    rows = []
    for i in range(s - 1):
        row = [s1n if k == i else Fraction(0) for k in range(s - 1)]
        row.append(s2n * p[i])
        rows.append(row)
    rows.append([Fraction(0)] * (s - 1) + [s2n])
    return RatMatrix.from_rows(rows)


def contractivity_bound_power(sigma1: int, sigma2: int, n: int) -> Fraction:
    """Exact n-th power of the joint contractivity bound."""
    if not (sigma1 > sigma2 > 1) or n < 1:
        raise BadScalesError("need sigma1 > sigma2 > 1 and n >= 1")
    x = Fraction(sigma2, sigma1)
    return (1 + x ** n) / Fraction(sigma2) ** n


def contractivity_bound(sigma1: int, sigma2: int, n: int) -> float:
    """Bound on ||Xi_eps^-1||^(1/n) over all digit strings of length n.

    Equals (1 + (sigma2/sigma1)^n)^(1/n) / sigma2 and tends to 1/sigma2
    as n grows; exact comparisons should use
    ``contractivity_bound_power``.
    """
    return float(contractivity_bound_power(sigma1, sigma2, n)) ** (1.0 / n)

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import anisowave as aw
from anisowave.errors import (
    BadScalesError,
    IncompatibleDiagonalError,
    InconclusiveError,
    SingularMatrixError,
)
from anisowave.lattice import (
    IntMatrix,
    RatMatrix,
    SmithFactorization,
    contractivity_bound_power,
    digit_polynomial,
    rational_inverse,
)

XI1 = IntMatrix.from_rows([[3, -1], [0, 2]])


def small_matrices(dim, lo=-9, hi=9):
    entry = st.integers(min_value=lo, max_value=hi)
    return st.lists(st.lists(entry, min_size=dim, max_size=dim),
                    min_size=dim, max_size=dim).map(IntMatrix.from_rows)


def random_unimodular(rng, s, ops=4):
    m = [[1 if i == j else 0 for j in range(s)] for i in range(s)]
    for _ in range(ops):
        i, j = rng.choice(s, 2, replace=False)
        k = int(rng.randint(-2, 3))
        for c in range(s):
            m[i][c] += k * m[j][c]
    return IntMatrix.from_rows(m)


class TestDeterminant:
    def test_examples(self):
        assert aw.determinant(IntMatrix.diagonal([3, 2])) == 6
        assert aw.determinant(XI1) == 6
        assert aw.determinant(IntMatrix.identity(3)) == 1

    @settings(max_examples=100, deadline=None)
    @given(small_matrices(3))
    def test_matches_float_determinant(self, m):
        expect = round(np.linalg.det(np.array(m.entries, dtype=float)))
        assert aw.determinant(m) == int(expect)


class TestUnimodular:
    def test_examples(self):
        assert aw.is_unimodular(IntMatrix.from_rows([[1, -1], [0, 1]]))
        assert not aw.is_unimodular(IntMatrix.diagonal([3, 2]))
        assert aw.is_unimodular(IntMatrix.identity(4))

    def test_inverse_roundtrip(self):
        rng = np.random.RandomState(5)
        for _ in range(20):
            u = random_unimodular(rng, 3)
            assert u @ aw.inverse_unimodular(u) == IntMatrix.identity(3)


class TestExpansive:
    def test_examples(self):
        assert aw.is_expansive(IntMatrix.diagonal([3, 2]))
        assert aw.is_expansive(XI1)
        assert not aw.is_expansive(IntMatrix.from_rows([[1, 1], [0, 1]]))

    def test_singular_raises(self):
        with pytest.raises(SingularMatrixError):
            aw.is_expansive(IntMatrix.from_rows([[1, 1], [1, 1]]))

    def test_eigenvalue_one_is_inconclusive(self):
        with pytest.raises(InconclusiveError):
            aw.is_expansive(IntMatrix.diagonal([1, 4]))


def brute_force_smith_diagonal(m):
    """Canonical diagonal via determinantal divisors (gcd of all minors)."""
    n = m.dim
    rows = np.array(m.entries, dtype=object)
    divisors = [1]
    for k in range(1, n + 1):
        minors = []
        for ri in itertools.combinations(range(n), k):
            for ci in itertools.combinations(range(n), k):
                sub = IntMatrix.from_rows([[int(rows[i][j]) for j in ci]
                                           for i in ri])
                minors.append(abs(aw.determinant(sub)))
        divisors.append(math.gcd(*minors) if any(minors) else 0)
    out = []
    for k in range(1, n + 1):
        if divisors[k] == 0:
            out.append(0)
        else:
            out.append(divisors[k] // divisors[k - 1])
    return tuple(out)


class TestSmithNormalForm:
    def test_worked_example(self):
        fact = aw.smith_normal_form(IntMatrix.diagonal([3, 2, 2]))
        assert fact.sigma == (1, 2, 6)
        assert fact.reconstruct() == IntMatrix.diagonal([3, 2, 2])

    def test_identity(self):
        fact = aw.smith_normal_form(IntMatrix.identity(2))
        assert fact.sigma == (1, 1)
        assert fact.theta1 == IntMatrix.identity(2)
        assert fact.theta2 == IntMatrix.identity(2)

    def test_diag_3_2(self):
        assert aw.smith_normal_form(IntMatrix.diagonal([3, 2])).sigma == (1, 6)

    def test_against_determinantal_divisors(self):
        rng = np.random.RandomState(13)
        for dim in (2, 3):
            for _ in range(40):
                m = IntMatrix.from_rows(rng.randint(-9, 10, (dim, dim)).tolist())
                fact = aw.smith_normal_form(m)
                assert fact.sigma == brute_force_smith_diagonal(m)
                assert fact.reconstruct() == m
                for i in range(dim - 1):
                    if fact.sigma[i]:
                        assert fact.sigma[i + 1] % fact.sigma[i] == 0

    @settings(max_examples=150, deadline=None)
    @given(small_matrices(2))
    def test_reconstruction_and_divisibility(self, m):
        fact = aw.smith_normal_form(m)
        assert fact.reconstruct() == m
        assert aw.is_unimodular(fact.theta1) and aw.is_unimodular(fact.theta2)
        assert all(s >= 0 for s in fact.sigma)
        for i in range(m.dim - 1):
            if fact.sigma[i]:
                assert fact.sigma[i + 1] % fact.sigma[i] == 0

    def test_singular_allowed(self):
        fact = aw.smith_normal_form(IntMatrix.from_rows([[2, 4], [1, 2]]))
        assert fact.sigma == (1, 0)
        assert fact.reconstruct() == IntMatrix.from_rows([[2, 4], [1, 2]])


class TestSmithWithTarget:
    def test_already_diagonal(self):
        fact = aw.smith_with_target(IntMatrix.diagonal([3, 2]), (3, 2))
        assert fact.theta1 == IntMatrix.identity(2)
        assert fact.theta2 == IntMatrix.identity(2)

    def test_sheared_dilation_gets_printed_factors(self):
        fact = aw.smith_with_target(XI1, (3, 2))
        assert fact.theta1 == IntMatrix.from_rows([[1, 1], [0, 1]])
        assert fact.theta2 == IntMatrix.from_rows([[1, -1], [0, 1]])
        assert fact.reconstruct() == XI1

    def test_printed_pair_is_valid_factorization(self):
        fact = SmithFactorization(IntMatrix.from_rows([[1, 1], [0, 1]]), (3, 2),
                                  IntMatrix.from_rows([[1, -1], [0, 1]]))
        assert fact.reconstruct() == XI1

    def test_incompatible_diagonal(self):
        with pytest.raises(IncompatibleDiagonalError):
            aw.smith_with_target(IntMatrix.diagonal([3, 2]), (1, 5))

    def test_composition_route(self):
        # target is the normal form itself; eigenvalues do not match it
        fact = aw.smith_with_target(IntMatrix.diagonal([3, 2]), (1, 6))
        assert fact.sigma == (1, 6)
        assert fact.reconstruct() == IntMatrix.diagonal([3, 2])

    def test_random_conjugates(self):
        rng = np.random.RandomState(23)
        for _ in range(20):
            u = random_unimodular(rng, 2)
            m = u @ IntMatrix.diagonal([3, 2]) @ aw.inverse_unimodular(u)
            fact = aw.smith_with_target(m, (3, 2))
            assert fact.reconstruct() == m

    def test_higher_dim_shear(self):
        fam = aw.dilation_family(4, 2, 3)
        fact = aw.smith_with_target(fam.matrices[2], (4, 4, 2))
        assert fact.reconstruct() == fam.matrices[2]
        assert fact.theta1 == aw.inverse_unimodular(fam.shears[2])


class TestCosets:
    def test_diagonal(self):
        reps = aw.coset_representatives(IntMatrix.diagonal([3, 2]))
        assert sorted(reps) == sorted(
            [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (2, 1)])

    def test_sheared(self):
        reps = aw.coset_representatives(XI1)
        assert sorted(reps) == sorted(
            [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (2, 1)])

    def test_identity(self):
        assert aw.coset_representatives(IntMatrix.identity(2)) == [(0, 0)]

    def test_singular_raises(self):
        with pytest.raises(SingularMatrixError):
            aw.coset_representatives(IntMatrix.from_rows([[1, 2], [2, 4]]))

    def test_count_and_distinctness_random(self):
        rng = np.random.RandomState(31)
        seen = 0
        for dim in (2, 3):
            while seen < (25 if dim == 2 else 50):
                u = random_unimodular(rng, dim, ops=3)
                diag = [int(rng.choice([2, 3, 4])) for _ in range(dim)]
                m = u @ IntMatrix.diagonal(diag) @ aw.inverse_unimodular(u)
                d = abs(aw.determinant(m))
                if d > 24:
                    continue
                seen += 1
                reps = aw.coset_representatives(m)
                assert len(reps) == d
                inv = rational_inverse(m)
                for a, b in itertools.combinations(reps, 2):
                    diff = inv.apply(tuple(x - y for x, y in zip(a, b)))
                    assert any(x.denominator != 1 for x in diff)


class TestDilationFamily:
    def test_base_family(self):
        fam = aw.dilation_family(3, 2, 2)
        assert fam.matrices[0] == IntMatrix.diagonal([3, 2])
        assert fam.matrices[1] == XI1

    def test_sign_flip(self):
        fam = aw.dilation_family(3, 2, 2, signs=(1,))
        assert fam.matrices[1] == IntMatrix.from_rows([[3, 1], [0, 2]])

    def test_three_dim(self):
        fam = aw.dilation_family(4, 2, 3)
        assert fam.matrices[2] == IntMatrix.from_rows(
            [[4, 0, 0], [0, 4, -2], [0, 0, 2]])

    def test_conjugation_identity(self):
        for signs in [(0,), (1,)]:
            fam = aw.dilation_family(3, 2, 2, signs)
            for j in (1,):
                gam = fam.shears[j]
                assert fam.matrices[j] == (
                    aw.inverse_unimodular(gam) @ fam.matrices[0] @ gam)

    def test_bad_scales(self):
        with pytest.raises(BadScalesError):
            aw.dilation_family(2, 3, 2)
        with pytest.raises(BadScalesError):
            aw.dilation_family(3, 1, 2)


class TestXiProducts:
    def test_single(self, family):
        assert aw.xi_product(family, (1,)) == XI1

    def test_empty(self, family):
        assert aw.xi_product(family, ()) == IntMatrix.identity(2)

    def test_pair(self, family):
        assert aw.xi_product(family, (1, 1)) == IntMatrix.from_rows(
            [[9, -5], [0, 4]])

    def test_closed_form_examples(self, family):
        inv = aw.xi_inverse_closed_form(family, (1,))
        assert inv.entries == ((Fraction(1, 3), Fraction(1, 6)),
                               (Fraction(0), Fraction(1, 2)))
        inv2 = aw.xi_inverse_closed_form(family, (1, 1))
        assert inv2.entries == ((Fraction(1, 9), Fraction(5, 36)),
                                (Fraction(0), Fraction(1, 4)))
        assert digit_polynomial(family, (1, 1)) == (Fraction(5, 9),)
        inv3 = aw.xi_inverse_closed_form(family, (0, 0, 0))
        assert inv3.entries == ((Fraction(1, 27), Fraction(0)),
                                (Fraction(0), Fraction(1, 8)))

    def test_closed_form_inverts_product(self, family):
        ident = RatMatrix.identity(2)
        for n in range(0, 7):
            for eps in itertools.product(range(2), repeat=n):
                prod = aw.xi_product(family, eps)
                inv = aw.xi_inverse_closed_form(family, eps)
                assert (inv @ prod).entries == ident.entries

    def test_closed_form_signed_family(self):
        fam = aw.dilation_family(3, 2, 2, signs=(1,))
        ident = RatMatrix.identity(2)
        for eps in itertools.product(range(2), repeat=4):
            inv = aw.xi_inverse_closed_form(fam, eps)
            assert (inv @ aw.xi_product(fam, eps)).entries == ident.entries


class TestContractivity:
    def test_bound_at_one(self):
        assert abs(aw.contractivity_bound(3, 2, 1) - 5.0 / 6.0) < 1e-15
        assert contractivity_bound_power(3, 2, 1) == Fraction(5, 6)

    def test_bound_limit(self):
        assert abs(aw.contractivity_bound(3, 2, 200) - 0.5) < 1e-15

    def test_column_norm_example(self, family):
        inv = aw.xi_inverse_closed_form(family, (1,))
        assert inv.norm_one() == Fraction(2, 3)
        assert inv.norm_one() <= contractivity_bound_power(3, 2, 1)

    @pytest.mark.parametrize("s,n_max", [(2, 8), (3, 6)])
    def test_norm_bound_all_words(self, s, n_max):
        fam = aw.dilation_family(3, 2, s)
        for n in range(1, n_max + 1):
            bound = contractivity_bound_power(3, 2, n)
            for eps in itertools.product(range(s), repeat=n):
                norm = aw.xi_inverse_closed_form(fam, eps).norm_inf()
                assert norm < 1
                assert norm <= bound

import numpy as np
import pytest

import anisowave as aw
from anisowave.errors import GridMismatchError, GridTooLargeError
from anisowave.lattice import IntMatrix
from anisowave.seqcore import CoefSeq, max_abs_diff
from anisowave.subdivision import SubdivisionOp, _matrix_power


def seq1(values, origin=0):
    return CoefSeq((origin,), np.array(values, dtype=float))


@pytest.fixture(scope="module")
def op0(bank0):
    return SubdivisionOp(bank0.xi, bank0.lowpass)


@pytest.fixture(scope="module")
def op1(bank1):
    return SubdivisionOp(bank1.xi, bank1.lowpass)


class TestSubdivide:
    def test_pulse_gives_mask(self, op0, bank0):
        assert max_abs_diff(aw.subdivide(op0, aw.delta(2)), bank0.lowpass) == 0.0

    def test_haar_1d(self):
        op = SubdivisionOp(IntMatrix.from_rows([[2]]), seq1([1.0, 1.0]))
        out = aw.subdivide(op, aw.delta(1))
        assert out.data.tolist() == [1.0, 1.0]

    def test_support_box_arithmetic(self, op0, bank0):
        two = aw.subdivide(op0, aw.subdivide(op0, aw.delta(2))).trimmed()
        mask = bank0.lowpass.window
        lo = tuple(m + 3 * m2 if i == 0 else m + 2 * m2
                   for i, (m, m2) in enumerate(zip(mask.lo, mask.lo)))
        hi = tuple(m + 3 * m2 if i == 0 else m + 2 * m2
                   for i, (m, m2) in enumerate(zip(mask.hi, mask.hi)))
        assert two.window.lo == lo and two.window.hi == hi

    def test_operator_composition(self, op0, bank0):
        # r steps with xi equal one step with xi^r and the iterated mask
        rng = np.random.RandomState(9)
        c = CoefSeq((0, 0), rng.randn(5, 4))
        for r in (2, 3, 4):
            iterated = c
            for _ in range(r):
                iterated = aw.subdivide(op0, iterated)
            mask_r = aw.cascade(op0, r).as_seq()
            one_shot = aw.subdivide(
                SubdivisionOp(_matrix_power(op0.xi, r), mask_r), c)
            assert max_abs_diff(iterated, one_shot) <= 1e-11 * c.linf()

    def test_mass_preservation(self, op0, op1):
        for op, det in ((op0, 6), (op1, 6)):
            c = aw.delta(2)
            for r in range(1, 6):
                c = aw.subdivide(op, c)
                assert c.sum() == pytest.approx(float(det) ** r, rel=1e-13)


class TestCascade:
    def test_level_zero(self, op0):
        sf = aw.cascade(op0, 0)
        assert sf.values.shape == (1, 1) and sf.values[0, 0] == 1.0
        assert sf.xi_total == IntMatrix.identity(2)

    def test_haar_indicator(self):
        op = SubdivisionOp(IntMatrix.from_rows([[2]]), seq1([1.0, 1.0]))
        sf = aw.cascade(op, 5)
        assert sf.window.shape == (32,)
        assert np.all(sf.values == 1.0)

    def test_grid_bookkeeping(self, op0):
        sf = aw.cascade(op0, 3)
        assert sf.xi_total == IntMatrix.diagonal([27, 8])
        assert sf.level == 3

    def test_cell_cap(self, op0):
        with pytest.raises(GridTooLargeError):
            aw.cascade(op0, 8, cell_cap=1000)


class TestWaveletSamples:
    def test_zero_index_is_scaling_function(self, bank0, op0):
        sf = aw.wavelet_samples(bank0, (0, 0), 4)
        ref = aw.cascade(op0, 4)
        assert max_abs_diff(sf.as_seq(), ref.as_seq()) == 0.0
        assert sf.xi_total == ref.xi_total

    def test_haar_checkerboard(self, haar_bank):
        sf = aw.wavelet_samples(haar_bank, (1, 1), 4)
        vals = sf.as_seq().trimmed()
        n = 2 ** 4
        assert vals.window.shape == (n, n)
        half = n // 2
        assert np.all(vals.data[:half, :half] == 1.0)
        assert np.all(vals.data[half:, :half] == -1.0)
        assert np.all(vals.data[:half, half:] == -1.0)
        assert np.all(vals.data[half:, half:] == 1.0)

    def test_renders_all_indices(self, bank1):
        for eta in bank1.indices():
            sf = aw.wavelet_samples(bank1, eta, 3)
            assert np.isfinite(sf.values).all()
            assert sf.as_seq().linf() > 0


class TestConvergenceDiagnostic:
    def test_haar_exact(self):
        op = SubdivisionOp(IntMatrix.from_rows([[2]]), seq1([1.0, 1.0]))
        assert aw.convergence_diagnostic(op, 5) == [0.0] * 4

    def test_worked_mask_decreasing(self, op0):
        d = aw.convergence_diagnostic(op0, 6)
        assert all(d[i] > d[i + 1] for i in range(1, 4))

    def test_unnormalized_mask_diverges(self):
        op = SubdivisionOp(IntMatrix.from_rows([[2]]), seq1([1.0, 2.0, 1.0]))
        d = aw.convergence_diagnostic(op, 5)
        assert all(d[i] < d[i + 1] for i in range(len(d) - 1))


class TestConjugation:
    def test_diagonal_bank_exact_zero(self, bank0):
        for r in (1, 2, 3):
            assert aw.conjugation_check(bank0, r) == 0.0

    def test_sheared_bank(self, bank1):
        assert aw.conjugation_check(bank1, 1) == 0.0
        for r in (2, 3):
            assert aw.conjugation_check(bank1, r) <= 1e-12


class TestMultipleLimit:
    def test_empty_word_is_cascade(self, bank0, bank1, op0):
        banks = (bank0, bank1)
        sf = aw.multiple_limit(banks, (), 4)
        ref = aw.cascade(op0, 4)
        assert max_abs_diff(sf.as_seq(), ref.as_seq()) == 0.0

    def test_total_dilation_bookkeeping(self, bank0, bank1, family):
        banks = (bank0, bank1)
        sf = aw.multiple_limit(banks, (1, 1), 4)
        expect = _matrix_power(bank0.xi, 4) @ aw.xi_product(family, (1, 1))
        assert sf.xi_total == expect

    def test_joint_refinement(self, bank0, bank1):
        banks = (bank0, bank1)
        for mu in [(), (0,), (1,), (0, 1), (1, 1), (1, 0), (0, 0)]:
            for j in (0, 1):
                assert aw.joint_refinement_residual(banks, j, mu, 3) <= 1e-10


class TestGram:
    def test_haar_indicator(self, haar_bank):
        op = SubdivisionOp(haar_bank.xi, haar_bank.lowpass)
        f = aw.cascade(op, 4)
        assert aw.gram_check(f, f, (0, 0)) == pytest.approx(1.0, abs=1e-12)
        assert aw.gram_check(f, f, (1, 0)) == pytest.approx(0.0, abs=1e-12)

    def test_grid_mismatch(self, op0, haar_bank):
        f = aw.cascade(op0, 2)
        g = aw.cascade(SubdivisionOp(haar_bank.xi, haar_bank.lowpass), 2)
        with pytest.raises(GridMismatchError):
            aw.gram_check(f, g, (0, 0))

    def test_scaling_wavelet_orthogonality(self, bank0):
        phi = aw.wavelet_samples(bank0, (0, 0), 5)
        psi = aw.wavelet_samples(bank0, (1, 0), 5)
        assert abs(aw.gram_check(phi, psi, (0, 0))) < 1e-10

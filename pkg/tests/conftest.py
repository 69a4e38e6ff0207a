import pytest

import anisowave as aw


@pytest.fixture(scope="session")
def sets():
    return (aw.chui_lian_ternary(), aw.daubechies2())


@pytest.fixture(scope="session")
def bank0(sets):
    return aw.build_bank(aw.IntMatrix.diagonal([3, 2]), (3, 2), sets)


@pytest.fixture(scope="session")
def bank1(sets):
    return aw.build_bank(aw.IntMatrix.from_rows([[3, -1], [0, 2]]), (3, 2), sets)


@pytest.fixture(scope="session")
def haar_bank():
    return aw.build_bank(aw.IntMatrix.diagonal([2, 2]), (2, 2),
                         (aw.haar(), aw.haar()))


@pytest.fixture(scope="session")
def family():
    return aw.dilation_family(3, 2, 2)


def random_seq(rng, shape, origin=None):
    origin = origin if origin is not None else (0,) * len(shape)
    return aw.CoefSeq(origin, rng.randn(*shape))

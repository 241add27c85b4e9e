import numpy as np
import pytest

from fluxdec.models import (
    CrnModel,
    IpfgModel,
    LatticeGasModel,
    PowerEta,
    ZeroRangeModel,
)

Q2 = np.array([[-1.0, 1.0], [2.0, -2.0]])
Q3 = np.array([[-3.0, 2.0, 1.0], [1.0, -3.0, 2.0], [2.0, 1.0, -3.0]])


@pytest.fixture
def ipfg2():
    return IpfgModel(Q2)


@pytest.fixture
def ipfg3():
    return IpfgModel(Q3)


@pytest.fixture
def zr3():
    return ZeroRangeModel(Q3, np.full(3, 1.0 / 3.0), PowerEta(0.5))


@pytest.fixture
def crn3():
    # unary cycle mirroring the three-state jump model at uniform pi
    alpha_fw = np.array([[1, 0, 0], [1, 0, 0], [0, 1, 0]])
    alpha_bw = np.array([[0, 1, 0], [0, 0, 1], [0, 0, 1]])
    c_fw = np.array([2.0, 1.0, 2.0])
    c_bw = np.array([1.0, 2.0, 1.0])
    return CrnModel(("A", "B", "C"), alpha_fw, alpha_bw, c_fw, c_bw, np.full(3, 1.0 / 3.0))


@pytest.fixture
def crn_pair():
    # binary cycle 2A <-> A+B <-> 2B <-> 2A, complex balanced but not
    # detailed balanced at pi = (1, 1)
    alpha_fw = np.array([[2, 0], [1, 1], [0, 2]])
    alpha_bw = np.array([[1, 1], [0, 2], [2, 0]])
    c_fw = np.array([2.0, 2.0, 2.0])
    c_bw = np.array([1.0, 1.0, 1.0])
    return CrnModel(("A", "B"), alpha_fw, alpha_bw, c_fw, c_bw, np.array([1.0, 1.0]))


@pytest.fixture
def crn_db():
    # detailed balanced A <-> B with c1 pi_A = c2 pi_B
    alpha_fw = np.array([[1, 0]])
    alpha_bw = np.array([[0, 1]])
    return CrnModel(("A", "B"), alpha_fw, alpha_bw, [1.0], [2.0], np.array([2.0, 1.0]))


@pytest.fixture
def lattice():
    m = 32
    x = (np.arange(m) + 0.5) / m
    return LatticeGasModel(m, mobility="exclusion", U=0.5 * np.cos(2 * np.pi * x), A=0.0)


def driven_lattice(m, drift=0.7):
    return LatticeGasModel(m, mobility="independent", U=None, A=drift)


@pytest.fixture
def all_models(ipfg2, ipfg3, zr3, crn3, lattice):
    return [ipfg2, ipfg3, zr3, crn3, lattice]

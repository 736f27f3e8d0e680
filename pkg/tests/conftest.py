import functools

import pytest

from rotorwp.dynamics import RigidRotor
from rotorwp.wavepacket import Symmetry, WavePacketSpec, build, build_linear, symmetrize


@functools.lru_cache(maxsize=None)
def circular(n=14.0, symmetric=False, eta=1.0):
    sym = Symmetry.SYMMETRIC if symmetric else Symmetry.ASYMMETRIC
    return build(WavePacketSpec(n, eta, sym))


@functools.lru_cache(maxsize=None)
def linear(n=110.0, symmetric=False):
    wp = build_linear(n)
    if symmetric:
        wp = symmetrize(wp, WavePacketSpec(n, 0.0, Symmetry.SYMMETRIC))
    return wp


@pytest.fixture
def rotor():
    return RigidRotor()

import random

import pytest

from starforge.algebra import Poly
from starforge.polyvector import PolyVector


def var(n, i):
    return Poly.var(n, i)


def bivector(n, entries):
    """entries: {(i, j): Poly or number} with i < j."""
    return PolyVector.bivector(n, {k: v if isinstance(v, Poly) else Poly.constant(n, v) for k, v in entries.items()})


def so3():
    t = [var(3, i) for i in range(3)]
    return bivector(3, {(0, 1): t[2], (1, 2): t[0], (0, 2): -t[1]})


@pytest.fixture
def rng():
    return random.Random(20240611)

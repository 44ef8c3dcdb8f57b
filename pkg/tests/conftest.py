import numpy as np
import pytest

from cpmspectra import CpmFormat, ModulationIndexSet, PhaseResponse, normalize_indices
from cpmspectra.chain import build_polyphase


def make_format(M, kind, L, hs, q=None):
    if isinstance(hs, ModulationIndexSet):
        idx = hs
    else:
        idx = normalize_indices(hs)
    return CpmFormat(M, PhaseResponse(kind, L), idx, q)


# formats used across modules
MSK = make_format(2, "cpfsk", 1, ["1/2"])
MULTIH = make_format(4, "cpfsk", 1, ["4/16", "5/16", "8/16", "10/16"])
RC_L2 = make_format(4, "rc", 2, ["4/16", "5/16"])
GMSK_L4 = make_format(2, "gmsk", 4, ["1/2"])
CPFSK_H1 = make_format(2, "cpfsk", 1, ["1"])

# index sequences with the parity patterns (even, odd, odd), (even, odd, even), (even, odd)
H2 = ModulationIndexSet((2, 1, 3), 4)
H3 = ModulationIndexSet((2, 3, 2), 4)
H4 = ModulationIndexSet((2, 3), 4)

PRESET_FORMATS = {"msk": MSK, "multih-4-16": MULTIH, "rc-l2": RC_L2, "gmsk-l4": GMSK_L4}


@pytest.fixture(scope="session")
def machines():
    cache = {}

    def get(fmt, offset=0):
        key = (id(fmt), offset)
        if key not in cache:
            cache[key] = build_polyphase(fmt, offset)
        return cache[key]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from suite_utils import data_path
from irlnqs.hamiltonian import parse_fcidump


@pytest.fixture(scope="session")
def h2_integrals():
    with open(data_path("h2_sto3g.fcidump")) as fh:
        return parse_fcidump(fh.read())


@pytest.fixture(scope="session")
def h2_sector(h2_integrals):
    return h2_integrals.sector()

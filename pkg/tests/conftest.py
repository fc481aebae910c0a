from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from metacp import samples
from metacp.xml_io import parse

GOLDEN_DIR = Path(__file__).resolve().parent / "golden"

# 512-bit prime used by the reference run of the generated network program
P512 = int(
    "969244280282132795050891177130832805266688755090043568289520734"
    "756840649584384922467241613096788455425921167529929145416119798"
    "1395799145169370398324975923"
)


@pytest.fixture(scope="session")
def dhke():
    return parse(samples.load("dhke"))


@pytest.fixture(scope="session")
def ns():
    return parse(samples.load("needham-schroeder"))


@pytest.fixture(scope="session")
def nsl():
    return parse(samples.load("needham-schroeder-lowe"))


@pytest.fixture(scope="session")
def all_samples():
    return {name: parse(samples.load(name)) for name in samples.names()}

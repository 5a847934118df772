from importlib import resources

import pytest

from dualpolar.formats import parse_ovoid, parse_group
from dualpolar.geometry import build_dual_polar
from dualpolar.ovoid import certify
from dualpolar.polar import form_make


def data_file(name):
    return resources.files("dualpolar") / "data" / name


@pytest.fixture(scope="session")
def gq22():
    return build_dual_polar(form_make("W", 2, 2))


@pytest.fixture(scope="session")
def dq63():
    return build_dual_polar(form_make("Q", 3, 3))


@pytest.fixture(scope="session")
def dw53():
    return build_dual_polar(form_make("W", 3, 3))


@pytest.fixture(scope="session")
def dh54():
    return build_dual_polar(form_make("H", 3, 2))


@pytest.fixture(scope="session")
def hemi(dq63):
    _, m, members = parse_ovoid(data_file("dq63_hemisystem.ovd").read_bytes(), dq63)
    cert = certify(dq63, members)
    assert cert.m == m == 2
    return cert


@pytest.fixture(scope="session")
def stab120():
    return parse_group(data_file("dq63_stab120.grp").read_bytes())

"""Shared fixtures. Tests run from the repository root so configuration/ paths resolve."""

from pathlib import Path

import pytest

from netdiff.network import L1, LINF, HexPavement, Hierarchy, SquareLattice

ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(autouse=True)
def repo_root(monkeypatch):
    monkeypatch.chdir(ROOT)
    monkeypatch.setenv("DIFF_LOG", "WARNING")
    monkeypatch.delenv("LOGFIRE_TOKEN", raising=False)
    return ROOT


@pytest.fixture
def z2():
    return SquareLattice(2, L1)


@pytest.fixture
def z2inf():
    return SquareLattice(2, LINF)


@pytest.fixture
def hexnet():
    return HexPavement()


@pytest.fixture
def tree():
    return Hierarchy(2)

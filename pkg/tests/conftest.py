import math

import pytest

from capvar.gallery import build_fixture

BETA = math.pi / 3


@pytest.fixture(scope="session")
def fixture_cache():
    """Lazily built, session-shared gallery fixtures keyed by (name, kwargs)."""
    cache = {}

    def get(name, **kwargs):
        key = (name, tuple(sorted(kwargs.items())))
        if key not in cache:
            cache[key] = build_fixture(name, kwargs.pop("beta0", BETA), **kwargs)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def plane_pair(fixture_cache):
    return fixture_cache("plane-pair")


@pytest.fixture(scope="session")
def cap(fixture_cache):
    return fixture_cache("cap")


@pytest.fixture(scope="session")
def cap_focused(fixture_cache):
    return fixture_cache("cap-focused")


@pytest.fixture(scope="session")
def half_plane(fixture_cache):
    return fixture_cache("half-plane")


@pytest.fixture(scope="session")
def cone(fixture_cache):
    return fixture_cache("half-plane-cone")

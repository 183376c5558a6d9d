from __future__ import annotations

import pytest
from helpers import seed_paths
from hypothesis import HealthCheck, settings

from wasmdiff.corpus import build_corpus
from wasmdiff.generator import RootPool

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def seed_bytes() -> list[bytes]:
    return [p.read_bytes() for p in seed_paths()]


@pytest.fixture(scope="session")
def corpus(seed_bytes):
    return build_corpus(seed_bytes)


@pytest.fixture(scope="session")
def pool(corpus):
    return RootPool(corpus)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, title, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {status:<14} {title} [{detail}]")

import json

import pytest

from ltbridge.common.logging_setup import configure_logging
from ltbridge.diffusion import bessel3, build_scale, killed_bm, ou, sq_bessel


@pytest.fixture(scope="session", autouse=True)
def quiet_logs():
    configure_logging("WARNING")


@pytest.fixture(scope="session")
def kbm():
    return build_scale(killed_bm(1.0))


@pytest.fixture(scope="session")
def ou_scale():
    return build_scale(ou(1.0, 0.0))


@pytest.fixture(scope="session")
def sqb():
    return build_scale(sq_bessel(4.0))


@pytest.fixture(scope="session")
def bes3():
    return build_scale(bessel3())


@pytest.fixture
def spec_path(tmp_path):
    """Write a spec document and return its path."""

    def write(doc: dict | str, name: str = "spec.json"):
        path = tmp_path / name
        path.write_text(doc if isinstance(doc, str) else json.dumps(doc), encoding="utf-8")
        return path

    return write

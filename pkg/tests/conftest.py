"""Shared helpers for the MUQKD test suite."""

import pytest

from muqkd_cli.protocol import ProtocolConfig


@pytest.fixture
def make_protocol():
    """Factory for small protocol configs with overridable fields."""

    def make(**overrides) -> ProtocolConfig:
        values = dict(d=2, n_rounds=2_000, p_bm=0.8, p_cm=0.7, p_d=0.2)
        values.update(overrides)
        return ProtocolConfig(**values)

    return make


MINIMAL_CONFIG = """\
# honest qubit run
d = 2
n_rounds = 500
p_bm = 0.8
p_cm = 0.7
p_d = 0.2
"""


@pytest.fixture
def minimal_config_text() -> str:
    return MINIMAL_CONFIG


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "ideal.cfg"
    path.write_text(MINIMAL_CONFIG, encoding="utf-8")
    return path

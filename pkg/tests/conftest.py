from __future__ import annotations

from pathlib import Path

import pytest

from simdna.compiler import compile_tm
from simdna.tm import parse_tm_spec

ROOT = Path(__file__).resolve().parent.parent
INCREMENT_YAML = ROOT / "machines" / "increment.yaml"


@pytest.fixture(scope="session")
def increment_spec():
    return parse_tm_spec(INCREMENT_YAML.read_bytes())


@pytest.fixture(scope="session")
def increment_compiled_s3(increment_spec):
    return compile_tm(increment_spec, 3)


@pytest.fixture(scope="session")
def increment_compiled_s4(increment_spec):
    return compile_tm(increment_spec, 4)


@pytest.fixture()
def increment_path():
    return INCREMENT_YAML

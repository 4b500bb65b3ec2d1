from __future__ import annotations

import os
from pathlib import Path
from typing import Iterator

import pytest
from pytest_factoryboy import register

os.environ.setdefault("DJANGO_ENV", "test")

from tests import factories as test_factories

register(test_factories.ProtocolRunFactory)
register(test_factories.AttackSweepFactory)
register(test_factories.AttackSweepRowFactory)
register(test_factories.DistinguisherReportFactory)


@pytest.fixture(autouse=True)
def _configure_test_environment(settings, tmp_path: Path) -> Iterator[None]:
    reports_dir = tmp_path / "reports"
    reports_dir.mkdir(parents=True, exist_ok=True)

    settings.QUANTUM_SIMULATION = {**settings.QUANTUM_SIMULATION, "reports_dir": reports_dir}
    settings.LOGGING["handlers"]["app_file"]["filename"] = str(tmp_path / "app.log")

    yield


@pytest.fixture
def write_json(tmp_path: Path):
    """Write a JSON document under ``tmp_path`` and return its path."""

    import json

    def factory(name: str, payload) -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")
        return path

    return factory

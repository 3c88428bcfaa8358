from pathlib import Path

import pytest

from caprelab import ir
from caprelab.benchgen import bank, bank_model

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "caprelab" / "fixtures"


@pytest.fixture(scope="session")
def bank_path() -> Path:
    return FIXTURES / "bank.app.json"


@pytest.fixture(scope="session")
def bank_app(bank_path):
    return ir.parse_application(bank_path)


@pytest.fixture
def bank_bench():
    return bank(transactions=10, seed=3)


def write_json(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


__all__ = ["bank_model", "write_json"]

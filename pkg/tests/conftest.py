import json
from pathlib import Path

import pytest

from bannerforge.catalog import ingest_catalog
from bannerforge.extraction import load_template

FIXTURES = Path(__file__).parent / "fixtures"
PACKAGE_DATA = Path(__file__).parent.parent / "src" / "bannerforge" / "data"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def package_data_dir() -> Path:
    return PACKAGE_DATA


@pytest.fixture(scope="session")
def sample_catalog_path() -> Path:
    return FIXTURES / "sample_catalog.csv"


@pytest.fixture(scope="session")
def catalog(sample_catalog_path):
    return ingest_catalog(sample_catalog_path)


@pytest.fixture(scope="session")
def bundled_template():
    return load_template(PACKAGE_DATA / "llm_prompt_template.txt")


@pytest.fixture(scope="session")
def reference_features() -> dict:
    return json.loads((FIXTURES / "brisque" / "features.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def toy_model_path() -> Path:
    return PACKAGE_DATA / "toy_svr_model.txt"


@pytest.fixture(scope="session")
def toy_range_path() -> Path:
    return PACKAGE_DATA / "toy_svr_range.txt"

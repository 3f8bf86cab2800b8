import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from api.schemas import VarietySpecFile
from config.settings import Settings
from main import app
from services.immersion import ImmersionSpec

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(name="client")
def client_fixture():
    """Create a test client for the HTTP surface."""
    with TestClient(app) as client:
        yield client


@pytest.fixture(name="fixtures_dir")
def fixtures_dir_fixture() -> Path:
    return FIXTURES


@pytest.fixture(name="load_fixture")
def load_fixture_fixture():
    """Read a JSON fixture as a plain dict."""

    def load(name: str) -> dict:
        return json.loads((FIXTURES / name).read_text())

    return load


@pytest.fixture(name="document")
def document_fixture(load_fixture):
    """Parse a JSON fixture into an input document."""

    def build(name: str) -> VarietySpecFile:
        return VarietySpecFile.model_validate(load_fixture(name))

    return build


@pytest.fixture(name="settings")
def settings_fixture() -> Settings:
    """Settings with few integration steps so numeric sections stay fast."""
    return Settings(tolerance=1e-9, steps=40, seed=0)


@pytest.fixture(name="sphere")
def sphere_fixture() -> ImmersionSpec:
    """Unit sphere in latitude u and longitude v."""
    return ImmersionSpec.build(
        ["u", "v"],
        ["cos(u)*cos(v)", "cos(u)*sin(v)", "sin(u)"],
        [(-1.2, 1.2), (-3.5, 3.5)],
    )


@pytest.fixture(name="helix")
def helix_fixture() -> ImmersionSpec:
    """Circular helix (cos t, sin t, t); curvature and torsion are both 1/2."""
    return ImmersionSpec.build(
        ["t"],
        ["cos(t)", "sin(t)", "t"],
        [(-1.0, 8.0)],
    )

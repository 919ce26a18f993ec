import json
import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).parent
DATA = TESTS / "data"
MINI_ATLAS = DATA / "mini_atlas.json"

# Let test modules import the oracle and generator helpers.
sys.path.insert(0, str(TESTS))


def minimal_atlas_dict():
    return {
        "sites": [
            {"id": "P", "name": "Portnoo", "region_path": ["Portnoo", "North"]},
            {"id": "Q", "name": "Quilty", "region_path": ["Quilty", "South"]},
        ],
        "concepts": [{"id": "k1", "gloss": "cattle"}],
        "citations": [
            {"site": "P", "concept": "k1", "form": "AL:i", "word": "eallach", "etymon": "eall-"},
            {"site": "Q", "concept": "k1", "form": "khruh", "word": "crodh", "etymon": "crodh-"},
        ],
        "isogloss_features": [{"id": "f1", "assignments": {"P": "x", "Q": "y"}}],
    }


@pytest.fixture
def mini_path():
    return MINI_ATLAS


@pytest.fixture(scope="session")
def mini_atlas():
    from dialectometry.atlas import load_atlas

    return load_atlas(MINI_ATLAS)


@pytest.fixture(scope="session")
def mini_raw():
    return json.loads(MINI_ATLAS.read_text(encoding="utf-8"))


@pytest.fixture
def minimal_dict():
    return minimal_atlas_dict()

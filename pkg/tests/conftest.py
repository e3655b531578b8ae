import json
from pathlib import Path

import pytest

from stepqa.segmenter import SegmentationMode, parse_script, segment_script
from stepqa.toy import (
    load_toy_samples,
    toy_embedding_table,
    toy_model_config,
    toy_script_dict,
)

FIXTURE_DIR = Path(__file__).parent / "fixtures" / "toy"


@pytest.fixture(scope="session")
def toy_table():
    return toy_embedding_table()


@pytest.fixture(scope="session")
def toy_samples():
    return load_toy_samples()


@pytest.fixture(scope="session")
def toy_functions():
    script = parse_script(json.dumps(toy_script_dict()))
    return segment_script(script, SegmentationMode.FUNCTION_CENTRIC)


@pytest.fixture(scope="session")
def toy_functions_by_video(toy_functions):
    return {toy_functions.video_id: toy_functions}


@pytest.fixture()
def toy_config():
    return toy_model_config()

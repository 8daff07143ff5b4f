import json
import os
import pathlib

import pytest

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def cli():
    path = os.environ.get("MODETEST_CLI")
    if not path or not pathlib.Path(path).exists():
        pytest.skip("MODETEST_CLI not set; run through ctest")
    return path


@pytest.fixture(scope="session")
def validator():
    jsonschema = pytest.importorskip("jsonschema")
    path = os.environ.get("MODETEST_SCHEMA") or str(
        pathlib.Path(__file__).parents[2] / "schema" / "run_report.schema.json")
    schema = json.loads(pathlib.Path(path).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    return jsonschema.Draft202012Validator(schema)

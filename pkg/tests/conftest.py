import pytest

from bort.db import generate_db
from bort.schema import default_schema


@pytest.fixture(scope="session")
def schema():
    return default_schema()


@pytest.fixture(scope="session")
def db(schema):
    return generate_db(schema, seed=17)

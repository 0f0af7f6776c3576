"""Shared fixtures: the corpus models and small hand-built task sets."""

import os
import tempfile

import pytest

from mutsched.config import reset_config
from mutsched.model import RunnableSpec, TaskSpec, make_model, parse_model

CORPUS_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'corpus')
# fixture name -> file stem under corpus/
CORPUS_FILES = {
    'producer_consumer': 'table3',
    'three_tasks': 'table4',
    'runnable_order': 'table5',
    'priority_order': 'table6',
    'three_servo': 'three_servo',
    'throttle': 'throttle',
}
CORPUS_NAMES = tuple(CORPUS_FILES)


def corpus_path(name):
    return os.path.join(CORPUS_DIR, f'{CORPUS_FILES[name]}.json')


def load_corpus(name):
    with open(corpus_path(name), encoding='utf-8') as f:
        return parse_model(f.read())


@pytest.fixture
def temp_dir():
    """Create a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield tmpdir


@pytest.fixture(autouse=True)
def fresh_config():
    """Every test starts from default campaign settings."""
    yield reset_config()
    reset_config()


@pytest.fixture
def producer_consumer():
    return load_corpus('producer_consumer')


@pytest.fixture
def three_tasks():
    return load_corpus('three_tasks')


@pytest.fixture
def runnable_order():
    return load_corpus('runnable_order')


@pytest.fixture
def priority_order():
    return load_corpus('priority_order')


@pytest.fixture
def three_servo():
    return load_corpus('three_servo')


@pytest.fixture
def throttle():
    return load_corpus('throttle')


@pytest.fixture(params=CORPUS_NAMES)
def corpus_model(request):
    return load_corpus(request.param)


@pytest.fixture
def overloaded():
    """One task whose single runnable needs more than its period."""
    return make_model(
        [TaskSpec('T1', period=4, runnables=('R1',), priority=1)],
        [RunnableSpec('R1', wcet=5)],
    )

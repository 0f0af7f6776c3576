"""Tests for configuration module."""

import json

import pytest

from mutsched.analysis import Oracle
from mutsched.config import Config, get_config, parse_campaign, reset_config
from mutsched.exceptions import ConfigurationError
from mutsched.model import Semantics
from mutsched.mutation import ALL_OPERATORS, MutationOperator, OperatorClass


def _campaign(**fields):
    doc = {'schema': 'mutsched-campaign/1'}
    doc.update(fields)
    return json.dumps(doc)


def test_config_initialization():
    """Test Config initializes with defaults."""
    config = Config()
    assert config.timing_deltas == (1, 2, 3)
    assert config.priority_deltas == (1, 2, 3)
    assert config.operators == ALL_OPERATORS
    assert config.oracles == frozenset(Oracle)
    assert config.baseline == 'same'
    assert config.workers == 1
    config.validate()


def test_config_configure():
    """Test configuration overrides only the given values."""
    config = Config()
    config.configure(operators='period', oracles='deadline', horizon=None, workers=3)
    assert config.operators == (MutationOperator.ITPER, MutationOperator.DTPER)
    assert config.oracles == {Oracle.DEADLINE}
    assert config.horizon is None
    assert config.workers == 3


def test_config_rejects_unknown_setting():
    with pytest.raises(ConfigurationError, match="unknown setting"):
        Config().configure(game_id='x')


@pytest.mark.parametrize('settings, message', [
    ({'timing_deltas': []}, 'timing_deltas'),
    ({'priority_deltas': [0]}, 'priority_deltas'),
    ({'baseline': 'original'}, 'baseline'),
    ({'semantics': 'fast'}, 'semantics'),
    ({'horizon': -1}, 'horizon'),
    ({'workers': 0}, 'workers'),
    ({'oracles': []}, 'oracle'),
    ({'mrsm_position': 'middle'}, 'mrsm_position'),
])
def test_config_validate_errors(settings, message):
    config = Config()
    config.configure(**settings)
    with pytest.raises(ConfigurationError, match=message):
        config.validate()


def test_delta_config_from_settings():
    config = Config()
    config.configure(timing_deltas=[2], priority_deltas=[4, 5], mrsm_position='last')
    cfg = config.delta_config()
    assert cfg.for_class(OperatorClass.OFFSET) == (2,)
    assert cfg.for_class(OperatorClass.PRIORITY) == (4, 5)
    assert cfg.mrsm_position == 'last'


def test_semantics_list():
    config = Config()
    assert config.semantics_list(Semantics.ZERO_TIME) == (Semantics.ZERO_TIME,)
    config.configure(semantics='both')
    assert config.semantics_list(Semantics.ZERO_TIME) == (Semantics.ZERO_TIME, Semantics.TIME_AWARE)


def test_parse_campaign():
    settings = parse_campaign(_campaign(
        deltas={'timing': [1, 4], 'priority': [2]},
        operators=['mITO', 'precedence'],
        oracles=['deadline', 'access'],
        baseline='zero-time',
        horizon=40,
        workers=2,
    ))
    assert settings['timing_deltas'] == (1, 4)
    assert settings['priority_deltas'] == (2,)
    assert settings['operators'][0] is MutationOperator.ITO
    assert len(settings['operators']) == 5
    assert settings['oracles'] == {Oracle.DEADLINE, Oracle.ACCESS}
    assert settings['baseline'] == 'zero-time'
    config = Config()
    config.configure(**settings)
    config.validate()
    assert config.horizon == 40


def test_parse_campaign_errors():
    with pytest.raises(ConfigurationError, match="line 1"):
        parse_campaign('{')
    with pytest.raises(ConfigurationError, match="schema"):
        parse_campaign(json.dumps({'deltas': {}}))
    with pytest.raises(ConfigurationError, match="unknown campaign keys"):
        parse_campaign(_campaign(speed=3))
    with pytest.raises(ConfigurationError, match="deltas.timing"):
        parse_campaign(_campaign(deltas={'timing': 'fast'}))
    with pytest.raises(ConfigurationError, match="oracles"):
        parse_campaign(_campaign(oracles=['timing']))
    with pytest.raises(ConfigurationError, match="workers"):
        parse_campaign(_campaign(workers='many'))


def test_get_config_singleton():
    """Test get_config returns same instance."""
    config1 = get_config()
    config2 = get_config()
    assert config1 is config2


def test_reset_config():
    get_config().configure(workers=4)
    fresh = reset_config()
    assert fresh is get_config()
    assert fresh.workers == 1

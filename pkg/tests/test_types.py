"""Tests for actions, states and the feature encoding."""

import math
from dataclasses import replace

import numpy as np
import pytest

from aoscontrol.config import SystemConfig
from aoscontrol.core.errors import InvalidActionError
from aoscontrol.core.radio import feasibility_gain
from aoscontrol.core.types import (
    NO_ASSOCIATION,
    Action,
    EnvState,
    StateEncoder,
    encode_state,
    feature_dim,
    slots_to_seconds,
)


def make_state(cfg: SystemConfig, aos: int = 10, association: int = NO_ASSOCIATION) -> EnvState:
    gains = np.full(cfg.num_relays, 1.0e-9)
    return EnvState(aos_slots=aos, gains_sr=gains.copy(), gains_rc=gains.copy(), association=association)


def test_action_indexing() -> None:
    """Test that index 0 is Idle and k + 1 is Sample(k)."""
    assert Action.idle().index == 0
    assert Action.sample(2).index == 3
    assert Action.from_index(0, 5).is_idle
    assert Action.from_index(5, 5) == Action.sample(4)
    assert str(Action.sample(1)) == "sample(1)"


def test_action_index_out_of_range() -> None:
    """Test that out-of-range indices raise a typed error."""
    with pytest.raises(InvalidActionError):
        Action.from_index(6, 5)
    with pytest.raises(InvalidActionError):
        Action.from_index(-1, 5)
    with pytest.raises(InvalidActionError):
        Action.sample(5).validate(5)


def test_feature_length() -> None:
    """Test the encoded vector length for five relays."""
    cfg = SystemConfig()
    assert feature_dim(cfg) == 17
    assert encode_state(make_state(cfg), cfg).shape == (17,)


def test_stale_state_encodes_to_one() -> None:
    """Test the AoS normalization."""
    cfg = SystemConfig()
    features = encode_state(make_state(cfg, aos=cfg.aos_cap_slots), cfg)
    assert features[0] == 1.0
    assert np.all(np.isfinite(features))


def test_association_one_hot() -> None:
    """Test the association block including the 'none' slot."""
    cfg = SystemConfig()
    none = encode_state(make_state(cfg), cfg)
    assert none[-1] == 1.0
    assert none[11:].sum() == 1.0

    relay = encode_state(make_state(cfg, association=2), cfg)
    assert relay[11 + 2] == 1.0
    assert relay[-1] == 0.0


def test_threshold_gain_encodes_to_one() -> None:
    """Test that a gain at the hop feasibility threshold maps to 1.0."""
    cfg = SystemConfig()
    state = make_state(cfg)
    threshold = feasibility_gain(cfg.hop1_deadline_s, cfg)
    state = replace(state, gains_sr=np.full(cfg.num_relays, threshold))
    features = encode_state(state, cfg)
    assert features[1] == pytest.approx(1.0, rel=1e-12)


def test_invalid_state_rejected() -> None:
    """Test that malformed states are rejected by the encoder."""
    cfg = SystemConfig()
    with pytest.raises(ValueError):
        encode_state(make_state(cfg, aos=0), cfg)
    with pytest.raises(ValueError):
        encode_state(make_state(cfg, association=5), cfg)
    bad = replace(make_state(cfg), gains_rc=np.full(cfg.num_relays, math.nan))
    with pytest.raises(ValueError):
        encode_state(bad, cfg)


def test_state_equality_and_hash() -> None:
    """Test value equality of states holding arrays."""
    cfg = SystemConfig()
    first = make_state(cfg)
    second = make_state(cfg)
    assert first == second
    assert hash(first) == hash(second)
    assert first != make_state(cfg, aos=11)


def test_state_encoder_matches_function() -> None:
    """Test the bound encoder."""
    cfg = SystemConfig()
    encoder = StateEncoder(cfg)
    state = make_state(cfg)
    assert encoder.dim == 17
    np.testing.assert_array_equal(encoder(state), encode_state(state, cfg))


def test_slots_to_seconds() -> None:
    """Test the slot-duration conversion used for AoS and rewards."""
    cfg = replace(SystemConfig(), tau_s=0.25)
    assert slots_to_seconds(4, cfg) == pytest.approx(1.0)
    assert slots_to_seconds(0, cfg) == 0.0

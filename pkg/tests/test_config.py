from __future__ import annotations

import pytest

from cddsim.config import RunConfig, apply_overrides, parse_config, serialize_config, validate
from cddsim.errors import ParseError, ValidationError


def test_minimal_config_takes_defaults():
    cfg = parse_config("[run]\ngate = pi8\n")
    assert cfg.gate == "pi8"
    assert (cfg.tau0, cfg.delta, cfg.J, cfg.beta) == (1e-9, 0.0, 1e4, 1e6)
    assert cfg.n_max == 5 and cfg.strategy == "while"
    assert cfg.block_count == 1 and cfg.n_qubits == 6


def test_negative_delta_rejected():
    with pytest.raises(ValidationError):
        parse_config("[sequence]\ndelta = -1\n")
    with pytest.raises(ValidationError):
        apply_overrides(RunConfig(), {"delta": "-1"})


def test_units_and_decades():
    cfg = parse_config("[model]\nJ = 10kHz\nbeta = 2 MHz\n[sequence]\ntau0 = 5 ns\n"
                       "[sweep]\nJ_values = decades(0, 2)\nbeta_values = 1e3, 1e4\n")
    assert cfg.J == 1e4 and cfg.beta == 2e6
    assert cfg.tau0 == pytest.approx(5e-9, rel=1e-15)
    assert cfg.J_values == (1.0, 10.0, 100.0)
    assert cfg.beta_values == (1e3, 1e4)


def test_aliases_and_comments():
    cfg = parse_config("# header\n[sequence]\ntau0_s = 2e-9  # trailing\n[model]\nJ_rads = 5\n")
    assert cfg.tau0 == 2e-9 and cfg.J == 5.0


@pytest.mark.parametrize("text, line, column", [
    ("[run]\ncolour = red\n", 2, 1),
    ("[run]\nJ = 1\n", 2, 1),
    ("[model]\nJ = 1\nJ = 2\n", 3, 1),
    ("[sequence]\ntau0 = 3 parsecs\n", 2, 8),
    ("[nowhere]\n", 1, 2),
    ("[run\n", 1, 1),
    ("[run]\n  gate pi8\n", 2, 3),
])
def test_parse_error_locations(text, line, column):
    with pytest.raises(ParseError) as info:
        parse_config(text)
    assert (info.value.line, info.value.column) == (line, column)
    assert f"line {line}" in str(info.value)


def test_roundtrip_through_canonical_text():
    cfg = parse_config("[run]\ngate = cphase\nn_max = 3\n[model]\nbath_count = 3\n[output]\nformat = json\n"
                       "[sweep]\nJ_values = decades(2, 4)\n")
    assert parse_config(serialize_config(cfg)) == cfg
    assert parse_config(serialize_config(RunConfig())) == RunConfig()
    assert "blocks = auto" in serialize_config(RunConfig())


@pytest.mark.parametrize("changes", [
    {"gate": "toffoli"}, {"strategy": "never"}, {"n_max": -1}, {"tau0": 0.0}, {"J": -1.0},
    {"gate": "cphase", "blocks": 1}, {"bath_count": 9}, {"J_values": ()}, {"budget": 0},
])
def test_validation_failures(changes):
    with pytest.raises(ValidationError):
        RunConfig().replace(**changes)


def test_validate_accepts_defaults():
    assert validate(RunConfig()) == RunConfig()

"""Strict config parsing: defaults, errors with line numbers, round-trip."""

import pytest

from kellerscope.config import ConfigError, format_config, parse_config
from kellerscope.ic import ICName
from kellerscope.model import PhiFamily

MINIMAL = ""

FULL = """\
# full example
[domain]
dim = 2
lengths = 1.0, 2.0
cells = 8, 12

[model]
tau = 0.5
chi = 2.0
mu = 4.0
a = 1.0
k = 0.3
p = 1.5
s0_phi = 3.0
phi_family = canonical
reaction = on

[stepper]
dt_init = 1e-4
dt_min = 1e-10
dt_max = 1e-2
safety = 0.8
blowup_threshold = 1e5
t_end = 2.0
observer_stride = 5
series_gamma = 4.0

[ic]
name = two_bumps
amplitude = 1.2
width = 0.15

[output]
out_dir = results

[sweep]
chi_values = 0.5, 1.0
mu_values = 1.0, 2.0, 4.0
p_values = 0.0
repeat = 2
seed = 7
gamma0 = 3.0
c_reg = 1.5
"""


def test_minimal_config_uses_documented_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.domain.dim == 1
    assert cfg.domain.cells == (64,)
    assert cfg.params.tau == 1.0
    assert cfg.params.phi_family is PhiFamily.CANONICAL
    assert cfg.params.reaction_on is True
    assert cfg.stepper.blowup_threshold is None      # resolved from u0 later
    assert cfg.ic.name is ICName.CONSTANT
    assert cfg.out_dir == "out"
    assert cfg.sweep.gamma0 is None


def test_full_config_round_trip():
    cfg = parse_config(FULL)
    assert cfg.domain.cells == (8, 12)
    assert cfg.params.chi == 2.0
    assert cfg.stepper.blowup_threshold == 1e5
    assert cfg.ic.name is ICName.TWO_BUMPS
    assert cfg.sweep.mu_values == (1.0, 2.0, 4.0)
    again = parse_config(format_config(cfg))
    assert again == cfg


def test_minimal_round_trip():
    cfg = parse_config(MINIMAL)
    assert parse_config(format_config(cfg)) == cfg


def test_constraint_error_names_key_and_line():
    text = "[model]\ntau = 1.0\nmu = -1\n"
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert any(ln == 3 and "mu" in msg for ln, msg in err.value.problems)


def test_duplicate_key_is_an_error_not_last_wins():
    text = "[model]\nchi = 1.0\nchi = 2.0\n"
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert any("duplicate" in msg and ln == 3 for ln, msg in err.value.problems)


def test_unknown_key_and_section_rejected():
    with pytest.raises(ConfigError) as err:
        parse_config("[model]\nchy = 1.0\n")
    assert any("unknown key 'chy'" in msg and ln == 2
               for ln, msg in err.value.problems)
    with pytest.raises(ConfigError) as err:
        parse_config("[modell]\nchi = 1.0\n")
    assert any("unknown section" in msg for _, msg in err.value.problems)


def test_syntax_error_with_line():
    with pytest.raises(ConfigError) as err:
        parse_config("[model]\nthis is not a key value line\n")
    assert err.value.problems[0][0] == 2


def test_key_outside_section():
    with pytest.raises(ConfigError) as err:
        parse_config("chi = 1.0\n")
    assert "outside" in err.value.problems[0][1]


def test_bad_value_types_reported():
    with pytest.raises(ConfigError) as err:
        parse_config("[model]\nchi = fast\n")
    assert any("bad value" in msg for _, msg in err.value.problems)
    with pytest.raises(ConfigError) as err:
        parse_config("[model]\nreaction = maybe\n")
    assert any("'on' or 'off'" in msg for _, msg in err.value.problems)


def test_multiple_problems_collected():
    text = "[model]\nmu = -1\n[stepper]\nsafety = 7\n"
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert len(err.value.problems) >= 2


def test_comments_and_blank_lines_ignored():
    cfg = parse_config("\n# leading comment\n[model]\nchi = 3.0  # trailing\n\n")
    assert cfg.params.chi == 3.0


def test_2d_scalar_lengths_broadcast():
    cfg = parse_config("[domain]\ndim = 2\ncells = 8\n")
    assert cfg.domain.cells == (8, 8)
    assert cfg.domain.lengths == (1.0, 1.0)


def test_dimension_axis_mismatch_rejected():
    with pytest.raises(ConfigError):
        parse_config("[domain]\ndim = 1\nlengths = 1.0, 2.0\ncells = 8, 8\n")

from pathlib import Path

import pytest

from solarhome.config import load_config, parse_config
from solarhome.dispatch import LoadKind
from solarhome.errors import ConfigError
from solarhome.planning import bill_of_materials, tier2_loads

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_basic_config():
    p = load_config(CONFIGS / "basic.conf")
    assert p.system.panel.count == 2 and p.system.battery.count == 2
    assert p.system.loads[0].kind is LoadKind.AC
    assert bill_of_materials(p.catalog) == 240.0
    assert p.pnl.units_sold_per_year == (500, 500, 500)
    assert p.day == "clear:8h:667"


def test_tier2_config_matches_reference_loads():
    p = load_config(CONFIGS / "tier2.conf")
    assert p.system.loads == tier2_loads()


def test_defaults_when_empty():
    p = parse_config("")
    assert p.system.panel.p_max == 300.0
    assert bill_of_materials(p.catalog) == 240.0


def test_chip_preset():
    p = parse_config("[converter]\npreset = chip\n")
    assert p.system.converter.v_out_nominal == 2.4


@pytest.mark.parametrize("text", [
    "[panels]\ncount = 2\n",
    "[panel]\ncolour = blue\n",
    "[panel]\ncount = two\n",
    "[battery]\nsoc_min = 0.9\n",
    "[load x]\np_w = 10\nhours = 18\n",
    "[load x]\nkind = HVDC\n",
    "[system]\nstep_s = 0\n",
    "[catalog]\nshipping_usd = -1\n",
    "[pnl]\nunits_sold_per_year = 1,x\n",
    "[daq]\nmax_uptime = 1\n",
    "not ini at all",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.conf")

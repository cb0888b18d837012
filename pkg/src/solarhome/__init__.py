"""Off-grid solar home system: PV, power management, storage, dispatch and planning."""

from .battery import BatterySpec, BatteryState
from .dispatch import LoadItem, LoadKind, dispatch_step
from .engine import SimResult, SystemConfig, run, run_sweep
from .environment import EnvironmentSample, ScenarioProfile, clear_sky_day, cloudy_modifier
from .inverter import InverterSpec
from .pmic import ConverterSpec, ConverterState, Mode, MpptState
from .pv import PanelSpec, PvModel, fit_model

__version__ = "0.1.0"

__all__ = [
    "BatterySpec", "BatteryState", "ConverterSpec", "ConverterState", "EnvironmentSample",
    "InverterSpec", "LoadItem", "LoadKind", "Mode", "MpptState", "PanelSpec", "PvModel",
    "ScenarioProfile", "SimResult", "SystemConfig", "clear_sky_day", "cloudy_modifier",
    "dispatch_step", "fit_model", "run", "run_sweep",
]

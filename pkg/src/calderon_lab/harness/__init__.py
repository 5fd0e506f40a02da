"""Configuration, caching, scenario orchestration and report emission."""

from .config import FunctionSpec, ScenarioConfig, default_config
from .report import Assertion, ScenarioReport, emit_report
from .scenarios import run_scenario

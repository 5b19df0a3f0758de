"""
Experiment plumbing: settings, scenario files and the translation of an
ExperimentSpec into networks, initial configurations and aggregation functions.
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Iterator, Optional, Union

import yaml
from dotenv import load_dotenv
from pydantic import ValidationError

from .aggregation import AggregationFunction, Threshold, from_spec, is_boolean
from .configuration import ConfigDescriptor, WindowConfig
from .dynamics import PartialLaw, RngStream, monte_carlo, partial_law, run_deterministic, simulate_run
from .errors import InvalidConfiguration, SpecError
from .models import Boundary, Cylinder, ExperimentSpec, MonteCarloReport, Pattern, TraceRecord, parse_node
from .network import Network, SquareLattice, Window, load_network_json, network_from_name

load_dotenv()

# Path to the settings YAML file
settings_path = os.getenv("SETTINGS_PATH", "configuration/settings.yml")

logger = logging.getLogger("netdiff.experiment")

InitialState = Union[ConfigDescriptor, WindowConfig]


def load_settings(file_path: str) -> Dict[str, Any]:
    """
    Load runtime settings from a YAML file.

    Settings include the default horizon, trace truncation, star and richness
    limits, the exact-law enumeration cap and the Monte Carlo batch and fan-out.

    Args:
        file_path: Path to the YAML file containing settings

    Returns:
        Dict[str, Any]: Dictionary containing settings

    If the settings file doesn't exist or can't be loaded, default settings will be returned.
    """
    default_settings = {
        "horizon": 1000,
        "trace_active_limit": 1000,
        "star_cap": 200,
        "richness_star_threshold": 20,
        "enumeration_limit": 20,
        "monte_carlo_runs": 1000,
        "workers": 1,
        "progress": True,
        "log_level": "INFO",
        "default_boundary": "FrozenInactive",
        "window_radius": 8,
    }

    try:
        if not os.path.exists(file_path):
            logger.warning(f"Settings file {file_path} not found, using defaults")
            return default_settings

        with open(file_path, 'r') as file:
            settings = yaml.safe_load(file) or {}

        # Ensure all expected settings are present
        for key in default_settings:
            if key not in settings:
                settings[key] = default_settings[key]

        logger.info(f"Loaded settings from {file_path}")
        return settings
    except Exception as e:
        logger.error(f"Error loading settings: {str(e)}")
        return default_settings


def load_test_data(test_name: str, directory: Union[str, Path] = "tests") -> Dict[str, Any]:
    """Load a recorded CLI scenario (tests/test_<name>.yml); an empty dict when missing or incomplete."""
    scenario_file = Path(directory) / f"test_{test_name}.yml"
    if not scenario_file.exists():
        logger.warning(f"Scenario file {scenario_file} not found")
        return {}
    try:
        with open(scenario_file, "r") as f:
            scenario = yaml.safe_load(f) or {}
    except (OSError, yaml.YAMLError) as e:
        logger.error(f"Error loading scenario {test_name}: {e}")
        return {}
    missing = [key for key in ("args", "exit_code") if key not in scenario]
    if missing:
        logger.error(f"Scenario {test_name} lacks {missing}")
        return {}
    scenario.setdefault("expect", [])
    logger.info(f"Loaded scenario {test_name} ({len(scenario['args'])} args)")
    return scenario


def build_spec(spec_path: Optional[str] = None, **overrides: Any) -> ExperimentSpec:
    """Read an ExperimentSpec document and apply flag overrides (None means not given)."""
    doc: Dict[str, Any] = {}
    if spec_path:
        try:
            with open(spec_path, "r") as f:
                doc = json.load(f)
        except (OSError, ValueError) as e:
            raise SpecError(f"cannot read experiment spec {spec_path}: {str(e)}")
    doc.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentSpec.model_validate(doc)
    except ValidationError as e:
        first = e.errors()[0]
        raise SpecError(f"invalid experiment spec: {first['msg']}", {"field": list(first["loc"])})


def parse_network(text: str) -> Network:
    """Built-in network name or a path to an explicit JSON graph."""
    if text.endswith(".json") or Path(text).is_file():
        if not Path(text).is_file():
            raise SpecError(f"network file {text} does not exist")
        return load_network_json(text)
    return network_from_name(text)


def make_window(net: Network, radius: Optional[int], boundary: Optional[Union[str, Boundary]] = None,
                extend: Optional[ConfigDescriptor] = None) -> Network:
    """Box window on 2-d lattices, BFS ball elsewhere; finite networks are returned as they are."""
    if radius is None or net.is_finite:
        return net
    boundary = Boundary(boundary or Boundary.FROZEN_INACTIVE)
    extend_pattern = (extend.even, extend.odd) if extend is not None else None
    if boundary is Boundary.EXTEND_BASE and extend_pattern is None:
        extend_pattern = (Pattern.INACTIVE, Pattern.INACTIVE)
    if isinstance(net, SquareLattice) and net.d == 2:
        return Window.box(net, [(-radius, radius), (-radius, radius)], boundary, extend_pattern)
    return Window.ball(net, net.origin, radius, boundary, extend_pattern)


def parse_init(text: Optional[str], net: Network) -> InitialState:
    """Keyword (empty, full, one, checkerboard, a base name) or a JSON file (descriptor or rows)."""
    window = net if isinstance(net, Window) else None
    if text is None or text == "empty":
        config = ConfigDescriptor.named("AllInactive")
    elif text == "full":
        config = ConfigDescriptor.named("AllActive")
    elif text == "one":
        config = ConfigDescriptor.named("AllInactive", {net.origin: "Active"})
    elif text == "checkerboard":
        if window is not None:
            return WindowConfig.checkerboard(window)
        config = ConfigDescriptor.named("EvenActive")
    elif text in ("AllInactive", "AllActive", "EvenActive", "OddActive"):
        config = ConfigDescriptor.named(text)
    elif Path(text).is_file():
        try:
            with open(text, "r") as f:
                doc = json.load(f)
        except (OSError, ValueError) as e:
            raise InvalidConfiguration(f"cannot read initial configuration {text}: {str(e)}")
        if isinstance(doc, dict) and "rows" in doc:
            if window is None:
                raise InvalidConfiguration("row bitmaps need a window (give --radius)")
            return WindowConfig.from_rows(window, doc["rows"])
        config = ConfigDescriptor.load(text)
    else:
        raise InvalidConfiguration(f"unknown initial configuration {text!r}")
    if window is not None:
        return WindowConfig.from_descriptor(window, config)
    return config


def parse_target(path: Optional[str]) -> Cylinder:
    if path is None:
        raise SpecError("a target cylinder file is required")
    try:
        with open(path, "r") as f:
            return Cylinder.model_validate(json.load(f))
    except (OSError, ValueError) as e:
        raise SpecError(f"cannot read target cylinder {path}: {str(e)}")


def parse_aggregation(text: str, net: Network) -> AggregationFunction:
    return from_spec(text, net.gamma)


def is_deterministic(A: AggregationFunction) -> bool:
    return isinstance(A, Threshold) and is_boolean(A)


def run_simulation(spec: ExperimentSpec, settings: Dict[str, Any]) -> Iterator[TraceRecord]:
    """Trace records for one run: the threshold step for Boolean A, sampling otherwise."""
    base = parse_network(spec.net)
    net = make_window(base, spec.radius, spec.boundary or settings["default_boundary"])
    A = parse_aggregation(spec.agg, net)
    initial = parse_init(spec.init, net)
    horizon = spec.steps if spec.steps is not None else settings["horizon"]
    limit = settings["trace_active_limit"]
    logger.info(f"Simulating {A.describe()} on {net.name} for {horizon} steps")
    if spec.mode == "deterministic":
        start = initial.active_set() if isinstance(initial, WindowConfig) else initial
        run = run_deterministic(net, A.q, start, horizon, limit)
        yield from run.trace
        return
    yield from simulate_run(net, A, initial, horizon, RngStream(spec.seed), limit)


def run_monte_carlo(spec: ExperimentSpec, settings: Dict[str, Any]) -> MonteCarloReport:
    base = parse_network(spec.net)
    net = make_window(base, spec.radius, spec.boundary or settings["default_boundary"])
    A = parse_aggregation(spec.agg, net)
    initial = parse_init(spec.init, net)
    horizon = spec.steps if spec.steps is not None else settings["horizon"]
    return monte_carlo(net, A, initial, spec.runs, horizon, spec.seed,
                       workers=settings["workers"], progress=settings["progress"])



def one_step_law(spec: ExperimentSpec, settings: Dict[str, Any], nodes_text: str) -> PartialLaw:
    """Exact law of the next statuses on a JSON list of nodes, capped by settings enumeration_limit."""
    try:
        nodes = [parse_node(x) for x in json.loads(nodes_text)]
    except (ValueError, TypeError) as e:
        raise SpecError(f"cannot read law nodes {nodes_text!r}: {str(e)}")
    if not nodes:
        raise SpecError("the law needs at least one node")
    base = parse_network(spec.net)
    net = make_window(base, spec.radius, spec.boundary or settings["default_boundary"])
    A = parse_aggregation(spec.agg, net)
    initial = parse_init(spec.init, net)
    logger.info(f"Enumerating the one-step law of {A.describe()} on {len(nodes)} nodes")
    return partial_law(net, A, initial, nodes, limit=settings["enumeration_limit"])

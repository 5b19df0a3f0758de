"""
Command-line driver.

    netdiff simulate   --net z2-l1 --agg proportion --init one --seed 7 --steps 100
    netdiff classify   --init configuration/init/one_active.json
    netdiff analyze    --net z2-l1 --radius 5
    netdiff trajectory --net z2-l1 --init checkerboard --target target.json
    netdiff contagion  --net hex --radius 10
    netdiff render     --trace trace.jsonl --format ascii

Results go to stdout (or --out). Failures print one JSON line on stderr and
exit with 2 (bad request), 3 (refused precondition) or 4 (internal error).
"""

import functools
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import click
import logfire

from utils.logger import configure_logfire, get_logger
from utils.render import ascii_frames, read_trace, write_pgm_frames

from .aggregation import is_strict
from .configuration import ConfigDescriptor, block_classify, block_classify_plain
from .contagion import contagion_threshold_estimate, rectangle_seeds, shape_gallery_check
from .dynamics import RngStream
from .errors import InvalidConfiguration, NetdiffError, NotBipartite, SpecError
from .experiment import (
    build_spec,
    is_deterministic,
    load_settings,
    make_window,
    one_step_law,
    parse_aggregation,
    parse_init,
    parse_network,
    parse_target,
    run_monte_carlo,
    run_simulation,
    settings_path,
)
from .models import Boundary, node_json
from .network import Window, bipartition, OddCycle
from .reachability import (
    build_trajectory,
    check_richness,
    find_complex_stars,
    is_caterpillar,
    probability_lower_bound,
    random_partial_configs,
)

logger = logging.getLogger("netdiff.cli")


def reported(func):
    """Run a command inside a logfire span and turn errors into exit codes plus one JSON line."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            with logfire.span(f"netdiff {func.__name__}"):
                return func(*args, **kwargs)
        except NetdiffError as e:
            logger.info(f"{func.__name__} failed with {e.reason}: {e.message}")
            click.echo(json.dumps(e.to_dict()), err=True)
            raise SystemExit(e.exit_code)
        except (click.ClickException, click.exceptions.Exit):
            raise
        except Exception as e:
            logger.exception(f"Internal error in {func.__name__}")
            click.echo(json.dumps({"error": "Internal", "message": str(e)}), err=True)
            raise SystemExit(4)

    return wrapper


def emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text + "\n")
        logger.info(f"Wrote {out}")
    else:
        click.echo(text)


def experiment_options(func):
    options = [
        click.option("--spec", "spec_path", type=click.Path(), help="ExperimentSpec JSON document"),
        click.option("--net", help="Network name or explicit JSON graph"),
        click.option("--init", help="Initial configuration keyword or JSON file"),
        click.option("--agg", help="proportion | threshold:<q> | <table.json>"),
        click.option("--seed", type=int),
        click.option("--steps", type=int),
        click.option("--radius", type=int, help="Window radius on infinite networks"),
        click.option("--boundary", type=click.Choice([b.value for b in Boundary])),
        click.option("--out", type=click.Path()),
        click.option("--format", "fmt", type=click.Choice(["json", "jsonl", "pgm", "ascii"])),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _overrides(**flags: Any) -> Dict[str, Any]:
    flags["format"] = flags.pop("fmt", None)
    return flags


@click.group()
@click.option("--settings", "settings_file", type=click.Path(), default=None, help="Settings YAML file")
@click.pass_context
def cli(ctx: click.Context, settings_file: Optional[str]) -> None:
    """Diffusion dynamics on countable networks."""
    settings = load_settings(settings_file or settings_path)
    get_logger("netdiff", settings.get("log_level", "INFO"))
    configure_logfire()
    ctx.obj = settings


@cli.command()
@experiment_options
@click.option("--runs", type=int, help="Monte Carlo runs; a report replaces the trace")
@click.option("--monte-carlo", "monte_carlo", is_flag=True,
              help="Monte Carlo report; --runs defaults to settings monte_carlo_runs")
@click.option("--law", "law_nodes", help="JSON node list; print the exact one-step law on those nodes")
@click.pass_obj
@reported
def simulate(settings: Dict[str, Any], spec_path, runs, monte_carlo, law_nodes, **flags) -> None:
    """Run the dynamics and write a JSONL trace (or frames, a Monte Carlo report, or a one-step law)."""
    if law_nodes is not None:
        spec = build_spec(spec_path, mode="law", **_overrides(**flags))
        emit(json.dumps(one_step_law(spec, settings, law_nodes).to_json()), spec.out)
        return

    draft = build_spec(spec_path, mode="deterministic", runs=runs, **_overrides(**flags))
    A = parse_aggregation(draft.agg, parse_network(draft.net))
    mode = "deterministic" if is_deterministic(A) else "stochastic"
    if monte_carlo and runs is None and draft.runs == 1:
        runs = settings["monte_carlo_runs"]
    spec = build_spec(spec_path, mode=mode, runs=runs, **_overrides(**flags))

    if spec.runs > 1 or monte_carlo:
        if mode == "deterministic":
            raise SpecError("Monte Carlo runs need a stochastic aggregation function")
        emit(run_monte_carlo(spec, settings).model_dump_json(), spec.out)
        return

    records = list(run_simulation(spec, settings))
    if spec.format == "ascii":
        emit("\n\n".join(ascii_frames(r.model_dump(exclude_none=True) for r in records)), spec.out)
    elif spec.format == "pgm":
        if not spec.out:
            raise SpecError("PGM frames need --out <directory>")
        write_pgm_frames((r.model_dump(exclude_none=True) for r in records), spec.out)
    elif spec.format == "json":
        emit(json.dumps([r.model_dump(exclude_none=True) for r in records]), spec.out)
    else:
        emit("\n".join(r.model_dump_json(exclude_none=True) for r in records), spec.out)


@cli.command()
@experiment_options
@click.pass_obj
@reported
def classify(settings: Dict[str, Any], spec_path, **flags) -> None:
    """Block descriptor and taxonomy label of an initial configuration."""
    spec = build_spec(spec_path, mode="classify", **_overrides(**flags))
    net = parse_network(spec.net)
    config = parse_init(spec.init, net)
    if not isinstance(config, ConfigDescriptor):
        raise InvalidConfiguration("classification needs a descriptor, not a window bitmap")
    try:
        report = block_classify(net, config).report()
    except NotBipartite:
        report = block_classify_plain(net, config).report()
        report["note"] = f"{net.name} is not bipartite; reporting (inactive, active) over the whole network"
    emit(json.dumps(report), spec.out)


@cli.command()
@experiment_options
@click.option("--samples", type=int, default=20, show_default=True, help="Random storability samples")
@click.option("--sample-size", type=int, default=4, show_default=True)
@click.pass_obj
@reported
def analyze(settings: Dict[str, Any], spec_path, samples, sample_size, **flags) -> None:
    """Bipartiteness, complex stars, caterpillar form and richness of a network or window."""
    spec = build_spec(spec_path, mode="analyze", **_overrides(**flags))
    base = parse_network(spec.net)
    net = make_window(base, spec.radius if spec.radius is not None else settings["window_radius"])
    split = bipartition(net)
    rng = RngStream(spec.seed if spec.seed is not None else 0)
    parity = 0 if net.bipartite else None
    pairs = random_partial_configs(net, samples, sample_size, rng, parity)
    richness = check_richness(net, pairs, settings["richness_star_threshold"], settings["star_cap"])
    report = {
        "network": base.name,
        "window": net.describe() if isinstance(net, Window) else None,
        "nodes": len(net.nodes()),
        "bipartite": not isinstance(split, OddCycle),
        "odd_cycle": [node_json(x) for x in split.cycle] if isinstance(split, OddCycle) else None,
        "stars": len(find_complex_stars(net, settings["star_cap"])),
        "caterpillar": is_caterpillar(net).model_dump(),
        "richness": richness.model_dump(),
    }
    emit(json.dumps(report), spec.out)


@cli.command()
@experiment_options
@click.option("--target", type=click.Path(), help="Target cylinder JSON {\"X\": [...], \"Y\": [...]}")
@click.pass_obj
@reported
def trajectory(settings: Dict[str, Any], spec_path, target, **flags) -> None:
    """Synthesize a certified trajectory from a configuration to a target cylinder."""
    spec = build_spec(spec_path, mode="trajectory", target=target, **_overrides(**flags))
    net = parse_network(spec.net)
    config = parse_init(spec.init, net)
    cylinder = parse_target(spec.target)
    radius = spec.radius if spec.radius is not None else settings["window_radius"]
    traj = build_trajectory(net, config, cylinder, window_radius=radius)
    A = parse_aggregation(spec.agg, net)
    if is_strict(A):
        traj = traj.with_bound(probability_lower_bound(net, A, traj))
    else:
        logger.warning(f"{A.describe()} is not strict; no probability bound attached")
    emit(json.dumps(traj.to_json()), spec.out)


@cli.command()
@experiment_options
@click.option("--grid", help="Comma-separated q values (default k/gamma)")
@click.option("--max-side", type=int, default=4, show_default=True, help="Largest seed rectangle side")
@click.option("--shapes", type=click.Path(), help="Run the absorbing shape gallery from this YAML file instead")
@click.pass_obj
@reported
def contagion(settings: Dict[str, Any], spec_path, grid, max_side, shapes, **flags) -> None:
    """Empirical contagion threshold from finite seeds, or the absorbing shape gallery."""
    spec = build_spec(spec_path, mode="contagion", **_overrides(**flags))
    if shapes:
        entries = shape_gallery_check(shapes)
        emit(json.dumps([e.model_dump() for e in entries]), spec.out)
        return
    net = parse_network(spec.net)
    q_grid: Optional[List[str]] = grid.split(",") if grid else None
    estimate = contagion_threshold_estimate(
        net,
        rectangle_seeds(net, max_side),
        q_grid,
        target_radius=spec.radius if spec.radius is not None else 10,
        budget=spec.steps if spec.steps is not None else 50,
        workers=settings["workers"],
        progress=settings["progress"],
    )
    emit(estimate.model_dump_json(), spec.out)


@cli.command()
@click.option("--trace", "trace_path", type=click.Path(), required=True)
@click.option("--format", "fmt", type=click.Choice(["ascii", "pgm"]), default="ascii", show_default=True)
@click.option("--out", type=click.Path())
@reported
def render(trace_path: str, fmt: str, out: Optional[str]) -> None:
    """Frames of a window trace: ASCII grids or PGM images."""
    records = read_trace(trace_path)
    if fmt == "ascii":
        emit("\n\n".join(ascii_frames(records)), out)
        return
    if not out:
        raise SpecError("PGM frames need --out <directory>")
    for path in write_pgm_frames(records, out):
        click.echo(str(path))


if __name__ == "__main__":
    cli()

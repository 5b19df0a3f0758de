#!/usr/bin/env python
"""
Scenario Recorder Module

Runs one netdiff CLI invocation and records it as a YAML scenario in tests/,
so the run can be replayed by the test suite with click's CliRunner.

Usage:
    python -m utils.generate_scenario --name checkerboard_cycle \
        --description "Period-2 alternation from a checkerboard" \
        --expect '"event": "cycle"' -- simulate --net z2-l1 --agg threshold:1/2 --init checkerboard --steps 4

Each --expect fragment must occur in the recorded output; the exit code is
stored as observed.
"""

import re
from pathlib import Path
from typing import List, Tuple

import click
import yaml
from click.testing import CliRunner
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


def sanitize_filename(name: str) -> str:
    """Lowercase name with anything but word characters replaced by underscores."""
    sanitized = re.sub(r'[^\w\s-]', '_', name.lower())
    return re.sub(r'[\s-]+', '_', sanitized)


def str_presenter(dumper, data):
    """Block style for multi-line strings."""
    if "\n" in data:
        return dumper.represent_scalar('tag:yaml.org,2002:str', data, style='|')
    return dumper.represent_scalar('tag:yaml.org,2002:str', data)


def record_scenario(name: str, description: str, args: List[str], expect: List[str],
                    directory: Path = Path("tests")) -> Path:
    from netdiff.cli import cli

    result = CliRunner().invoke(cli, args)
    output = result.output
    missing = [fragment for fragment in expect if fragment not in output]
    if missing:
        raise click.ClickException(f"expected fragments not found in output: {missing}")

    file_path = directory / f"test_{sanitize_filename(name)}.yml"
    yaml.add_representer(str, str_presenter)
    with open(file_path, 'w', encoding='utf-8') as f:
        f.write(f"# {description}\n")
        f.write("# Recorded with utils.generate_scenario; replayed by tests/test_cli.py\n\n")
        yaml.dump(
            {
                "description": description,
                "args": list(args),
                "exit_code": result.exit_code,
                "expect": list(expect),
            },
            f,
            default_flow_style=False,
            sort_keys=False,
        )
    return file_path


@click.command(context_settings={"ignore_unknown_options": True})
@click.option("--name", required=True, help="Scenario name (used in the file name)")
@click.option("--description", default="", help="One-line description")
@click.option("--expect", multiple=True, help="Output fragment the replay must find")
@click.argument("args", nargs=-1, type=click.UNPROCESSED)
def main(name: str, description: str, expect: Tuple[str, ...], args: Tuple[str, ...]) -> None:
    path = record_scenario(name, description or name, list(args), list(expect))
    click.echo(f"Scenario recorded: {path}")


if __name__ == "__main__":
    main()

"""
Shared helpers for CLI commands: configuration resolution and error handling.
"""

import functools
import json
import logging
import sys
from typing import Iterable, List, Optional

import click
from rich.console import Console

from ..errors import DivergenceError, GcodecError, InvalidArgumentError
from ..utils import Config, error_with_stacktrace, get_log_file_path

console = Console(stderr=True)


def handle_errors(func):
    """Turn GcodecError into a red message and the error's exit code."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except GcodecError as e:
            console.print(f"[red]Error ({e.error_type.value}): {e}[/red]")
            if isinstance(e, DivergenceError) and e.checkpoint_path:
                console.print(f"[yellow]Last finite parameters saved to: {e.checkpoint_path}[/yellow]")
            error_with_stacktrace(f"{func.__name__} failed", e, level=logging.DEBUG)
            console.print(f"[dim]Detailed logs available at: {get_log_file_path()}[/dim]")
            sys.exit(e.exit_code)
    return wrapper


def context_config(ctx: click.Context) -> Config:
    """Configuration loaded by the root command, or the default file when run standalone."""
    obj = ctx.find_root().obj
    if isinstance(obj, dict) and obj.get('config') is not None:
        return obj['config']
    return Config.load()


def parse_lambda_list(value: Optional[str]) -> Optional[List[float]]:
    """Parse ``"0.001,0.01,0.1"`` into floats."""
    if value is None:
        return None
    try:
        values = [float(part) for part in value.split(',') if part.strip()]
    except ValueError:
        raise InvalidArgumentError(f"Cannot parse lambda list: {value}")
    if not values:
        raise InvalidArgumentError("Lambda list must not be empty")
    return values


def resolve_config(config: Config, overrides: Iterable[str], **flags) -> Config:
    """
    Apply ``--set`` overrides, then dedicated flags, and validate once.

    Flags are given as ``section.key=value`` pairs in keyword form, e.g.
    ``train__steps=10``; ``None`` values are skipped. Flags come last so
    they win over ``--set`` for the same key.
    """
    flag_overrides = [
        f"{key.replace('__', '.')}={json.dumps(value)}"
        for key, value in flags.items() if value is not None
    ]
    return config.apply_overrides(list(overrides) + flag_overrides)


set_option = click.option('--set', 'overrides', multiple=True, metavar='SECTION.KEY=VALUE',
                          help='Override a configuration value (repeatable)')

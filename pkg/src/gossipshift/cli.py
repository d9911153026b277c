"""Command-line entry point.

Exit codes: 0 success, 1 runtime failure, 2 configuration failure.
"""

from __future__ import annotations

import csv
import dataclasses
import os
import sys

import click
import numpy as np
import yaml

from .config import ExperimentConfig, config_from_dict, config_to_dict
from .errors import ConfigError, GossipShiftError
from .orchestrator import run_experiment
from .presets import get_preset, preset_names

EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _load_base_config(preset: str | None, config_path: str | None) -> ExperimentConfig:
    if (preset is None) == (config_path is None):
        raise ConfigError("exactly one of --preset / --config is required")
    if preset is not None:
        return get_preset(preset)
    if not os.path.exists(config_path):
        raise ConfigError(f"config file not found: {config_path}")
    with open(config_path) as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"could not parse {config_path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{config_path}: top level must be a mapping")
    return config_from_dict(raw)


def _set_dotted(d: dict, dotted: str, value):
    parts = dotted.split(".")
    cur = d
    for p in parts[:-1]:
        if p not in cur or not isinstance(cur[p], dict):
            raise ConfigError(f"unknown config key {dotted!r}")
        cur = cur[p]
    if parts[-1] not in cur:
        raise ConfigError(f"unknown config key {dotted!r}")
    cur[parts[-1]] = value


def parse_config(preset=None, config_path=None, protocol=None, seed=None,
                 out=None, overrides=()) -> ExperimentConfig:
    """Resolve preset/file plus flag overrides into a validated config."""
    base = _load_base_config(preset, config_path)
    d = config_to_dict(base)
    if protocol is not None:
        d["protocol"]["protocol"] = protocol
    if seed is not None:
        d["seed"] = int(seed)
    if out is not None:
        d["out_dir"] = out
    for ov in overrides:
        if "=" not in ov:
            raise ConfigError(f"override must look like key=value, got {ov!r}")
        key, _, raw = ov.partition("=")
        _set_dotted(d, key.strip(), yaml.safe_load(raw))
    cfg = config_from_dict(d)
    cfg.validate()
    return cfg


def _config_options(f):
    f = click.option("--preset", type=str, default=None,
                     help="Built-in scenario name (see `presets`).")(f)
    f = click.option("--config", "config_path", type=str, default=None,
                     help="Path to a YAML config file.")(f)
    f = click.option("--protocol", type=str, default=None,
                     help="Protocol override: random, dac, or hast.")(f)
    f = click.option("--seed", type=int, default=None, help="Seed override.")(f)
    f = click.option("--out", type=str, default=None, help="Output directory.")(f)
    f = click.option("--override", "overrides", multiple=True, metavar="KEY=VALUE",
                     help="Dotted-path config override, repeatable "
                          "(e.g. protocol.tau=0.5).")(f)
    return f


@click.group()
def main():
    """Deterministic simulator for decentralized learning under concept shift."""


@main.command()
@_config_options
def run(preset, config_path, protocol, seed, out, overrides):
    """Run one experiment and write metrics under the output directory."""
    try:
        cfg = parse_config(preset, config_path, protocol, seed, out, overrides)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    click.echo(yaml.safe_dump(config_to_dict(cfg), sort_keys=False), nl=False)
    try:
        result = run_experiment(cfg)
    except GossipShiftError as exc:
        click.echo(f"run failed: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    click.echo(f"final mean accuracy: {result.summary['final_mean_accuracy']:.4f}")
    click.echo(f"outputs in {result.out_dir}")


@main.command()
@_config_options
@click.option("--protocols", default="hast,dac,random", show_default=True,
              help="Comma-separated protocol list.")
@click.option("--seeds", default="0", show_default=True,
              help="Comma-separated seed list.")
def matrix(preset, config_path, protocol, seed, out, overrides, protocols, seeds):
    """Run every (protocol, seed) pair and write comparison.csv."""
    try:
        base = parse_config(preset, config_path, protocol, seed, out, overrides)
        protocol_list = [p.strip() for p in protocols.split(",") if p.strip()]
        seed_list = [int(s) for s in seeds.split(",") if s.strip()]
        if not protocol_list or not seed_list:
            raise ConfigError("need at least one protocol and one seed")
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        rows = run_matrix(base, protocol_list, seed_list)
    except GossipShiftError as exc:
        click.echo(f"matrix failed: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    click.echo(f"wrote {os.path.join(base.out_dir, 'comparison.csv')} ({len(rows)} runs)")


def run_matrix(base: ExperimentConfig, protocol_list, seed_list) -> list[dict]:
    """Execute the (protocol, seed) grid under base.out_dir/runs/ and write a
    comparison table with per-run and per-protocol mean/std columns."""
    per_run = []
    for proto in protocol_list:
        for sd in seed_list:
            cfg = dataclasses.replace(
                base,
                seed=sd,
                protocol=dataclasses.replace(base.protocol, protocol=proto),
                out_dir=os.path.join(base.out_dir, "runs", f"{proto}_seed{sd}"),
            )
            result = run_experiment(cfg)
            per_run.append({
                "protocol": proto,
                "seed": sd,
                "final_accuracy": result.summary["final_mean_accuracy"],
                "mean_accuracy_last_10": result.summary["mean_accuracy_last_10_evals"],
                "post_shift_dip": result.summary["max_post_shift_dip"],
            })

    by_proto = {p: [r for r in per_run if r["protocol"] == p] for p in protocol_list}
    os.makedirs(base.out_dir, exist_ok=True)
    path = os.path.join(base.out_dir, "comparison.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "protocol", "seed", "final_accuracy", "mean_accuracy_last_10",
            "post_shift_dip", "final_accuracy_mean", "final_accuracy_std",
            "post_shift_dip_mean", "post_shift_dip_std",
        ])
        for r in per_run:
            group = by_proto[r["protocol"]]
            accs = [g["final_accuracy"] for g in group]
            dips = [g["post_shift_dip"] for g in group]
            writer.writerow([
                r["protocol"], r["seed"],
                repr(r["final_accuracy"]), repr(r["mean_accuracy_last_10"]),
                repr(r["post_shift_dip"]),
                repr(float(np.mean(accs))), repr(float(np.std(accs))),
                repr(float(np.mean(dips))), repr(float(np.std(dips))),
            ])
    return per_run


@main.command()
@_config_options
def validate(preset, config_path, protocol, seed, out, overrides):
    """Check a config without running it."""
    try:
        cfg = parse_config(preset, config_path, protocol, seed, out, overrides)
    except ConfigError as exc:
        click.echo(f"invalid: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    click.echo(yaml.safe_dump(config_to_dict(cfg), sort_keys=False), nl=False)
    click.echo("valid")


@main.command()
def presets():
    """List the built-in scenario presets."""
    for name in preset_names():
        click.echo(name)


if __name__ == "__main__":
    main()

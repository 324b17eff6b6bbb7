"""Command-line front end.

Every command reads an optional flat YAML config, applies flag overrides,
validates the code parameters and writes CSV (header row) or JSON lines.
Exit codes: 0 success, 1 configuration error, 2 runtime guard.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import click
import numpy as np
import yaml

from . import analysis, sim
from .codec import ConfigError, LayerConfig, decode_roundtrip
from .degree import DegreeDistribution, ideal_soliton, read_table, robust_soliton

EXIT_CONFIG = 1
EXIT_GUARD = 2


# -- configuration ------------------------------------------------------------------


@dataclass
class RunConfig:
    k: int = 100
    alpha: list[float] = field(default_factory=lambda: [0.5, 0.5])
    beta: list[float] = field(default_factory=lambda: [9.0, 1.0])
    sweep: list[float] | None = None
    degree: str = "robust 0.1 1"
    seed: int = 0
    runs: int = 1000
    delta_max: int = 200
    grid: list[int] | None = None
    feedback: bool = False
    backend: str = "montecarlo"
    iterations: int = 1000
    exact_cap: int = analysis.ensemble.EXACT_K_LIMIT
    out: str | None = None
    format: str = "csv"

    @classmethod
    def load(cls, path: str | None) -> "RunConfig":
        if path is None:
            return cls()
        try:
            data = yaml.safe_load(Path(path).read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        data = data or {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a flat mapping")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"{path}: unknown config keys {unknown}")
        cfg = cls()
        for key, value in data.items():
            setattr(cfg, key.replace("-", "_"), value)
        return cfg

    def override(self, **flags: Any) -> "RunConfig":
        for key, value in flags.items():
            if value is None or value == ():
                continue
            if key == "beta":
                value = list(value)
                if len(value) == 1:
                    self.beta = [float(value[0]), 1.0]
                    self.sweep = None
                else:
                    self.sweep = [float(v) for v in value]
                continue
            if key == "alpha":
                self.alpha = [float(value), 1.0 - float(value)]
                continue
            setattr(self, key, value)
        return self

    def validate(self) -> None:
        if self.format not in ("csv", "jsonl"):
            raise ConfigError(f"format must be csv or jsonl, got {self.format!r}")
        if self.backend not in ("exact", "montecarlo"):
            raise ConfigError(f"backend must be exact or montecarlo, got {self.backend!r}")
        for name in ("runs", "iterations"):
            if not isinstance(getattr(self, name), int) or getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if not isinstance(self.delta_max, int) or self.delta_max < 0:
            raise ConfigError("delta_max must be a nonnegative integer")
        for cfg in self.layer_configs():
            _ = cfg.sizes

    def betas(self) -> list[float]:
        return list(self.sweep) if self.sweep else [float(self.beta[0])]

    def layer_config(self, base_beta: float | None = None) -> LayerConfig:
        beta = list(self.beta)
        if base_beta is not None:
            if len(beta) != 2:
                raise ConfigError("a base-weight sweep needs exactly two layers")
            beta = [base_beta, beta[1]]
        try:
            return LayerConfig(int(self.k), tuple(self.alpha), tuple(beta))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    def layer_configs(self) -> list[LayerConfig]:
        if self.sweep:
            return [self.layer_config(b) for b in self.sweep]
        return [self.layer_config()]

    def degree_dist(self) -> DegreeDistribution:
        return parse_degree(self.degree, int(self.k))

    def backend_obj(self) -> analysis.EvalBackend:
        if self.backend == "exact":
            return analysis.EvalBackend.exact(int(self.exact_cap))
        return analysis.EvalBackend.montecarlo(self.iterations, self.seed)


def parse_degree(spec: str, k: int) -> DegreeDistribution:
    """``ideal``, ``robust C DELTA`` or ``table PATH``."""
    parts = str(spec).split()
    try:
        if parts[0] == "ideal" and len(parts) == 1:
            return ideal_soliton(k)
        if parts[0] == "robust" and len(parts) == 3:
            return robust_soliton(k, float(parts[1]), float(parts[2]))
        if parts[0] == "table" and len(parts) == 2:
            dd = read_table(parts[1])
            if dd.k > k:
                raise ConfigError(f"degree table reaches {dd.k} > k={k}")
            if dd.k < k:
                dd = DegreeDistribution(k, np.concatenate([dd.probs, np.zeros(k - dd.k)]))
            return dd
    except (ValueError, OSError, IndexError) as exc:
        raise ConfigError(f"bad degree spec {spec!r}: {exc}") from exc
    raise ConfigError(f"bad degree spec {spec!r}; use 'ideal', 'robust C DELTA' or 'table PATH'")


# -- output --------------------------------------------------------------------------


def _cell(v: Any) -> Any:
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


def _text(v: Any) -> Any:
    v = _cell(v)
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else v


def emit(cfg: RunConfig, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    out = open(cfg.out, "w", newline="") if cfg.out else sys.stdout
    try:
        if cfg.format == "csv":
            w = csv.writer(out, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([_text(v) for v in row])
        else:
            for row in rows:
                out.write(json.dumps(dict(zip(columns, (_cell(v) for v in row)))) + "\n")
    finally:
        if cfg.out:
            out.close()


# -- click plumbing ------------------------------------------------------------------


class _Group(click.Group):
    """Maps errors onto the documented exit codes."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            return super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.exceptions.Exit as exc:
            sys.exit(exc.exit_code)
        except click.Abort:
            click.echo("aborted", err=True)
            sys.exit(EXIT_CONFIG)
        except click.ClickException as exc:
            exc.show()
            sys.exit(EXIT_CONFIG)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except analysis.ExactGuardError as exc:
            click.echo(f"guard: {exc}", err=True)
            sys.exit(EXIT_GUARD)


def common(fn):
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), help="flat YAML config"),
        click.option("--k", type=int),
        click.option("--alpha", type=float, help="base-layer fraction"),
        click.option("--beta", type=float, multiple=True, help="base-layer weight; repeat to sweep"),
        click.option("--degree", type=str, help="'ideal', 'robust C DELTA' or 'table PATH'"),
        click.option("--seed", type=int),
        click.option("--runs", type=int),
        click.option("--delta-max", type=int),
        click.option("--feedback/--no-feedback", default=None),
        click.option("--backend", type=click.Choice(["exact", "montecarlo"])),
        click.option("--iterations", type=int),
        click.option("--exact-cap", type=int, help="largest k the exact backend accepts"),
        click.option("--out", type=click.Path(dir_okay=False)),
        click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"])),
    ]
    for opt in reversed(options):
        fn = opt(fn)
    return fn


def _config(config_path, fmt, **flags) -> RunConfig:
    cfg = RunConfig.load(config_path).override(format=fmt, **flags)
    cfg.validate()
    return cfg


@click.group(cls=_Group)
def main() -> None:
    """Unequal-recovery-time LT codes: analysis and simulation."""


# -- degree ----------------------------------------------------------------------------


def _degree_from_flags(cfg: RunConfig, ideal, robust, table) -> DegreeDistribution:
    if ideal is not None:
        return ideal_soliton(ideal)
    if robust is not None:
        k, c, delta = robust
        return robust_soliton(int(k), c, delta)
    if table is not None:
        return read_table(table)
    return cfg.degree_dist()


@main.group()
def degree() -> None:
    """Degree distributions."""


_degree_opts = [
    click.option("--ideal", type=int, metavar="K"),
    click.option("--robust", type=(int, float, float), metavar="K C DELTA"),
    click.option("--table", type=click.Path(exists=True, dir_okay=False)),
]


def _with_degree_opts(fn):
    for opt in reversed(_degree_opts):
        fn = opt(fn)
    return fn


@degree.command("show")
@_with_degree_opts
@common
def degree_show(ideal, robust, table, config_path, fmt, **flags):
    """Print the pmf."""
    cfg = _config(config_path, fmt, **flags)
    dd = _degree_from_flags(cfg, ideal, robust, table)
    emit(cfg, ["degree", "probability"], ((i, dd.pmf(i)) for i in range(1, dd.k + 1)))


@degree.command("sample")
@_with_degree_opts
@click.option("--n", "n", type=int, default=100000, show_default=True)
@common
def degree_sample(ideal, robust, table, n, config_path, fmt, **flags):
    """Histogram of ``n`` sampled degrees next to the pmf."""
    cfg = _config(config_path, fmt, **flags)
    dd = _degree_from_flags(cfg, ideal, robust, table)
    if n < 1:
        raise ConfigError("--n must be positive")
    draws = dd.sample(np.random.default_rng(cfg.seed), n)
    counts = np.bincount(draws, minlength=dd.k + 1)
    emit(
        cfg,
        ["degree", "count", "frequency", "probability"],
        ((i, int(counts[i]), counts[i] / n, dd.pmf(i)) for i in range(1, dd.k + 1)),
    )


# -- analysis ----------------------------------------------------------------------------


@main.command("reduced-degree")
@click.option("--step", type=int, default=1, show_default=True, help="grid stride over L_B and L_R")
@common
def reduced_degree(step, config_path, fmt, **flags):
    """Probability that the next symbol is redundant over an (L_B, L_R) grid."""
    cfg = _config(config_path, fmt, **flags)
    if step < 1:
        raise ConfigError("--step must be positive")
    dd = cfg.degree_dist()
    rows = []
    for beta in cfg.betas():
        lc = cfg.layer_config(beta)
        pz = analysis.kernels_for(lc, dd).pre.p_zero
        a, b = lc.sizes
        for lb in sorted(set(range(0, a + 1, step)) | {a}):
            for lr in sorted(set(range(0, b + 1, step)) | {b}):
                rows.append((beta, lb, lr, pz[lb, lr]))
    emit(cfg, ["beta", "L_B", "L_R", "p_zero"], rows)


def _feedback_modes(cfg: RunConfig, both: bool) -> list[bool]:
    return [False, True] if both else [bool(cfg.feedback)]


@main.command()
@click.option("--both", is_flag=True, help="with and without feedback")
@click.option("--converged", is_flag=True, help="run every chain to full recovery (montecarlo)")
@common
def redundancy(both, converged, config_path, fmt, **flags):
    """Expected count of reduced-degree-zero arrivals versus delta_max."""
    cfg = _config(config_path, fmt, **flags)
    dd = cfg.degree_dist()
    backend = cfg.backend_obj()
    if converged:
        if backend.is_exact:
            raise ConfigError("--converged needs the montecarlo backend")
        rows = []
        for beta in cfg.betas():
            lc = cfg.layer_config(beta)
            for fb in _feedback_modes(cfg, both):
                mean, se = analysis.converged_redundancy(lc, dd, fb, backend)
                rows.append((beta, int(fb), mean, se, backend.iterations))
        emit(cfg, ["beta", "feedback", "mean", "stderr", "runs"], rows)
        return
    rows = []
    for beta in cfg.betas():
        lc = cfg.layer_config(beta)
        for fb in _feedback_modes(cfg, both):
            c = analysis.analysis_curves(lc, dd, cfg.delta_max, fb, backend)
            for d in range(cfg.delta_max + 1):
                rows.append((beta, int(fb), d, c.redundancy[d], c.redundancy_se[d], c.iterations))
    emit(cfg, ["beta", "feedback", "x", "mean", "stderr", "runs"], rows)


@main.command()
@click.option("--traces", type=int, default=0, help="number of simulated (L_B, L_R) traces")
@click.option("--traces-out", type=click.Path(dir_okay=False), help="CSV for the traces")
@common
def visits(traces, traces_out, config_path, fmt, **flags):
    """Expected share of received symbols per terminal (L_B, L_R), no feedback."""
    cfg = _config(config_path, fmt, **flags)
    dd = cfg.degree_dist()
    backend = cfg.backend_obj()
    if cfg.delta_max < 1:
        raise ConfigError("delta_max must be >= 1 for a normalized heatmap")
    rows = []
    for beta in cfg.betas():
        lc = cfg.layer_config(beta)
        grid = analysis.analysis_curves(lc, dd, cfg.delta_max, False, backend).visits / cfg.delta_max
        a, b = lc.sizes
        rows.extend((beta, lb, lr, grid[lb, lr]) for lb in range(a + 1) for lr in range(b + 1))
    emit(cfg, ["beta", "L_B", "L_R", "value"], rows)
    if traces:
        if not traces_out:
            raise ConfigError("--traces needs --traces-out")
        lc = cfg.layer_configs()[0]
        stats = sim.run_trials(lc, dd, 20 * lc.k, False, traces, cfg.seed, keep_records=True)
        with open(traces_out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["run", "delta", "L_B", "L_R"])
            for run, rec in enumerate(stats.records):
                for d, (lb, lr) in enumerate(rec.trace):
                    w.writerow([run, d, int(lb), int(lr)])


@main.command()
@click.option("--source", type=click.Choice(["analysis", "sim"]), default="analysis", show_default=True)
@common
def urt(source, config_path, fmt, **flags):
    """Probability that the base layer is decoded after delta symbols."""
    cfg = _config(config_path, fmt, **flags)
    dd = cfg.degree_dist()
    rows = []
    for beta in cfg.betas():
        lc = cfg.layer_config(beta)
        if source == "sim":
            st = sim.run_trials(lc, dd, cfg.delta_max, False, cfg.runs, cfg.seed)
            p, n = st.base_decoded, cfg.runs
        else:
            backend = cfg.backend_obj()
            c = analysis.analysis_curves(lc, dd, cfg.delta_max, False, backend)
            p, n = c.base_decoded, c.iterations
        se = np.sqrt(p * (1 - p) / n) if n else np.zeros_like(p)
        rows.extend((beta, d, p[d], se[d], n) for d in range(cfg.delta_max + 1))
    emit(cfg, ["beta", "x", "mean", "stderr", "runs"], rows)


@main.command("distortion")
@click.option("--both/--single", default=True, show_default=True, help="with and without feedback")
@click.option("--source", type=click.Choice(["sim", "analysis"]), default="sim", show_default=True)
@common
def distortion_cmd(both, source, config_path, fmt, **flags):
    """Expected distortion of a layered unit-variance Gaussian source."""
    cfg = _config(config_path, fmt, **flags)
    dd = cfg.degree_dist()
    grid = sorted(set(cfg.grid)) if cfg.grid else list(range(cfg.delta_max + 1))
    rows = []
    for beta in cfg.betas():
        lc = cfg.layer_config(beta)
        for fb in _feedback_modes(cfg, both):
            if source == "sim":
                x, mean, se = sim.expected_distortion_curve(lc, dd, grid, fb, cfg.runs, cfg.seed)
                n = cfg.runs
            else:
                c = analysis.analysis_curves(lc, dd, max(grid), fb, cfg.backend_obj())
                x = np.asarray(grid)
                mean, se, n = c.distortion(lc.alpha[0])[x], np.zeros(len(x)), c.iterations
            rows.extend((beta, int(fb), int(xi), m, s, n) for xi, m, s in zip(x, mean, se))
    emit(cfg, ["beta", "feedback", "x", "mean", "stderr", "runs"], rows)


@main.command()
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--events-out", type=click.Path(dir_okay=False), help="JSON lines transcript of the first run")
@common
def roundtrip(input_path, events_out, config_path, fmt, **flags):
    """Encode and decode a file, reporting overhead and redundancy counters."""
    cfg = _config(config_path, fmt, **flags)
    flags_runs = flags.get("runs")
    runs = flags_runs if flags_runs is not None else 1
    data = Path(input_path).read_bytes()
    dd = cfg.degree_dist()
    lc = cfg.layer_configs()[0]
    rows = []
    for run, ss in enumerate(np.random.SeedSequence(cfg.seed).spawn(runs)):
        t = decode_roundtrip(lc, dd, data, bool(cfg.feedback), np.random.default_rng(ss))
        if run == 0 and events_out:
            Path(events_out).write_text(t.to_jsonl())
        ok = t.recovered == data
        rows.append(
            (run, lc.k, len(data), t.delta_base, t.feedback_delta, t.delta_full,
             t.delta_full / lc.k - 1.0, t.eps0, t.epsR, t.delta_full - lc.k, int(ok))
        )
    emit(
        cfg,
        ["run", "k", "bytes", "delta_base", "feedback_delta", "delta_full", "overhead", "eps0", "epsR", "redundant", "ok"],
        rows,
    )
    if not all(r[-1] for r in rows):
        raise click.ClickException("payload mismatch after decoding")


if __name__ == "__main__":  # pragma: no cover
    main()

"""Experiment harness: configuration, seeded campaigns, summaries, persistence.

Raw per-replication results go to CSV (fixed header, full float precision),
summaries to JSON with the complete configuration and a schema version
embedded, so every output file is self-describing.  Writes are atomic
(temp file + rename).  Replication seeds are keyed by (campaign seed,
replication index), which makes results independent of execution order and
degree of parallelism.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np
from scipy.stats import norm

from .cov import increment_covariance, path_rng, simulate_noise, simulate_ou
from .estimator import EstimateRecord, drift_mle, oracle_mle, regression_mle
from .grid import TimeGrid
from .kernel import projection_kernel
from .laplace import condition_diagnostics, montecarlo_laplace, riccati_laplace
from .spectral import bracket_slope_asymptotics
from .validation import check_hurst

SCHEMA_VERSION = 1
# the last two tag the one-shot path subcommands; campaigns use the first six
MODES = ("mle", "regression", "laplace", "spectral", "kernel-dump", "conditions",
         "simulate", "estimate")
RAW_HEADER = ("rep", "seed", "theta_hat", "q_energy")


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one experiment; echoed into every output file."""

    mode: str = "mle"
    h: float = 0.7
    theta: float = -1.0
    horizon: float = 50.0
    n: int = 4096
    reps: int = 500
    seed: int = 20260809
    x0: float = 0.0
    method: str = "canonical"          # estimator for mle campaigns
    mu_list: tuple = (0.0, 0.5, 1.0)   # laplace sweeps
    horizon_list: tuple = (25.0, 50.0, 100.0)  # laplace / bracket-slope sweeps
    mc_laplace: bool = False           # add a Monte Carlo column to laplace sweeps
    long_dt: float = 0.25              # grid spacing for long-horizon diagnostics
    psi_dt: float = 0.025              # grid spacing of the psi source for laplace
    jobs: int = 1
    out: str | None = None

    def validate(self) -> "ExperimentConfig":
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        check_hurst(self.h)
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.n < 4:
            raise ValueError("n must be at least 4")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")
        if not math.isfinite(self.x0):
            raise ValueError("x0 must be finite")
        if self.method not in ("canonical", "oracle"):
            raise ValueError(f"method must be canonical or oracle, got {self.method!r}")
        if self.mode in ("mle", "laplace") and not self.theta < 0:
            raise ValueError(f"mode {self.mode} asserts the stable limit law; theta must be < 0")
        if self.mode == "laplace":
            if len(self.mu_list) == 0 or len(self.horizon_list) == 0:
                raise ValueError("laplace sweep needs nonempty mu_list and horizon_list")
            if any(m < 0 for m in self.mu_list):
                raise ValueError("mu values must be nonnegative")
        if self.mode == "conditions" and len(self.horizon_list) == 0:
            raise ValueError("conditions sweep needs a nonempty horizon list")
        return self


def load_config_file(path) -> dict:
    """Parse a key = value configuration file (# comments allowed)."""
    known = {f.name: f.type for f in fields(ExperimentConfig)}
    out = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ValueError(f"{path}:{lineno}: unknown configuration key {key!r}")
        out[key] = _coerce(key, value)
    return out


def _coerce(key: str, value: str):
    if key in ("mu_list", "horizon_list"):
        return tuple(float(v) for v in value.split(",") if v.strip())
    if key in ("n", "reps", "seed", "jobs"):
        return int(value)
    if key in ("mode", "method", "out"):
        return value
    if key == "mc_laplace":
        return value.lower() in ("1", "true", "yes", "on")
    return float(value)


def make_config(file_values: dict | None = None, **overrides) -> ExperimentConfig:
    """Defaults < config file < explicit overrides (CLI)."""
    merged = dict(file_values or {})
    merged.update({k: v for k, v in overrides.items() if v is not None})
    cfg = ExperimentConfig(**merged)
    return cfg.validate()


# ---------------------------------------------------------------------------
# campaigns

@dataclass(frozen=True)
class CampaignSummary:
    config: ExperimentConfig
    reps: int
    theta_mean: float
    theta_variance: float
    standardized_mean: float        # mean of sqrt(T) (theta_hat - theta)
    standardized_variance: float
    sigma_target: float             # sqrt(2 |theta|)
    ks_statistic: float
    q_energy_mean: float | None
    elapsed_seconds: float


def _one_replication(cfg: ExperimentConfig, cov, ck, rep: int) -> EstimateRecord:
    rng = path_rng(cfg.seed, rep)
    v = simulate_noise(cov, rng)
    if cfg.mode == "regression":
        x = cfg.x0 + cfg.theta * cov.grid.times + v
        return regression_mle(ck, x, seed=rep)
    x = simulate_ou(v, cfg.theta, cov.grid, x0=cfg.x0)
    if cfg.method == "oracle":
        return oracle_mle(cov, x, seed=rep)
    return drift_mle(ck, x, seed=rep)


def run_campaign(cfg: ExperimentConfig) -> tuple[list[EstimateRecord], CampaignSummary]:
    """Run reps independent replications and summarize against the limit law."""
    cfg.validate()
    if cfg.mode not in ("mle", "regression"):
        raise ValueError(f"run_campaign handles mle/regression modes, got {cfg.mode!r}")
    start = time.perf_counter()
    cov = increment_covariance(TimeGrid(cfg.horizon, cfg.n), cfg.h)
    ck = projection_kernel(cov)
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            records = list(pool.map(lambda r: _one_replication(cfg, cov, ck, r), range(cfg.reps)))
    else:
        records = [_one_replication(cfg, cov, ck, rep) for rep in range(cfg.reps)]
    summary = summarize(cfg, records, elapsed=time.perf_counter() - start)
    if cfg.out is not None:
        write_campaign(cfg.out, records, summary)
    return records, summary


def summarize(cfg: ExperimentConfig, records, elapsed: float = 0.0) -> CampaignSummary:
    """Summary statistics; pure function of the raw table, so it can be recomputed."""
    theta_hats = np.array([r.theta_hat for r in records])
    standardized = np.sqrt(cfg.horizon) * (theta_hats - cfg.theta)
    sigma = math.sqrt(2.0 * abs(cfg.theta))
    q_vals = [r.q_energy for r in records if r.q_energy is not None]
    ddof = 1 if theta_hats.size > 1 else 0
    return CampaignSummary(
        config=cfg,
        reps=len(records),
        theta_mean=float(theta_hats.mean()),
        theta_variance=float(theta_hats.var(ddof=ddof)),
        standardized_mean=float(standardized.mean()),
        standardized_variance=float(standardized.var(ddof=ddof)),
        sigma_target=sigma,
        ks_statistic=ks_statistic(standardized, sigma),
        q_energy_mean=float(np.mean(q_vals)) if q_vals else None,
        elapsed_seconds=elapsed,
    )


def ks_statistic(sample, sigma: float) -> float:
    """Kolmogorov-Smirnov sup-distance between the sample and N(0, sigma^2)."""
    sample = np.asarray(sample, dtype=float)
    if sample.size == 0:
        raise ValueError("empty sample")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    xs = np.sort(sample)
    cdf = norm.cdf(xs / sigma)
    n = xs.size
    upper = np.max(np.arange(1, n + 1) / n - cdf)
    lower = np.max(cdf - np.arange(0, n) / n)
    return float(max(upper, lower))


# ---------------------------------------------------------------------------
# sweeps

def run_laplace_sweep(cfg: ExperimentConfig) -> list[dict]:
    """Riccati Laplace transform over mu_list x horizon_list, long format.

    psi(t, t) is sourced from one projection kernel on [0, max horizon] with
    spacing psi_dt.  With mc_laplace set, a Monte Carlo estimate at the
    campaign's (n, reps, seed) is attached to every row.
    """
    cfg = replace(cfg, mode="laplace").validate()
    t_max = max(cfg.horizon_list)
    n_long = int(np.ceil(t_max / cfg.psi_dt))
    ck = projection_kernel(increment_covariance(TimeGrid(t_max, n_long), cfg.h))
    rows = []
    for mu in cfg.mu_list:
        for horizon in cfg.horizon_list:
            report = riccati_laplace(mu, cfg.theta, ck, horizon)
            row = {
                "mu": mu,
                "horizon": horizon,
                "l_riccati": report.l_numeric,
                "l_limit": report.l_limit,
                "l_mc": "",
                "mc_se": "",
            }
            if cfg.mc_laplace:
                mc = montecarlo_laplace(mu, cfg.theta, cfg.h, horizon, cfg.n, cfg.reps, cfg.seed)
                row["l_mc"] = mc.mean
                row["mc_se"] = mc.standard_error
            rows.append(row)
    return rows


def run_bracket_sweep(cfg: ExperimentConfig) -> tuple[list[dict], dict]:
    """Bracket slope across horizons on the long-horizon grid, plus its fit."""
    cfg.validate()
    t_max = max(cfg.horizon_list)
    n_long = int(np.ceil(t_max / cfg.long_dt))
    ck = projection_kernel(increment_covariance(TimeGrid(t_max, n_long), cfg.h))
    rows = []
    for horizon in cfg.horizon_list:
        k = int(round(horizon / ck.grid.dt))
        rows.append({
            "horizon": horizon,
            "bracket": ck.bracket[k],
            "bracket_slope": ck.bracket_slope[k],
        })
    fit = bracket_slope_asymptotics(ck, fit_range=(min(cfg.horizon_list), t_max))
    return rows, {"slope": fit.slope, "intercept": fit.intercept, "residual": fit.residual}


def run_conditions(cfg: ExperimentConfig, t_max: float = 200.0) -> list[dict]:
    """Sufficient-condition diagnostics on the coarse long-horizon grid."""
    cfg.validate()
    n_long = int(np.ceil(t_max / cfg.long_dt))
    ck = projection_kernel(increment_covariance(TimeGrid(t_max, n_long), cfg.h))
    diag = condition_diagnostics(ck)
    return [
        {
            "t": t,
            "integrand": integ,
            "partial_integral": part,
            "growth_ratio": ratio,
        }
        for t, integ, part, ratio in zip(
            diag.times, diag.integrand, diag.partial_integral, diag.growth_ratio
        )
    ]


# ---------------------------------------------------------------------------
# persistence

def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise OSError(f"failed to write {path}: {exc}") from exc


def format_csv(header, rows) -> str:
    """Locale-independent CSV: comma separated, '.' decimal, repr precision."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(row[key]) for key in header))
    return "\n".join(lines) + "\n"


def _cell(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, float):
        return repr(float(value))  # builtin float repr, also for numpy scalars
    return str(value)


def write_campaign(out_dir, records, summary: CampaignSummary) -> None:
    """Raw table to campaign.csv, statistics + config to summary.json."""
    out = Path(out_dir)
    rows = [
        {"rep": r.seed, "seed": summary.config.seed, "theta_hat": r.theta_hat,
         "q_energy": r.q_energy}
        for r in records
    ]
    _atomic_write(out / "campaign.csv", format_csv(RAW_HEADER, rows))
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": asdict(summary.config),
        "summary": {
            k: v for k, v in asdict(summary).items() if k != "config"
        },
    }
    _atomic_write(out / "summary.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_campaign(out_dir) -> tuple[ExperimentConfig, list[EstimateRecord], CampaignSummary]:
    """Round-trip reader: parse raw CSV + summary JSON back into objects."""
    out = Path(out_dir)
    payload = json.loads((out / "summary.json").read_text())
    if payload.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {payload.get('schema_version')}")
    raw_cfg = payload["config"]
    raw_cfg["mu_list"] = tuple(raw_cfg["mu_list"])
    raw_cfg["horizon_list"] = tuple(raw_cfg["horizon_list"])
    cfg = ExperimentConfig(**raw_cfg)
    lines = (out / "campaign.csv").read_text().strip().splitlines()
    if lines[0] != ",".join(RAW_HEADER):
        raise ValueError(f"unexpected campaign.csv header: {lines[0]!r}")
    records = []
    for line in lines[1:]:
        rep, _seed, theta_hat, q_energy = line.split(",")
        records.append(EstimateRecord(
            theta_hat=float(theta_hat),
            q_energy=float(q_energy) if q_energy else None,
            method=cfg.method if cfg.mode == "mle" else "regression",
            h=cfg.h,
            horizon=cfg.horizon,
            n=cfg.n,
            seed=int(rep),
        ))
    summary = payload["summary"]
    stored = CampaignSummary(config=cfg, **summary)
    return cfg, records, stored

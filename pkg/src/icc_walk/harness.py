"""Experiment configuration, the end-to-end pipeline and report emission."""
from __future__ import annotations

import csv
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import __version__
from .construction import build, event_tv_bound, full_measure, verify_claim
from .errors import UsageError, WalkError
from .groups import FreeAbelian, group_from_descriptor
from .heavytail import HeavyTailDist, EventParams, calibrate_KN, e_mass
from .kernels import BACKEND
from .measure import lazy_step, measure_entropy, tv_profile

REPORT_SCHEMA = "icc-walk/report"
REPORT_VERSION = 1
# keys whose values depend on the clock; everything else is reproducible
TIMING_KEYS = frozenset({"timings", "wall_ms", "seconds", "build_seconds"})


@dataclass
class ExperimentConfig:
    group: str = "lamplighter"
    h: object = None
    eps: float = 0.05
    mode: str = "certificate"
    step: str = "constructed"  # or "lazy" for the uniform step on {e} and generators
    N: int = 1
    K: int = 1
    n_max: int = 8
    claim_n_max: int = 8192
    claim_m: int = 64
    claim_pairs: int = 10_000
    m_list: list = field(default_factory=lambda: [64, 128, 256])
    calib_samples: int = 100_000
    omega_samples: int = 100_000
    profile_m_max: int = 5
    profile_ms: list | None = None
    prune: float = 1e-12
    renormalize: bool = True
    seed: int = 0
    out: str | None = None
    fmt: str = "json"

    def validate(self):
        if not 0 < self.eps < 0.125:
            raise UsageError("eps must lie in (0, 1/8)")
        for name in ("n_max", "claim_n_max", "claim_m", "claim_pairs", "calib_samples",
                     "omega_samples", "profile_m_max", "N", "K"):
            if getattr(self, name) < 1:
                raise UsageError(f"{name} must be >= 1")
        if self.seed is None:
            raise UsageError("a seed is required")
        if self.step not in ("constructed", "lazy"):
            raise UsageError("step must be 'constructed' or 'lazy'")
        if self.fmt not in ("json", "csv-bundle"):
            raise UsageError("fmt must be 'json' or 'csv-bundle'")
        return self

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise UsageError(f"unknown config keys: {sorted(extra)}")
        return cls(**d).validate()

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)


def _dist() -> HeavyTailDist:
    return HeavyTailDist(int(os.environ.get("ICC_WALK_CACHE_DEPTH", 1 << 20)))


def _h_for(group, cfg: ExperimentConfig):
    if cfg.h is None:
        return None
    return group.from_json(cfg.h)


def run_pipeline(cfg: ExperimentConfig) -> dict:
    """calibrate -> build -> full measure -> claim -> event bound -> tv profile.

    A failing stage stops the run; the report keeps every finished stage and
    names the failed one.
    """
    cfg.validate()
    report = {
        "schema": REPORT_SCHEMA,
        "version": REPORT_VERSION,
        "software": {"icc_walk": __version__, "backend": BACKEND,
                     "python": ".".join(map(str, sys.version_info[:3]))},
        "config": cfg.to_dict(),
        "status": "ok",
        "stages": {},
        "timings": {},
    }
    group = group_from_descriptor(cfg.group)
    dist = _dist()
    icc = group.icc and cfg.step == "constructed"

    def stage(name, fn):
        t0 = time.perf_counter()
        try:
            report["stages"][name] = fn()
        finally:
            report["timings"][name] = round(time.perf_counter() - t0, 3)

    try:
        if icc:
            stage("calibration", lambda: _calibration(cfg, dist))
            stage("construction", lambda: _construction(cfg, group, dist))
            stage("claim", lambda: _claim(cfg, group, dist))
            stage("event_bound", lambda: _event_bound(cfg, report["stages"]["calibration"], dist))
        stage("tv_profile", lambda: _profile(cfg, group, dist))
    except WalkError as exc:
        report["status"] = "failed"
        failed = next(k for k in ("calibration", "construction", "claim", "event_bound", "tv_profile")
                      if k not in report["stages"])
        report["failure"] = {"stage": failed, "error": f"{type(exc).__name__}: {exc}",
                             "exit_code": exc.exit_code}
    return report


def _calibration(cfg, dist):
    rows = []
    for i, m in enumerate(cfg.m_list):
        cal = calibrate_KN(dist, cfg.eps, m, cfg.calib_samples, seed=cfg.seed + i)
        hold, se = e_mass(dist, cal.params(), cfg.calib_samples, seed=cfg.seed + 1000 + i)
        rows.append({"m": m, "K": cal.K, "N": cal.N, "mass": cal.mass, "ci": list(cal.ci),
                     "sigma": cal.sigma, "holdout_mass": hold, "holdout_se": se,
                     "failures": cal.failures, "sweep": cal.sweep})
    return rows


def _construction(cfg, group, dist):
    st = build(group, _h_for(group, cfg), cfg.eps, cfg.n_max, cfg.mode, cfg.N, cfg.K)
    mu = full_measure(st, dist=dist)
    h_p = dist.entropy(1e-6)
    out = st.summary()
    out.update({
        "support_size": mu.support_size,
        "stored_mass": mu.total,
        "deficit": mu.lost,
        "symmetric": mu.is_symmetric(),
        "entropy": measure_entropy(mu),
        "entropy_p": h_p,
        "entropy_bound": h_p + 1.3862943611198906,
    })
    return out


def _claim(cfg, group, dist):
    st = build(group, _h_for(group, cfg), cfg.eps, cfg.claim_n_max, "certificate"
               if cfg.mode != "control" else "control", cfg.N, cfg.K)
    res = verify_claim(st, cfg.claim_m, cfg.claim_pairs, cfg.seed, dist=dist)
    out = res.to_dict()
    out["n_max"] = cfg.claim_n_max
    out["truncation_mass_per_coordinate"] = dist.truncated_mass(cfg.claim_n_max)
    return out


def _event_bound(cfg, calibration, dist):
    rows = []
    for i, cal in enumerate(calibration):
        params = EventParams(cfg.eps, cal["K"], cal["N"], cal["m"])
        b = event_tv_bound(params, cfg.omega_samples, cfg.seed + 2000 + i, dist=dist)
        row = b.to_dict()
        row["target"] = 2 - 8 * cfg.eps
        row["m"] = cal["m"]
        rows.append(row)
    return rows


def _profile(cfg, group, dist):
    if cfg.step == "lazy":
        mu = lazy_step(group)
        deficit = 0.0
        h = _h_for(group, cfg) or group.generators()[0]
        if isinstance(group, FreeAbelian):
            h = group.element(*([1] + [0] * (group.d - 1))) if cfg.h is None else h
        label = "lazy"
    else:
        st = build(group, _h_for(group, cfg), cfg.eps, cfg.n_max, cfg.mode, cfg.N, cfg.K)
        mu = full_measure(st, dist=dist)
        deficit = mu.lost
        if cfg.renormalize:
            mu = mu.renormalize()
        h = st.h
        label = "constructed (renormalized)" if cfg.renormalize else "constructed"
    prof = tv_profile(mu, h, cfg.profile_m_max, cfg.prune, ms=cfg.profile_ms)
    return {
        "measure": label,
        "h": group.to_json(h),
        "prune": cfg.prune,
        "truncation_deficit": deficit,
        "rows": prof.rows,
        "reached": prof.reached,
        "overflow": prof.overflow,
        "violations": prof.violations(use_error=True),
    }


def strip_timing(obj):
    """Copy of a report without clock-dependent fields."""
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k not in TIMING_KEYS}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def report_schema() -> dict:
    path = Path(__file__).with_name("schemas") / "report.schema.json"
    with open(path) as fh:
        return json.load(fh)


def emit_report(report: dict, out, fmt: str = "json") -> list[Path]:
    """Write ``report.json`` and, for ``csv-bundle``, the profile and calibration tables."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "report.json"]
    with open(written[0], "w") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
    if fmt == "csv-bundle":
        prof = report["stages"].get("tv_profile")
        if prof:
            written.append(out / "profile.csv")
            write_profile_csv(prof["rows"], written[-1])
        cal = report["stages"].get("calibration")
        if cal:
            written.append(out / "calibration.csv")
            with open(written[-1], "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["m", "K", "N", "mass"])
                for row in cal:
                    for sw in row["sweep"]:
                        w.writerow([row["m"], sw["K"], sw["N"], sw["mass"]])
    elif fmt != "json":
        raise UsageError("fmt must be 'json' or 'csv-bundle'")
    return written


def write_profile_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["m", "tv", "error", "support_size", "wall_ms"])
        w.writeheader()
        for r in rows:
            w.writerow(r)

"""Command line entry point: ``icc-walk <subcommand> ...``.

Exit codes: 0 success, 2 a verified property failed, 3 resource overflow,
4 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import harness
from .construction import build, event_tv_bound, full_measure, load_state, omega_mass, save_state, verify_claim
from .errors import UsageError, WalkError
from .groups import FreeAbelian, group_from_descriptor
from .heavytail import HeavyTailDist, EventParams, calibrate_KN, e_mass, record_event_rates
from .measure import lazy_step, tv_profile

EXIT_OK, EXIT_VERIFY, EXIT_OVERFLOW, EXIT_USAGE = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _dump(obj, out):
    text = json.dumps(obj, indent=1, sort_keys=True, default=str)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _parse_element(group, text):
    if text is None:
        return None
    obj = json.loads(text)
    if isinstance(obj, int):
        obj = [obj]
    return group.from_json(obj)


def cmd_heavytail_verify(a) -> int:
    dist = HeavyTailDist()
    cal = calibrate_KN(dist, a.eps, a.m, a.samples, seed=a.seed)
    hold, se = e_mass(dist, cal.params(), a.samples, seed=a.seed + 1)
    rates = record_event_rates(dist, [k * k for k in range(2, 9)], a.samples, seed=a.seed + 2)
    bad_rates = [r["k"] for r in rates if r["freq_A"] > r["bound_A"] + 3 * r["sigma_A"]]
    ok = hold >= 1 - a.eps - 3 * se and not bad_rates
    _dump({
        "c": dist.c, "c_enclosure": list(dist.c_enclosure),
        "calibration": {"eps": a.eps, "m": a.m, "K": cal.K, "N": cal.N, "mass": cal.mass,
                        "ci": list(cal.ci), "failures": cal.failures, "sweep": cal.sweep},
        "holdout": {"mass": hold, "se": se, "seed": a.seed + 1},
        "record_rates": rates, "rate_violations": bad_rates, "ok": ok,
    }, a.out)
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_construct(a) -> int:
    group = group_from_descriptor(a.group)
    st = build(group, _parse_element(group, a.h), a.eps, a.nmax, a.mode, a.N, a.K)
    if a.out:
        save_state(st, a.out, full=True if a.full else None)
    print(json.dumps(st.summary(), sort_keys=True))
    summary = st.summary()
    return EXIT_OK if summary["certificates_valid"] == summary["certificates"] else EXIT_VERIFY


def cmd_claim_check(a) -> int:
    st = load_state(a.state)
    h = st.group.identity if a.identity_h else None
    res = verify_claim(st, a.m, a.pairs, a.seed, h=h, same_pairs=a.same_pairs)
    _dump(res.to_dict(), a.out)
    if a.identity_h:
        return EXIT_OK
    return EXIT_OK if res.violations == 0 and res.cross_collisions == 0 else EXIT_VERIFY


def cmd_omega_mass(a) -> int:
    st = load_state(a.state)
    K = a.K if a.K is not None else st.K
    N = a.N if a.N is not None else st.N
    params = EventParams(st.eps, K, N, a.m)
    om = omega_mass(params, a.samples, a.seed, st.n_max if a.truncated else None)
    b = event_tv_bound(params, a.samples, a.seed, st.n_max if a.truncated else None)
    out = om.to_dict()
    out["tv_bound"] = b.to_dict()
    _dump(out, a.out)
    return EXIT_OK


def cmd_tv_profile(a) -> int:
    st = load_state(a.state)
    mu = full_measure(st, renormalize=a.renormalize)
    prof = tv_profile(mu, st.h, a.mmax, a.prune)
    return _finish_profile(prof, a)


def cmd_control(a) -> int:
    group = group_from_descriptor(a.group)
    if a.step != "lazy":
        raise UsageError("only the lazy step is available")
    h = _parse_element(group, a.h)
    if h is None:
        h = group.element(*([1] + [0] * (group.d - 1))) if isinstance(group, FreeAbelian) else group.generators()[0]
    ms = [int(x) for x in a.ms.split(",")] if a.ms else None
    prof = tv_profile(lazy_step(group), h, a.mmax, a.prune, ms=ms)
    return _finish_profile(prof, a)


def _finish_profile(prof, a) -> int:
    if a.out:
        harness.write_profile_csv(prof.rows, a.out)
    else:
        for r in prof.rows:
            print(f"{r['m']},{r['tv']!r},{r['error']!r},{r['support_size']},{r['wall_ms']:.1f}")
    if prof.overflow:
        print(f"overflow: {prof.overflow}; reached m={prof.reached}", file=sys.stderr)
        return EXIT_OVERFLOW
    if prof.violations(use_error=True):
        print(f"monotonicity violated at m={prof.violations(use_error=True)}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_pipeline(a) -> int:
    cfg = harness.ExperimentConfig.load(a.config) if a.config else harness.ExperimentConfig()
    for key in ("seed", "out", "fmt"):
        val = getattr(a, key)
        if val is not None:
            setattr(cfg, key, val)
    report = harness.run_pipeline(cfg)
    if cfg.out:
        for p in harness.emit_report(report, cfg.out, cfg.fmt):
            print(p)
    else:
        _dump(report, None)
    if report["status"] != "ok":
        return report["failure"]["exit_code"]
    return EXIT_OK if _pipeline_ok(report) else EXIT_VERIFY


def _pipeline_ok(report) -> bool:
    st = report["stages"]
    claim = st.get("claim")
    if claim and (claim["violations"] or claim["cross_collisions"]):
        return False
    prof = st.get("tv_profile")
    return not (prof and prof["violations"])


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="icc-walk", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ht = sub.add_parser("heavytail", help="heavy-tailed law p(n) = c n^(-5/4)")
    ht_sub = ht.add_subparsers(dest="action", required=True, parser_class=_Parser)
    v = ht_sub.add_parser("verify", help="calibrate (K, N) and check the record-event rates")
    v.add_argument("--eps", type=float, default=0.1)
    v.add_argument("--m", type=int, default=1000)
    v.add_argument("--samples", type=int, default=100_000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out")
    v.set_defaults(func=cmd_heavytail_verify)

    c = sub.add_parser("construct", help="build a construction state")
    c.add_argument("--group", default="lamplighter")
    c.add_argument("--h", help="JSON element, default the lamp at the origin")
    c.add_argument("--eps", type=float, default=0.05)
    c.add_argument("--nmax", type=int, default=8)
    c.add_argument("--mode", choices=["certificate", "exact", "control"], default="certificate")
    c.add_argument("--N", type=int, default=1)
    c.add_argument("--K", type=int, default=1)
    c.add_argument("--seed", type=int, default=0, help="recorded only; the build is deterministic")
    c.add_argument("--full", action="store_true", help="store every step even for deep states")
    c.add_argument("--out")
    c.set_defaults(func=cmd_construct)

    cc = sub.add_parser("claim-check", help="sample pairs from Omega_eps and count h r(a) = r(b)")
    cc.add_argument("--state", required=True)
    cc.add_argument("--m", type=int, default=64)
    cc.add_argument("--pairs", type=int, default=10_000)
    cc.add_argument("--seed", type=int, default=0)
    cc.add_argument("--same-pairs", action="store_true", help="use beta = alpha")
    cc.add_argument("--identity-h", action="store_true", help="sanity inversion with h = e")
    cc.add_argument("--out")
    cc.set_defaults(func=cmd_claim_check)

    om = sub.add_parser("omega-mass", help="estimate eta(Omega_eps) and the TV bound 4 eta - 2")
    om.add_argument("--state", required=True)
    om.add_argument("--m", type=int, default=64)
    om.add_argument("--samples", type=int, default=100_000)
    om.add_argument("--seed", type=int, default=0)
    om.add_argument("--K", type=int)
    om.add_argument("--N", type=float)
    om.add_argument("--truncated", action="store_true")
    om.add_argument("--out")
    om.set_defaults(func=cmd_omega_mass)

    tp = sub.add_parser("tv-profile", help="||h mu^m - mu^m|| for m = 1..mmax")
    tp.add_argument("--state", required=True)
    tp.add_argument("--mmax", type=int, default=5)
    tp.add_argument("--prune", type=float, default=0.0)
    tp.add_argument("--renormalize", action="store_true")
    tp.add_argument("--out")
    tp.set_defaults(func=cmd_tv_profile)

    ct = sub.add_parser("control", help="TV profile of the lazy walk on a non-ICC group")
    ct.add_argument("--group", default="z")
    ct.add_argument("--step", default="lazy")
    ct.add_argument("--mmax", type=int, default=4096)
    ct.add_argument("--h")
    ct.add_argument("--ms", help="comma separated m values to report")
    ct.add_argument("--prune", type=float, default=0.0)
    ct.add_argument("--out")
    ct.set_defaults(func=cmd_control)

    pl = sub.add_parser("pipeline", help="run every stage from a JSON config")
    pl.add_argument("--config")
    pl.add_argument("--seed", type=int)
    pl.add_argument("--out")
    pl.add_argument("--format", dest="fmt", choices=["json", "csv-bundle"])
    pl.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except WalkError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""``hoskip`` command-line front end.

User-facing values are read in the units declared in the configuration
(``speed_unit``, ``c_unit``, ``slot_duration_sec``) and converted to the
internal km/slot and per-slot conventions before any computation.
"""

from __future__ import annotations

import argparse
import csv
import functools
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import analytic, simulate
from .model import (
    FixedAngle,
    MobilityModel,
    NetworkParams,
    Periodic,
    Scenario0,
    UniformAngle,
    UtilityParams,
    ValidationError,
    policy_from_string,
    speed_from_dict,
)
from .quadrature import QuadratureError, QuadratureSpec

EXIT_OK, EXIT_VALIDATION, EXIT_QUADRATURE, EXIT_GEOMETRY = 0, 2, 3, 4

SPEED_UNITS = ("km_per_slot", "km_per_sec")
C_UNITS = ("per_slot", "per_sec")
SPEED_KINDS = ("constant", "exponential", "erlang2", "hyperexp2")
TAU_MODES = ("exact", "exact_polar", "lower_bound", "interpolated")


def _env_seed() -> int:
    raw = os.environ.get("HOSKIP_SEED")
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(f"HOSKIP_SEED must be an integer (got {raw!r})") from None


# ---------------------------------------------------------------------------
# configuration document

_SECTIONS = {
    "network": {"lambda", "beta", "sigma2"},
    "mobility": {"speed", "direction"},
    "policy": None,
    "utility": {"c"},
    "analysis": {"tau_mode", "interp_a", "interp_b"},
    "quadrature": {"rel_tol", "abs_tol", "max_subdivisions", "tail_cut"},
    "simulation": {"replications", "horizon_m", "seed", "guard_radius", "interference_radius",
                   "window_half_side", "mobility_cycle", "phase", "compute_rate"},
    "units": {"speed_unit", "c_unit", "slot_duration_sec"},
}


def _check_keys(section: str, d, allowed):
    if not isinstance(d, dict):
        raise ValidationError(f"config section {section!r} must be an object")
    extra = sorted(set(d) - allowed)
    if extra:
        raise ValidationError(f"unknown key(s) in {section!r}: {', '.join(extra)}")


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs, in user-facing units."""

    network: NetworkParams = NetworkParams(1.0, 3.0, 0.0)
    speed_kind: str = "constant"
    speed_mean: float = 1e-5
    direction: dict = field(default_factory=lambda: {"kind": "uniform"})
    policy: str = "periodic:1000"
    c: float = 10.0
    tau_mode: str = "exact"
    interp_a: float = 10.0
    interp_b: float = 2.0
    quadrature: QuadratureSpec = QuadratureSpec()
    simulation: simulate.SimConfig = simulate.SimConfig()
    speed_unit: str = "km_per_slot"
    c_unit: str = "per_slot"
    slot_duration_sec: float = 1e-3

    def __post_init__(self):
        if self.speed_unit not in SPEED_UNITS:
            raise ValidationError(f"speed_unit must be one of {SPEED_UNITS}")
        if self.c_unit not in C_UNITS:
            raise ValidationError(f"c_unit must be one of {C_UNITS}")
        if self.tau_mode not in TAU_MODES:
            raise ValidationError(f"tau_mode must be one of {TAU_MODES}")
        self.utility_params()
        self.mobility()
        self.skipping_policy()
        self.mode()

    # conversions to internal units
    def speed_factor(self) -> float:
        """km/slot per user speed unit."""
        return self.slot_duration_sec if self.speed_unit == "km_per_sec" else 1.0

    def c_factor(self) -> float:
        """Per-slot c per user c unit.

        A per-second c weighs HOs per second, and HOs/sec = (HOs/slot) /
        slot_duration, so the per-slot constant is c / slot_duration.
        """
        return 1.0 / self.slot_duration_sec if self.c_unit == "per_sec" else 1.0

    def mobility(self, speed_mean: float | None = None, kind: str | None = None) -> MobilityModel:
        mean = self.speed_mean if speed_mean is None else speed_mean
        d = {"kind": kind or self.speed_kind, "mean": mean * self.speed_factor()}
        direction = self.direction
        _check_keys("mobility.direction", direction, {"kind", "psi"})
        if direction.get("kind") == "uniform":
            ang = UniformAngle()
        elif direction.get("kind") == "fixed":
            ang = FixedAngle(float(direction["psi"]))
        else:
            raise ValidationError("direction kind must be 'uniform' or 'fixed'")
        return MobilityModel(speed_from_dict(d), ang)

    def utility_params(self) -> UtilityParams:
        return UtilityParams(self.c * self.c_factor(), self.slot_duration_sec)

    def skipping_policy(self):
        return policy_from_string(self.policy)

    def mode(self):
        if self.tau_mode == "interpolated":
            return analytic.Interpolated(self.interp_a, self.interp_b)
        return analytic.mode_from_string(self.tau_mode)

    # serialization
    def to_dict(self) -> dict:
        sim = self.simulation.as_dict()
        return {
            "network": self.network.as_dict(),
            "mobility": {"speed": {"kind": self.speed_kind, "mean": self.speed_mean},
                         "direction": dict(self.direction)},
            "policy": self.policy,
            "utility": {"c": self.c},
            "analysis": {"tau_mode": self.tau_mode, "interp_a": self.interp_a,
                         "interp_b": self.interp_b},
            "quadrature": self.quadrature.as_dict(),
            "simulation": sim,
            "units": {"speed_unit": self.speed_unit, "c_unit": self.c_unit,
                      "slot_duration_sec": self.slot_duration_sec},
        }

    @classmethod
    def from_dict(cls, d: dict, base: "RunConfig | None" = None) -> "RunConfig":
        base = base or cls()
        _check_keys("config", d, set(_SECTIONS))
        kw = {}
        if "network" in d:
            n = d["network"]
            _check_keys("network", n, _SECTIONS["network"])
            cur = base.network
            kw["network"] = NetworkParams(float(n.get("lambda", cur.lam)),
                                          float(n.get("beta", cur.beta)),
                                          float(n.get("sigma2", cur.sigma2)))
        if "mobility" in d:
            mo = d["mobility"]
            _check_keys("mobility", mo, _SECTIONS["mobility"])
            if "speed" in mo:
                _check_keys("mobility.speed", mo["speed"], {"kind", "mean"})
                kw["speed_kind"] = mo["speed"].get("kind", base.speed_kind)
                kw["speed_mean"] = float(mo["speed"].get("mean", base.speed_mean))
            if "direction" in mo:
                kw["direction"] = dict(mo["direction"])
        if "policy" in d:
            if not isinstance(d["policy"], str):
                raise ValidationError("policy must be a string such as 'periodic:4000'")
            kw["policy"] = d["policy"]
        if "utility" in d:
            _check_keys("utility", d["utility"], _SECTIONS["utility"])
            kw["c"] = float(d["utility"].get("c", base.c))
        if "analysis" in d:
            a = d["analysis"]
            _check_keys("analysis", a, _SECTIONS["analysis"])
            for key in ("tau_mode",):
                if key in a:
                    kw[key] = a[key]
            for key in ("interp_a", "interp_b"):
                if key in a:
                    kw[key] = float(a[key])
        if "quadrature" in d:
            q = d["quadrature"]
            _check_keys("quadrature", q, _SECTIONS["quadrature"])
            kw["quadrature"] = _quad_spec(replace(base.quadrature, **q))
        if "simulation" in d:
            s = d["simulation"]
            _check_keys("simulation", s, _SECTIONS["simulation"])
            kw["simulation"] = replace(base.simulation, **s)
        if "units" in d:
            u = d["units"]
            _check_keys("units", u, _SECTIONS["units"])
            for key in ("speed_unit", "c_unit"):
                if key in u:
                    kw[key] = u[key]
            if "slot_duration_sec" in u:
                kw["slot_duration_sec"] = float(u["slot_duration_sec"])
        return replace(base, **kw)


def _quad_spec(spec: QuadratureSpec) -> QuadratureSpec:
    try:
        return QuadratureSpec(spec.rel_tol, spec.abs_tol, spec.max_subdivisions, spec.tail_cut)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}") from None
    return RunConfig.from_dict(data, RunConfig(simulation=simulate.SimConfig(seed=_env_seed())))


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2) + "\n"


# ---------------------------------------------------------------------------
# argument parsing


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    g = p.add_argument_group("configuration")
    g.add_argument("--config", type=Path, help="RunConfig JSON file")
    g.add_argument("--lambda", dest="lam", type=float, help="BS intensity (per km^2)")
    g.add_argument("--beta", type=float, help="path-loss exponent (> 2)")
    g.add_argument("--sigma2", type=float, help="noise power (transmit power = 1)")
    g.add_argument("--speed-dist", choices=SPEED_KINDS, help="speed distribution family")
    g.add_argument("--vbar", type=float, help="mean speed in --speed-unit")
    g.add_argument("--speed-unit", choices=SPEED_UNITS)
    g.add_argument("--c", type=float, help="utility constant in --c-unit")
    g.add_argument("--c-unit", choices=C_UNITS)
    g.add_argument("--slot-duration", type=float, help="seconds per slot")
    g.add_argument("--policy", help="scenario0, alternate or periodic:<s>")
    g.add_argument("--mode", choices=TAU_MODES, help="tau evaluation mode")
    g.add_argument("--interp-a", type=float)
    g.add_argument("--interp-b", type=float)
    g.add_argument("--rel-tol", type=float)
    g.add_argument("--abs-tol", type=float)
    g.add_argument("--max-subdivisions", type=int)
    g.add_argument("--tail-cut", type=float)
    g.add_argument("--reps", type=int, help="simulation replications")
    g.add_argument("--horizon", type=int, help="slots per replication")
    g.add_argument("--seed", type=int, help="master seed (default $HOSKIP_SEED or 0)")
    g.add_argument("--phase", choices=("stationary", "aligned"))
    g.add_argument("--interference-radius", type=float, help="km")
    g.add_argument("--guard-radius", type=float, help="km")
    g.add_argument("--threads", type=int, help="worker threads (default $HOSKIP_THREADS or 1)")
    o = p.add_argument_group("output")
    o.add_argument("--out", type=Path, help="write output here instead of stdout")
    o.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="hoskip", allow_abbrev=False,
        description="Rates, handover rates and utility of periodic handover skipping.")
    sub = parser.add_subparsers(dest="command", required=True)
    add = functools.partial(sub.add_parser, parents=[common], allow_abbrev=False)

    add("t0", help="rate when always served by the nearest BS")
    p = add("tau", help="rate at distance u from the cycle start")
    p.add_argument("--u", type=float, required=True, help="km")
    for name, text in (("t1", "rate under periodic skipping"),
                       ("h1", "HO rate under periodic skipping")):
        p = add(name, help=text)
        p.add_argument("--s", type=int, help="skipping period (slots); default from --policy")
    add("h0", help="HO rate without skipping")
    p = add("utility", help="T - c H with and without skipping")
    p.add_argument("--s", type=int, help="skipping period (slots); default from --policy")
    add("sopt", help="closed-form approximate optimal period")
    p = add("sopt-numeric", help="argmax of the lower-bound utility over s")
    p.add_argument("--s-lo", type=float, default=1.0)
    p.add_argument("--s-hi", type=float, default=1e4)
    p.add_argument("--relaxation", choices=("continuous", "discrete"), default="continuous")

    p = add("sweep", help="tabulate metrics along one axis (CSV)")
    p.add_argument("--axis", choices=("s", "vbar", "lambda", "beta", "c"), required=True)
    p.add_argument("--range", dest="range_spec", required=True,
                   help="lo:hi:step or lo:hi:count@log")
    p.add_argument("--speed-dists", help="comma list of speed families for T1/H1/U1 columns")
    p.add_argument("--simulate", action="store_true", help="add simulated columns")

    p = add("simulate", help="Monte Carlo estimate vs analytic")
    p.add_argument("--trace-dir", type=Path, help="write one trace CSV per replication")

    p = add("compare", help="simulate several policies (CSV)")
    p.add_argument("--policies", required=True, help="comma list, e.g. scenario0,periodic:4000")

    add("dump-config", help="print the effective RunConfig")
    return parser


def config_from_args(args) -> RunConfig:
    base = RunConfig(simulation=simulate.SimConfig(seed=_env_seed()))
    cfg = load_config(args.config) if args.config else base
    net = cfg.network
    if args.lam is not None or args.beta is not None or args.sigma2 is not None:
        net = NetworkParams(args.lam if args.lam is not None else net.lam,
                            args.beta if args.beta is not None else net.beta,
                            args.sigma2 if args.sigma2 is not None else net.sigma2)
    quad = cfg.quadrature
    qkw = {k: v for k, v in (("rel_tol", args.rel_tol), ("abs_tol", args.abs_tol),
                             ("max_subdivisions", args.max_subdivisions),
                             ("tail_cut", args.tail_cut)) if v is not None}
    if qkw:
        quad = _quad_spec(replace(quad, **qkw))
    skw = {k: v for k, v in (("replications", args.reps), ("horizon_m", args.horizon),
                             ("seed", args.seed), ("phase", args.phase),
                             ("interference_radius", args.interference_radius),
                             ("guard_radius", args.guard_radius),
                             ("threads", args.threads)) if v is not None}
    sim = replace(cfg.simulation, **skw) if skw else cfg.simulation
    kw = {k: v for k, v in (("speed_kind", args.speed_dist), ("speed_mean", args.vbar),
                            ("speed_unit", args.speed_unit), ("c", args.c),
                            ("c_unit", args.c_unit), ("slot_duration_sec", args.slot_duration),
                            ("policy", args.policy), ("tau_mode", args.mode),
                            ("interp_a", args.interp_a), ("interp_b", args.interp_b))
          if v is not None}
    return replace(cfg, network=net, quadrature=quad, simulation=sim, **kw)


# ---------------------------------------------------------------------------
# output helpers


def _emit(text: str, args):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_number(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _document(args, cfg: RunConfig, body: dict) -> str:
    doc = dict(body)
    doc["params"] = cfg.to_dict()
    if not args.no_timestamp:
        doc["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _units(cfg: RunConfig) -> dict:
    return {"speed": "km/slot", "input_speed": cfg.speed_unit.replace("_per_", "/"),
            "slot_duration_sec": cfg.slot_duration_sec}


def _period(args, cfg: RunConfig) -> int:
    if getattr(args, "s", None) is not None:
        return Periodic(args.s).s
    pol = cfg.skipping_policy()
    if isinstance(pol, Periodic):
        return pol.s
    raise ValidationError("this command needs --s or a periodic policy")


def _metric(args, cfg, name, res, units, extra=None):
    body = {"metric": name, "value": _json_number(res.value), "units": units,
            "quadrature_err": _json_number(res.err_est)}
    if extra:
        body.update(extra)
    _emit(_document(args, cfg, body), args)


# ---------------------------------------------------------------------------
# commands


def cmd_t0(args, cfg):
    res = analytic.t0(cfg.network, cfg.quadrature, full_output=True)
    _metric(args, cfg, "t0", res, {"value": "nats/slot"})


def cmd_tau(args, cfg):
    res = analytic.tau(args.u, cfg.network, cfg.mode(), cfg.quadrature, full_output=True)
    _metric(args, cfg, "tau", res, {"value": "nats/slot", "u": "km"},
            {"u": args.u, "mode": cfg.tau_mode})


def cmd_t1(args, cfg):
    s = _period(args, cfg)
    res = analytic.t1(s, cfg.network, cfg.mobility(), cfg.mode(), cfg.quadrature, full_output=True)
    _metric(args, cfg, "t1", res, {"value": "nats/slot", "s": "slots"},
            {"s": s, "mode": cfg.tau_mode})


def _per_sec(cfg, x):
    return x / cfg.slot_duration_sec


def cmd_h0(args, cfg):
    v = analytic.h0(cfg.network, cfg.mobility())
    body = {"metric": "h0", "value": v, "value_per_sec": _per_sec(cfg, v),
            "units": {"value": "HOs/slot", "value_per_sec": "HOs/sec"}, "quadrature_err": 0.0}
    _emit(_document(args, cfg, body), args)


def cmd_h1(args, cfg):
    s = _period(args, cfg)
    res = analytic.h1(s, cfg.network, cfg.mobility(), cfg.quadrature, full_output=True)
    _metric(args, cfg, "h1", res, {"value": "HOs/slot", "value_per_sec": "HOs/sec", "s": "slots"},
            {"value_per_sec": _per_sec(cfg, res.value), "s": s})


def cmd_utility(args, cfg):
    c = cfg.utility_params().c
    mob = cfg.mobility()
    t0 = analytic.t0(cfg.network, cfg.quadrature, full_output=True)
    h0 = analytic.h0(cfg.network, mob)
    body = {"metric": "utility", "c_per_slot": c,
            "u0": analytic.utility(t0.value, h0, c), "t0": t0.value, "h0": h0}
    err = t0.err_est
    if getattr(args, "s", None) is not None or isinstance(cfg.skipping_policy(), Periodic):
        s = _period(args, cfg)
        t1 = analytic.t1(s, cfg.network, mob, cfg.mode(), cfg.quadrature, full_output=True)
        h1 = analytic.h1(s, cfg.network, mob, cfg.quadrature, full_output=True)
        body.update({"s": s, "u1": analytic.utility(t1.value, h1.value, c),
                     "t1": t1.value, "h1": h1.value})
        err = max(err, t1.err_est + c * h1.err_est)
        body["value"] = body["u1"]
    else:
        body["value"] = body["u0"]
    body["units"] = {"value": "nats/slot", "u0": "nats/slot", "u1": "nats/slot",
                     "t0": "nats/slot", "t1": "nats/slot", "h0": "HOs/slot", "h1": "HOs/slot",
                     "c_per_slot": "nats*slot/HO", "s": "slots"}
    body["quadrature_err"] = err
    _emit(_document(args, cfg, body), args)


def cmd_sopt(args, cfg):
    c = cfg.utility_params().c
    res = analytic.sopt(cfg.network.beta, c, cfg.quadrature)
    body = {"metric": "sopt", "value": res.s_star, "nearest": res.nearest,
            "value_sec": res.s_star * cfg.slot_duration_sec, "c_per_slot": c,
            "units": {"value": "slots", "nearest": "slots", "value_sec": "sec",
                      "c_per_slot": "nats*slot/HO"},
            "quadrature_err": cfg.quadrature.rel_tol * res.s_star}
    _emit(_document(args, cfg, body), args)


def cmd_sopt_numeric(args, cfg):
    c = cfg.utility_params().c
    v = cfg.mobility().speed.mean
    res = analytic.sopt_numeric(cfg.network, v, c, (args.s_lo, args.s_hi),
                                relaxation=args.relaxation)
    closed = analytic.sopt(cfg.network.beta, c, cfg.quadrature)
    body = {"metric": "sopt_numeric", "value": res.s, "nearest": res.s_int,
            "relaxation": args.relaxation, "sopt": closed.s_star,
            "relative_gap": abs(res.s - closed.s_star) / closed.s_star,
            "units": {"value": "slots", "nearest": "slots", "sopt": "slots"}}
    _emit(_document(args, cfg, body), args)


def parse_range(spec: str) -> np.ndarray:
    """``lo:hi:step`` (inclusive, linear) or ``lo:hi:count@log`` (geometric)."""
    try:
        if spec.endswith("@log"):
            lo, hi, n = spec[:-4].split(":")
            lo, hi, n = float(lo), float(hi), int(n)
            if lo <= 0 or hi <= lo or n < 2:
                raise ValueError
            return np.geomspace(lo, hi, n)
        lo, hi, step = (float(x) for x in spec.split(":"))
        if hi < lo or step <= 0:
            raise ValueError
    except ValueError:
        raise ValidationError(f"bad range {spec!r}; use lo:hi:step or lo:hi:count@log") from None
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    # strip the binary noise of lo + k * step so axis values print cleanly
    return np.array([float(f"{lo + k * step:.12g}") for k in range(n)])


_AXIS_UNITS = {"s": "slots", "lambda": "per_km2", "beta": "1"}


def _axis_header(axis, cfg):
    if axis == "vbar":
        return f"vbar_{cfg.speed_unit}"
    if axis == "c":
        return f"c_{cfg.c_unit}"
    return f"{axis}_{_AXIS_UNITS[axis]}"


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def cmd_sweep(args, cfg):
    axis = args.axis
    values = parse_range(args.range_spec)
    dists = args.speed_dists.split(",") if args.speed_dists else [cfg.speed_kind]
    for d in dists:
        if d not in SPEED_KINDS:
            raise ValidationError(f"unknown speed distribution {d!r}")
    suffix = (lambda d: f"_{d}") if len(dists) > 1 else (lambda d: "")
    if axis == "s":
        values = np.unique(np.round(values).astype(int))
    noise_free_base = cfg.network.sigma2 == 0

    header = [_axis_header(axis, cfg), "T0_nats_per_slot", "H0_hos_per_slot", "U0_nats_per_slot"]
    for d in dists:
        sx = suffix(d)
        header += [f"T1{sx}_nats_per_slot", f"H1{sx}_hos_per_slot", f"U1{sx}_nats_per_slot"]
        if noise_free_base:
            header += [f"T1_lb{sx}_nats_per_slot", f"U1_lb{sx}_nats_per_slot"]
        if args.simulate:
            header += [f"T1_sim{sx}_nats_per_slot", f"T1_sim_se{sx}_nats_per_slot",
                       f"H1_sim{sx}_hos_per_slot", f"H1_sim_se{sx}_hos_per_slot"]
    if axis in ("beta", "c"):
        header += ["sopt_slots"]

    tables: dict = {}
    rows = []
    for x in values:
        c_cfg = cfg
        if axis == "vbar":
            c_cfg = replace(cfg, speed_mean=float(x))
        elif axis == "c":
            c_cfg = replace(cfg, c=float(x))
        elif axis == "lambda":
            c_cfg = replace(cfg, network=replace(cfg.network, lam=float(x)))
        elif axis == "beta":
            c_cfg = replace(cfg, network=replace(cfg.network, beta=float(x)))
        net = c_cfg.network
        s = int(x) if axis == "s" else _period(args, c_cfg)
        c = c_cfg.utility_params().c
        t0 = analytic.t0(net, cfg.quadrature)
        h0 = analytic.h0(net, c_cfg.mobility())
        row = [x if axis != "s" else int(x), t0, h0, analytic.utility(t0, h0, c)]
        for d in dists:
            mob = c_cfg.mobility(kind=d)
            modes = [c_cfg.mode()] + ([analytic.LowerBound()] if net.sigma2 == 0 else [])
            t_vals = []
            for mode in modes:
                u_max = (max(values) if axis == "s" else s) * analytic.speed_support_max(mob.speed)
                key = (net, mode)
                tab = tables.get(key)
                if tab is None or tab.u_max < u_max:
                    tab = analytic.TauTable(net, mode, u_max, cfg.quadrature)
                    tables[key] = tab
                t_vals.append(analytic.t1(s, net, mob, mode, cfg.quadrature, table=tab))
            h1 = analytic.h1(s, net, mob, cfg.quadrature)
            row += [t_vals[0], h1, analytic.utility(t_vals[0], h1, c)]
            if noise_free_base:
                row += [t_vals[1], analytic.utility(t_vals[1], h1, c)]
            if args.simulate:
                r, h = simulate.estimate(net, mob, Periodic(s), c_cfg.simulation)
                row += [r.mean, r.stderr, h.mean, h.stderr]
        if axis in ("beta", "c"):
            row.append(analytic.sopt(net.beta, c, cfg.quadrature).s_star)
        rows.append(row)

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    _emit(buf.getvalue(), args)


def _analytic_targets(cfg, policy, mob):
    net = cfg.network
    if isinstance(policy, Scenario0):
        return ("t0", analytic.t0(net, cfg.quadrature)), ("h0", analytic.h0(net, mob))
    if isinstance(policy, Periodic):
        return (("t1", analytic.t1(policy.s, net, mob, cfg.mode(), cfg.quadrature)),
                ("h1", analytic.h1(policy.s, net, mob, cfg.quadrature)))
    return (None, None), (None, None)


def _estimate_dict(est: simulate.MetricEstimate) -> dict:
    return {"mean": _json_number(est.mean), "stderr": _json_number(est.stderr), "n": est.n,
            "kind": est.kind, "provenance": est.provenance, "units": est.units}


def cmd_simulate(args, cfg):
    net, mob, policy = cfg.network, cfg.mobility(), cfg.skipping_policy()
    sim = cfg.simulation
    results = simulate.replicate(net, mob, policy, sim)
    rate, ho = simulate.summarize(results, sim)
    (t_name, t_val), (h_name, h_val) = _analytic_targets(cfg, policy, mob)
    body = {
        "command": "simulate",
        "policy": policy.label(),
        "rate": _estimate_dict(rate),
        "ho": _estimate_dict(ho),
        "analytic": {"rate_metric": t_name, "rate": _json_number(t_val),
                     "ho_metric": h_name, "ho": _json_number(h_val)},
        "z_score": {
            "rate": _json_number(rate.z_score(t_val)) if t_val is not None else None,
            "ho": _json_number(ho.z_score(h_val)) if h_val is not None else None,
        },
        "interference": {
            "radius_km": sim.resolved_radius(net),
            "far_field_mean_added": simulate.far_field_mean(net, sim.resolved_radius(net)),
        },
        "units": {"rate": "nats/slot", "ho": "HOs/slot", "radius_km": "km"},
    }
    if args.trace_dir:
        args.trace_dir.mkdir(parents=True, exist_ok=True)
        for i in range(sim.replications):
            tr = simulate.run_replication(net, mob, policy, sim, i, trace=True).trace
            simulate.write_trace(tr, args.trace_dir / f"rep_{i:06d}.csv")
    _emit(_document(args, cfg, body), args)


def cmd_compare(args, cfg):
    names = [p.strip() for p in args.policies.split(",") if p.strip()]
    if len(names) < 2:
        raise ValidationError("compare needs at least two policies")
    net, mob, sim = cfg.network, cfg.mobility(), cfg.simulation
    c = cfg.utility_params().c
    m = sim.horizon_m
    header = ["policy", "T_nats_per_slot", "T_se_nats_per_slot", "H_hos_per_slot",
              "H_se_hos_per_slot", "U_nats_per_slot", "U_se_nats_per_slot", "replications"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for name in names:
        policy = policy_from_string(name)
        results = simulate.replicate(net, mob, policy, sim)
        rates = [r.sum_rate / m for r in results]
        hos = [r.ho_count / m for r in results]
        t, t_se = simulate.mean_stderr(rates)
        h, h_se = simulate.mean_stderr(hos)
        u, u_se = simulate.mean_stderr([a - c * b for a, b in zip(rates, hos)])
        w.writerow([policy.label()] + [_fmt(v) for v in (t, t_se, h, h_se, u, u_se)]
                   + [len(results)])
    _emit(buf.getvalue(), args)


def cmd_dump_config(args, cfg):
    _emit(dump_config(cfg), args)


COMMANDS = {
    "t0": cmd_t0, "tau": cmd_tau, "t1": cmd_t1, "h0": cmd_h0, "h1": cmd_h1,
    "utility": cmd_utility, "sopt": cmd_sopt, "sopt-numeric": cmd_sopt_numeric,
    "sweep": cmd_sweep, "simulate": cmd_simulate, "compare": cmd_compare,
    "dump-config": cmd_dump_config,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        COMMANDS[args.command](args, cfg)
    except ValidationError as exc:
        print(f"hoskip: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except analytic.NoInteriorMaximum as exc:
        print(f"hoskip: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except QuadratureError as exc:
        print(f"hoskip: quadrature failed: {exc}", file=sys.stderr)
        return EXIT_QUADRATURE
    except simulate.WindowTooSmall as exc:
        print(f"hoskip: simulation geometry: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except (TypeError, ValueError) as exc:
        print(f"hoskip: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

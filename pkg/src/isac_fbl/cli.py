"""Command-line front end.

Every command writes a table (CSV, with ``# key: value`` metadata lines) or a
JSON document with ``meta``, ``header`` and ``rows``. Output depends only on
the configuration and seed; ``--workers`` changes speed, never bytes.

Exit codes: 0 success, 2 configuration error, 3 infeasible request.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Any, Sequence

import numpy as np

from . import __version__
from .bounds import optimize_delta, optimize_k, second_order_rate
from .channel import (
    ChannelError,
    InputDist,
    StateDMC,
    binary_channel,
    channel_from_dict,
    channel_to_dict,
    load_channel,
    moments_for,
)
from .estimator import d_min, d_trivial, expected_distortion
from .simulate import CodeParams, SizeCapError, run_experiment, threshold_for
from .tradeoff import (
    BinaryChannelSpec,
    TradeoffPoint,
    baseline_curves,
    binary_closed_forms,
    default_d_grid,
    max_rate,
    sweep,
)

EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3

# desk-scale limits for simulate
MAX_SIM_N = 4096
MAX_SIM_MSGS = 2**16


class ConfigError(Exception):
    def __init__(self, field: str, msg: str):
        super().__init__(f"{field}: {msg}")


class Infeasible(Exception):
    pass


def fmt(x: Any) -> Any:
    """Round floats to 9 significant digits; NaN becomes None."""
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return None
        return float(f"{x:.9g}")
    if isinstance(x, (list, tuple)):
        return [fmt(v) for v in x]
    if isinstance(x, dict):
        return {k: fmt(v) for k, v in x.items()}
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def _csv_cell(v: Any) -> str:
    v = fmt(v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.9g}"
    if isinstance(v, list):
        return ";".join(_csv_cell(x) for x in v)
    return str(v)


def render(doc: dict[str, Any], form: str) -> str:
    if form == "json":
        return json.dumps(fmt(doc), indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    meta = {**doc["meta"], **doc.get("header", {})}
    for k, v in meta.items():
        if isinstance(v, dict):
            v = json.dumps(fmt(v), sort_keys=True)
        buf.write(f"# {k}: {_csv_cell(v) if not isinstance(v, str) else v}\n")
    rows = doc["rows"]
    if rows:
        w = csv.writer(buf, lineterminator="\n")
        cols = list(rows[0])
        w.writerow(cols)
        for r in rows:
            w.writerow([_csv_cell(r[c]) for c in cols])
    return buf.getvalue()


# ---------------------------------------------------------------- parsing


def parse_grid(spec: str, field: str) -> np.ndarray:
    """``start:stop:count`` -> linearly spaced grid."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(field, f"expected start:stop:count, got {spec!r}")
    try:
        a, b, c = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(field, f"expected start:stop:count, got {spec!r}") from None
    if c < 1:
        raise ConfigError(field, "grid must contain at least one point")
    if b < a:
        raise ConfigError(field, "stop must not be below start")
    return np.linspace(a, b, c)


def parse_input(text: str, size: int, field: str = "--input") -> InputDist:
    try:
        p = np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ConfigError(field, f"expected comma-separated probabilities, got {text!r}") from None
    if p.size != size:
        raise ConfigError(field, f"needs {size} probabilities, got {p.size}")
    try:
        return InputDist(p)
    except ValueError as exc:
        raise ConfigError(field, str(exc)) from None


def _channel(args) -> tuple[StateDMC, dict[str, Any]]:
    if args.channel is not None and args.binary_q is not None:
        raise ConfigError("--channel/--binary-q", "give exactly one channel source")
    if args.channel is not None:
        try:
            dmc = load_channel(args.channel)
        except OSError as exc:
            raise ConfigError("--channel", str(exc)) from None
        except ChannelError as exc:
            raise ConfigError("--channel", str(exc)) from None
        return dmc, {"channel": channel_to_dict(dmc)}
    if args.binary_q is None:
        raise ConfigError("--channel/--binary-q", "a channel source is required")
    if not 0.0 < args.binary_q < 1.0:
        raise ConfigError("--binary-q", f"must lie in (0, 1), got {args.binary_q}")
    return binary_channel(args.binary_q), {"binary_q": args.binary_q}


def _check_eps(eps: float) -> None:
    if not 0.0 < eps < 1.0:
        raise ConfigError("--eps", f"must lie in (0, 1), got {eps}")


def _check_ns(ns: list[int]) -> None:
    for n in ns:
        if n < 1:
            raise ConfigError("--n", f"blocklength must be positive, got {n}")


def _meta(command: str, config: dict[str, Any]) -> dict[str, Any]:
    return {"command": command, "version": __version__, "config": config}


def _input_list(px: InputDist | None) -> list[float] | None:
    return None if px is None else px.probs.tolist()


def _point_row(p: TradeoffPoint) -> dict[str, Any]:
    return {
        "D": p.distortion_budget,
        "n": p.n,
        "rate_ach": p.rate_ach,
        "rate_conv": p.rate_conv,
        "rate_second_order": p.rate_second_order,
        "ach_feasible": p.ach_feasible,
        "conv_feasible": p.conv_feasible,
        "second_order_feasible": p.second_order_feasible,
        "k_coeff": p.k_coeff,
        "delta": p.delta,
        "input_ach": _input_list(p.best_input_ach),
        "input_conv": _input_list(p.best_input_conv),
    }


def _sweep_rows(dmc, ns, eps, grid, workers) -> list[dict[str, Any]]:
    rows = []
    for n in ns:
        rows += [_point_row(p) for p in sweep(dmc, n, eps, grid, workers=workers)]
    return rows


def _d_grid(args, dmc) -> tuple[np.ndarray, str]:
    if args.d_grid is None:
        return default_d_grid(dmc), "default"
    return parse_grid(args.d_grid, "--d-grid"), args.d_grid


# ---------------------------------------------------------------- commands


def cmd_bounds(args) -> dict[str, Any]:
    dmc, src = _channel(args)
    _check_eps(args.eps)
    ns = args.n or [700]
    _check_ns(ns)
    if args.alpha is not None:
        if dmc.x_size != 2:
            raise ConfigError("--alpha", "only valid for two-input channels")
        if not 0.0 <= args.alpha <= 1.0:
            raise ConfigError("--alpha", f"must lie in [0, 1], got {args.alpha}")
        px = InputDist.binary(args.alpha)
    elif args.input is not None:
        px = parse_input(args.input, dmc.x_size)
    else:
        px = InputDist.uniform(dmc.x_size)
    m = moments_for(dmc, px)
    rows = []
    for n in ns:
        a = optimize_k(m, n, args.eps)
        c = optimize_delta(m, n, args.eps)
        rows.append(
            {
                "n": n,
                "rate_ach": a.rate,
                "beta_u": a.beta,
                "k_coeff": a.params_used.k_coeff,
                "ach_feasible": a.feasible,
                "rate_conv": c.rate,
                "beta_l": c.beta,
                "delta": c.params_used.delta,
                "conv_feasible": c.feasible,
                "rate_second_order": second_order_rate(m, n, args.eps),
            }
        )
    if not any(r["ach_feasible"] or r["conv_feasible"] for r in rows):
        raise Infeasible("both bounds are infeasible at every requested blocklength")
    config = {**src, "eps": args.eps, "n": ns, "input": px.probs.tolist()}
    header = {
        "mutual_info": m.mutual_info,
        "var": m.var,
        "third_abs": m.third_abs,
        "distortion": expected_distortion(dmc, px),
    }
    return {"meta": _meta("bounds", config), "header": header, "rows": rows}


def cmd_sweep(args) -> dict[str, Any]:
    dmc, src = _channel(args)
    _check_eps(args.eps)
    ns = args.n or [700]
    _check_ns(ns)
    grid, grid_spec = _d_grid(args, dmc)
    rows = _sweep_rows(dmc, ns, args.eps, grid, args.workers)
    if not any(r["ach_feasible"] or r["conv_feasible"] for r in rows):
        raise Infeasible("no distortion budget in the grid admits a feasible bound")
    config = {**src, "eps": args.eps, "n": ns, "d_grid": grid_spec}
    header = {"d_min": d_min(dmc)[0], "d_trivial": d_trivial(dmc)}
    return {"meta": _meta("sweep", config), "header": header, "rows": rows}


def cmd_binary_example(args) -> dict[str, Any]:
    q = 0.4 if args.binary_q is None else args.binary_q
    if not 0.0 < q < 1.0:
        raise ConfigError("--binary-q", f"must lie in (0, 1), got {q}")
    _check_eps(args.eps)
    ns = args.n or [700, 3000, 10000]
    _check_ns(ns)
    dmc = binary_channel(q)
    grid, grid_spec = _d_grid(args, dmc)
    cf = binary_closed_forms(BinaryChannelSpec(q))
    header = {
        "capacity": cf.capacity,
        "alpha_star": cf.alpha_star,
        "d_comm": cf.d_comm,
        "d_min": d_min(dmc)[0],
        "d_trivial": d_trivial(dmc),
    }
    rows = _sweep_rows(dmc, ns, args.eps, grid, args.workers)
    cols = ("D", "n", "rate_ach", "rate_conv", "rate_second_order", "ach_feasible", "conv_feasible")
    rows = [{c: r[c] for c in cols} | {"alpha_ach": _alpha(r["input_ach"])} for r in rows]
    config = {"binary_q": q, "eps": args.eps, "n": ns, "d_grid": grid_spec}
    return {"meta": _meta("binary-example", config), "header": header, "rows": rows}


def _alpha(p: list[float] | None) -> float:
    return math.nan if p is None else p[1]


def cmd_baselines(args) -> dict[str, Any]:
    dmc, src = _channel(args)
    _check_eps(args.eps)
    ns = args.n or [700]
    if len(ns) != 1:
        raise ConfigError("--n", "baselines takes a single blocklength")
    _check_ns(ns)
    n = ns[0]
    gammas = parse_grid(args.gamma_grid, "--gamma-grid") if args.gamma_grid else np.linspace(0, 1, 11)
    if gammas.min() < 0 or gammas.max() > 1:
        raise ConfigError("--gamma-grid", "gamma must lie in [0, 1]")
    try:
        rs, pts = baseline_curves(dmc, n, args.eps, gammas)
    except ValueError as exc:
        raise Infeasible(str(exc)) from None
    rows = [
        {"gamma": p.gamma, "variant": p.variant, "rate": p.rate, "distortion": p.distortion, "feasible": True}
        for p in pts
    ]
    # joint scheme evaluated at each baseline distortion
    for p in pts:
        r = max_rate(dmc, n, args.eps, p.distortion, "ach")
        rows.append(
            {
                "gamma": p.gamma,
                "variant": f"joint@{p.variant}",
                "rate": max(r.rate, 0.0) if r.feasible else math.nan,
                "distortion": p.distortion,
                "feasible": r.feasible,
            }
        )
    header = {
        "r_max": rs.r_max,
        "d_comm": rs.d_comm,
        "r_sense": rs.r_sense,
        "d_min": rs.d_min,
        "d_trivial": rs.d_trivial,
    }
    config = {**src, "eps": args.eps, "n": n, "gamma_grid": args.gamma_grid or "0:1:11"}
    return {"meta": _meta("baselines", config), "header": header, "rows": rows}


def _simulate_config(args) -> dict[str, Any]:
    if args.config is not None:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("--config", str(exc)) from None
        cfg = doc.get("meta", {}).get("config", doc)
        if not isinstance(cfg, dict):
            raise ConfigError("--config", "no config object found")
        return cfg
    dmc, src = _channel(args)
    _check_eps(args.eps)
    ns = args.n or [100]
    if len(ns) != 1:
        raise ConfigError("--n", "simulate takes a single blocklength")
    n = ns[0]
    _check_ns(ns)
    if args.alpha is not None:
        if dmc.x_size != 2:
            raise ConfigError("--alpha", "only valid for two-input channels")
        if not 0.0 <= args.alpha <= 1.0:
            raise ConfigError("--alpha", f"must lie in [0, 1], got {args.alpha}")
        px = InputDist.binary(args.alpha)
    elif args.input is not None:
        px = parse_input(args.input, dmc.x_size)
    elif args.d is not None:
        r = max_rate(dmc, n, args.eps, args.d, "ach")
        if not r.feasible:
            raise Infeasible(f"no input meets distortion {args.d} with a feasible achievability bound")
        px = r.input_dist
    else:
        raise ConfigError("--alpha/--input/--d", "an input distribution is required")
    if (args.msg_count is None) == (args.rate is None):
        raise ConfigError("--msg-count/--rate", "give exactly one")
    if args.msg_count is not None:
        msgs = args.msg_count
    else:
        msgs = int(math.floor(2.0 ** (n * args.rate)))
    if msgs < 1:
        raise ConfigError("--msg-count", f"must be at least 1, got {msgs}")
    gamma = None
    if args.decoder == "threshold":
        if args.k is None:
            k = optimize_k(moments_for(dmc, px), n, args.eps).params_used.k_coeff
        else:
            k = args.k
        gamma = threshold_for(msgs, n, k)
    return {
        **src,
        "n": n,
        "eps": args.eps,
        "msg_count": msgs,
        "input": px.probs.tolist(),
        "trials": args.trials,
        "decoder": args.decoder,
        "threshold_gamma": gamma,
        "seed": args.seed,
        "fixed_codebook": bool(args.fixed_codebook),
        "engine": args.engine,
    }


def cmd_simulate(args) -> dict[str, Any]:
    cfg = _simulate_config(args)
    try:
        if "channel" in cfg:
            dmc = channel_from_dict(cfg["channel"])
        else:
            dmc = binary_channel(float(cfg["binary_q"]))
        n, msgs, trials = int(cfg["n"]), int(cfg["msg_count"]), int(cfg["trials"])
        px = InputDist(np.asarray(cfg["input"], dtype=float))
        seed = int(cfg["seed"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("config", f"invalid simulate config: {exc}") from None
    if n > MAX_SIM_N:
        raise ConfigError("--n", f"desk-scale limit is n <= {MAX_SIM_N}")
    if msgs > MAX_SIM_MSGS:
        raise ConfigError("--msg-count", f"desk-scale limit is M <= {MAX_SIM_MSGS}")
    if trials < 1:
        raise ConfigError("--trials", "must be at least 1")
    if px.size != dmc.x_size:
        raise ConfigError("--input", "size does not match the channel input alphabet")
    engine = cfg.get("engine", "explicit")
    fixed = bool(cfg.get("fixed_codebook", False))
    if engine == "types" and fixed:
        raise ConfigError("--engine", "the types engine cannot use a fixed codebook")
    try:
        params = CodeParams(n, msgs, px, threshold_gamma=cfg.get("threshold_gamma"), seed=seed)
        if engine == "explicit":
            params.check_size()
    except (SizeCapError, ValueError) as exc:
        raise ConfigError("config", str(exc)) from None
    try:
        report = run_experiment(
            dmc, params, trials, decoder=cfg.get("decoder", "maxinfo"),
            workers=args.workers, fixed_codebook=fixed, engine=engine,
        )
    except ValueError as exc:
        raise ConfigError("config", str(exc)) from None
    body = report.to_dict()
    body.pop("config")
    header = {
        "exact_distortion": expected_distortion(dmc, px),
        "mutual_info": moments_for(dmc, px).mutual_info,
    }
    return {"meta": _meta("simulate", cfg), "header": header, "rows": [body]}


COMMANDS = {
    "bounds": cmd_bounds,
    "sweep": cmd_sweep,
    "baselines": cmd_baselines,
    "simulate": cmd_simulate,
    "binary-example": cmd_binary_example,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isac-fbl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--channel", help="channel specification (JSON)")
    common.add_argument("--binary-q", type=float, help="use the binary Y = SX channel with Bernoulli(q) state")
    common.add_argument("--eps", type=float, default=0.05, help="target error probability")
    common.add_argument("--n", type=int, action="append", help="blocklength (repeatable)")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--workers", type=int, default=1, help="parallel worker processes")

    p = sub.add_parser("bounds", parents=[common], help="bounds for one input distribution")
    p.add_argument("--alpha", type=float, help="P(X=1) for two-input channels")
    p.add_argument("--input", help="comma-separated input pmf")

    p = sub.add_parser("sweep", parents=[common], help="tradeoff curve over a distortion grid")
    p.add_argument("--d-grid", help="start:stop:count (default: 60 points from d_min to d_trivial)")

    p = sub.add_parser("baselines", parents=[common], help="resource-sharing baselines vs the joint scheme")
    p.add_argument("--gamma-grid", help="start:stop:count (default 0:1:11)")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo run of the random-coding scheme")
    p.add_argument("--alpha", type=float)
    p.add_argument("--input")
    p.add_argument("--d", type=float, help="pick the input maximizing the achievability bound at this budget")
    p.add_argument("--msg-count", type=int)
    p.add_argument("--rate", type=float, help="bits per use; M = floor(2^(n rate))")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--decoder", choices=("maxinfo", "threshold"), default="maxinfo")
    p.add_argument("--k", type=float, help="threshold coefficient K (default: optimized)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fixed-codebook", action="store_true")
    p.add_argument("--engine", choices=("explicit", "types"), default="explicit",
                   help="explicit codebooks, or exact sampling of codeword class counts")
    p.add_argument("--config", help="replay the config stored in an earlier simulate report")

    p = sub.add_parser("binary-example", parents=[common], help="binary channel tradeoff family")
    p.add_argument("--d-grid", help="start:stop:count")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.workers < 1:
        print("error: --workers: must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        doc = COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    form = args.format or ("json" if args.command == "simulate" else "csv")
    text = render(doc, form)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())

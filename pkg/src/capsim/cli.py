"""Command-line front end: simulate runs or price them, emit CSV and figures.

`capsim run` executes one simulated run per (algorithm, n, P) point, writes
one CSV row each (stable column order, byte-identical across repeat runs of
the same configuration), and optionally renders a strong-scaling figure
(effective GFLOPS against P, log-scale x axis) next to the delimited output.
`capsim costmodel` prints any survey-table row or lower bound as JSON, or
sweeps it over P or M into CSV, with the same optional figure.

All flags can come from a JSON config file with the same names; explicit
flags win.  Runs are reproducible from the config alone: inputs are drawn
from a seeded generator and the simulation is deterministic.

Default machine rates describe an XT4-like node: gamma is the reciprocal of
a 36.8 GFLOPS peak, alpha and beta are illustrative interconnect constants;
override them for anything quantitative.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import baselines, costmodel
from .caps import Schedule, caps_multiply, compute_ell, default_schedule, \
    memory_um, validate_schedule
from .layout import log7
from .simnet import CSV_FIELDS, MachineParams, SimMachine

__all__ = ["main"]

DEFAULT_ALPHA = 2e-6
DEFAULT_BETA = 1.2e-9
DEFAULT_GAMMA = 1.0 / 36.8e9

ALGORITHMS = ("caps", "cannon", "2d-strassen", "strassen-2d")

RUN_KEYS = ("algorithm", "n", "P", "M", "schedule", "ell", "alpha", "beta",
            "gamma", "cutoff", "flavor", "seed", "costmodel_only")


def _parse_args(argv):
    top = argparse.ArgumentParser(prog="capsim", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate runs and emit CSV (+ figure)")
    run.add_argument("--config", help="JSON file providing any of the flags")
    run.add_argument("--emit-config", help="write the resolved config as JSON")
    run.add_argument("--algorithm", help="comma list of " + ",".join(ALGORITHMS))
    run.add_argument("--n", help="comma list of matrix sizes")
    run.add_argument("--P", help="comma list of processor counts")
    run.add_argument("--M", type=int, help="words of memory per processor")
    run.add_argument("--schedule", help="'auto' or a B/D string (caps only)")
    run.add_argument("--ell", type=int, help="recursion depth for strassen-2d")
    run.add_argument("--alpha", type=float, help="seconds per message")
    run.add_argument("--beta", type=float, help="seconds per word")
    run.add_argument("--gamma", type=float, help="seconds per flop")
    run.add_argument("--cutoff", type=int, help="base-case size of the recursion")
    run.add_argument("--flavor", choices=("winograd", "strassen"))
    run.add_argument("--seed", type=int, help="input generator seed")
    run.add_argument("--csv", help="CSV output path (default stdout)")
    run.add_argument("--svg", help="render the strong-scaling figure here")
    run.add_argument("--costmodel-only", action="store_true", default=None,
                     help="price the runs from closed forms, do not simulate")

    cm = sub.add_parser("costmodel", help="print table rows and lower bounds")
    cm.add_argument("--row", required=True,
                    help="one of " + ",".join(costmodel.TABLE1_ROWS))
    cm.add_argument("--n", type=int, required=True)
    cm.add_argument("--P", type=int, required=True)
    cm.add_argument("--M", type=int)
    cm.add_argument("--ell", type=int)
    cm.add_argument("--sweep", choices=("P", "M"))
    cm.add_argument("--values", help="comma list for the swept parameter")
    cm.add_argument("--csv", help="CSV output path for sweeps (default stdout)")
    cm.add_argument("--svg", help="render bandwidth against the swept parameter")
    return top.parse_args(argv)


def _resolve_run_config(args):
    cfg = {
        "algorithm": "caps",
        "n": "56",
        "P": "7",
        "M": None,
        "schedule": "auto",
        "ell": 1,
        "alpha": DEFAULT_ALPHA,
        "beta": DEFAULT_BETA,
        "gamma": DEFAULT_GAMMA,
        "cutoff": 8,
        "flavor": "winograd",
        "seed": 0,
        "costmodel_only": False,
    }
    if args.config:
        with open(args.config) as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(RUN_KEYS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in RUN_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg["algorithm"] = str(cfg["algorithm"])
    cfg["n"] = str(cfg["n"])
    cfg["P"] = str(cfg["P"])
    return cfg


def _int_list(text, what):
    try:
        vals = [int(x) for x in str(text).split(",") if x != ""]
    except ValueError:
        raise ValueError(f"{what} must be a comma list of integers, got {text!r}")
    if not vals:
        raise ValueError(f"{what} list is empty")
    return vals


def _admissible_base(algorithm, n, P, schedule_steps, ell):
    if algorithm == "caps":
        k = log7(P)
        s = len(schedule_steps)
        return (2 ** s) * (7 ** ((k + 1) // 2))
    q = math.isqrt(P)
    if q * q != P:
        raise ValueError(f"{algorithm} needs a square P, got {P}")
    if algorithm == "strassen-2d":
        return (2 ** ell) * q
    return q


def _nearest_admissible(n, base):
    return base * max(1, round(n / base))


def _caps_schedule(cfg, n, P):
    if cfg["schedule"] == "auto":
        return default_schedule(n, P, cfg["M"])
    return Schedule.from_string(cfg["schedule"])


def _modeled_point(cfg, algorithm, n, P):
    """Closed-form (flops, words, msgs, peak, ell, schedule) for one point."""
    if algorithm == "caps":
        sched = _caps_schedule(cfg, n, P)
        ell = sched.ell
        cost = costmodel.caps_cost(n, P, cfg["M"], variant="auto",
                                   flavor=cfg["flavor"], cutoff=cfg["cutoff"])
        try:
            peak = validate_schedule(sched, n, P)
        except ValueError:
            peak = ""
        return (cost.flops, cost.bandwidth_words, cost.latency_messages,
                peak, ell, sched.to_string())
    if algorithm == "cannon":
        f, w, m = baselines.cannon_cost(n, P)
        return f, w, m, 3 * (n * n // P), 0, ""
    if algorithm == "2d-strassen":
        f, w, m = baselines.two_d_strassen_cost(n, P, cfg["cutoff"],
                                                alg=_flavor_instance(cfg))
        return f, w, m, 3 * (n * n // P), 0, ""
    f, w, m = baselines.strassen_two_d_cost(n, P, cfg["ell"],
                                            alg=_flavor_instance(cfg))
    peak = 3 * (n * n // P) + sum(3 * (n // 2 ** (j + 1)) ** 2 // P
                                  for j in range(cfg["ell"]))
    return f, w, m, peak, cfg["ell"], ""


def _simulated_point(cfg, algorithm, n, P, alg_instance):
    params = MachineParams(P=P, M=cfg["M"], alpha=cfg["alpha"],
                           beta=cfg["beta"], gamma=cfg["gamma"])
    machine = SimMachine(params)
    rng = np.random.default_rng(cfg["seed"])
    A = rng.uniform(-1.0, 1.0, (n, n))
    B = rng.uniform(-1.0, 1.0, (n, n))
    if algorithm == "caps":
        sched = _caps_schedule(cfg, n, P)
        _, rep = caps_multiply(machine, A, B, sched, alg=alg_instance,
                               cutoff=cfg["cutoff"])
        return rep, sched.ell, sched.to_string()
    if algorithm == "cannon":
        _, rep = baselines.cannon_multiply(machine, A, B)
        return rep, 0, ""
    if algorithm == "2d-strassen":
        _, rep = baselines.two_d_strassen(machine, A, B, cutoff=cfg["cutoff"],
                                          alg=alg_instance)
        return rep, 0, ""
    _, rep = baselines.strassen_two_d(machine, A, B, cfg["ell"],
                                      alg=alg_instance)
    return rep, cfg["ell"], ""


def _flavor_instance(cfg):
    if cfg["flavor"] == "strassen":
        from .bilinear import make_strassen
        return make_strassen()
    from .bilinear import make_strassen_winograd
    return make_strassen_winograd()


def _run_command(args):
    cfg = _resolve_run_config(args)
    if args.emit_config:
        with open(args.emit_config, "w") as fh:
            json.dump({k: cfg[k] for k in RUN_KEYS}, fh, indent=2, sort_keys=True)
            fh.write("\n")
    algorithms = [a.strip() for a in cfg["algorithm"].split(",") if a.strip()]
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {a!r}; pick from {ALGORITHMS}")
    ns = _int_list(cfg["n"], "n")
    ps = _int_list(cfg["P"], "P")
    alg_instance = _flavor_instance(cfg)

    lines = [",".join(CSV_FIELDS)]
    points = []
    for algorithm in algorithms:
        for n in ns:
            for P in ps:
                sched_steps = ()
                if algorithm == "caps":
                    sched_steps = tuple(_caps_schedule(cfg, n, P))
                base = _admissible_base(algorithm, n, P, sched_steps, cfg["ell"])
                if n % base:
                    raise ValueError(
                        f"n={n} not admissible for {algorithm} at P={P} "
                        f"(needs a multiple of {base}); nearest admissible "
                        f"n is {_nearest_admissible(n, base)}")
                if cfg["costmodel_only"]:
                    flops, words, msgs, peak, ell, sched = _modeled_point(
                        cfg, algorithm, n, P)
                    time = (cfg["alpha"] * msgs + cfg["beta"] * words
                            + cfg["gamma"] * flops)
                else:
                    rep, ell, sched = _simulated_point(cfg, algorithm, n, P,
                                                       alg_instance)
                    flops, words, msgs = (rep.flops_critical,
                                          rep.words_critical,
                                          rep.messages_critical)
                    peak = rep.peak_memory_words
                    time = rep.modeled_time
                gflops = costmodel.effective_gflops(n, time)
                vals = {
                    "algorithm": algorithm, "n": n, "P": P,
                    "M": "" if cfg["M"] is None else cfg["M"],
                    "ell": ell, "schedule": sched,
                    "flops_crit": flops, "words_crit": words,
                    "msgs_crit": msgs, "peak_mem": peak,
                    "modeled_time": repr(float(time)),
                    "effective_gflops": repr(float(gflops)),
                }
                lines.append(",".join(str(vals[f]) for f in CSV_FIELDS))
                points.append((algorithm, n, P, gflops))

    text = "\n".join(lines) + "\n"
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.svg:
        _render_scaling_svg(args.svg, points)
    return 0


def _render_scaling_svg(path, points):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.ticker import FixedLocator, NullLocator, ScalarFormatter

    plt.rcParams["svg.hashsalt"] = "capsim"  # deterministic element ids
    series = {}
    for algorithm, n, P, gflops in points:
        series.setdefault((algorithm, n), []).append((P, gflops))
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    all_p = sorted({P for _, _, P, _ in points})
    for (algorithm, n), pts in sorted(series.items()):
        pts.sort()
        finite = [(p, g) for p, g in pts if math.isfinite(g)]
        if not finite:
            continue
        ax.plot([p for p, _ in finite], [g for _, g in finite],
                marker="o", label=f"{algorithm} n={n}")
    ax.set_xscale("log")
    ax.xaxis.set_major_locator(FixedLocator(all_p))
    ax.xaxis.set_minor_locator(NullLocator())
    ax.xaxis.set_major_formatter(ScalarFormatter())
    ax.set_xlabel("processors")
    ax.set_ylabel("effective GFLOPS")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _costmodel_command(args):
    def evaluate(n, P, M, ell):
        c = costmodel.table1_cost(args.row, n, P, M=M, ell=ell)
        return {
            "row": args.row, "n": n, "P": P, "M": M, "ell": ell,
            "flops": c.flops, "bandwidth_words": c.bandwidth_words,
            "latency_messages": c.latency_messages, "exact": c.exact,
        }

    if not args.sweep:
        rec = evaluate(args.n, args.P, args.M, args.ell)
        sys.stdout.write(json.dumps(rec, sort_keys=True) + "\n")
        return 0
    if not args.values:
        raise ValueError("--sweep requires --values")
    vals = _int_list(args.values, "--values")
    fields = ("row", "n", "P", "M", "ell", "flops", "bandwidth_words",
              "latency_messages", "exact")
    lines = [",".join(fields)]
    pts = []
    for v in vals:
        rec = evaluate(args.n, v if args.sweep == "P" else args.P,
                       v if args.sweep == "M" else args.M, args.ell)
        lines.append(",".join(
            "" if rec[f] is None else repr(rec[f]) if isinstance(rec[f], float)
            else str(rec[f]) for f in fields))
        pts.append((v, rec["bandwidth_words"]))
    text = "\n".join(lines) + "\n"
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.svg:
        _render_sweep_svg(args.svg, args.row, args.sweep, pts)
    return 0


def _render_sweep_svg(path, row, sweep, pts):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "capsim"  # deterministic element ids
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot([p for p, _ in pts], [w for _, w in pts], marker="o", label=row)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(sweep)
    ax.set_ylabel("bandwidth (words)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def main(argv=None) -> int:
    args = _parse_args(argv)
    try:
        if args.command == "run":
            return _run_command(args)
        return _costmodel_command(args)
    except Exception as exc:  # expected validation/model errors exit nonzero
        sys.stderr.write(f"capsim: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Subcommands wire models, transforms, engines and experiments into
reproducible pipelines: every output file embeds the seed, a hash of the
effective configuration and the tool version, and rerunning a command with
identical inputs reproduces identical data sections.

Exit codes: 0 success, 2 configuration or usage error, 3 validation
failure, 4 capacity guard.  Errors are emitted as one JSON line on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import figures, reports
from .errors import CapacityError, ConfigError, SpikebmError, ValidationError
from .inference import (RunConfig, free_energy, run, run_network)
from .kernels import KernelSpec
from .model import (BoltzmannMachine, derive_pairwise, exact_posterior_marginals,
                    model_from_dict, model_to_dict, state_index)
from .stability import ensemble, field_export, find_fixed_points
from .stats import scatter_mean_vs_var, std_vs_mean, summarize
from .transforms import (LnpNetwork, TransformRecord, dale_split, event_split,
                         identity_record, readback, remove_biases)
from .model import PairwiseParams

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_CAPACITY = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route usage errors through the JSON path
        raise ConfigError(message)


def _fail_code(exc: SpikebmError) -> int:
    if isinstance(exc, CapacityError):
        return EXIT_CAPACITY
    if isinstance(exc, ValidationError):
        return EXIT_VALIDATION
    return EXIT_CONFIG


def _say(args, message):
    if not args.quiet:
        print(message)


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc


def _params_to_dict(params: PairwiseParams) -> dict:
    return {"kind": "pairwise", "n": params.n,
            "W": [{"i": i, "u": "AB"[u], "j": j, "v": "AB"[v], "value": val}
                  for (i, u, j, v), val in sorted(params.W.items())],
            "b": [{"i": i, "u": "AB"[u], "value": val}
                  for (i, u), val in sorted(params.b.items())]}


def _params_from_dict(doc: dict) -> PairwiseParams:
    try:
        n = int(doc["n"])
        W = {(int(t["i"]), state_index(t["u"]), int(t["j"]), state_index(t["v"])):
             float(t["value"]) for t in doc.get("W", [])}
        b = {(int(t["i"]), state_index(t["u"])): float(t["value"])
             for t in doc.get("b", [])}
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed pairwise document: {exc}") from exc
    for (i, _, j, _) in W:
        if not (0 <= i < n and 0 <= j < n):
            raise ValidationError(f"weight index ({i},{j}) outside 0..{n - 1}")
        if i == j:
            raise ValidationError(f"self-weight stored at unit {i}")
    for (i, _) in b:
        if not 0 <= i < n:
            raise ValidationError(f"bias index {i} outside 0..{n - 1}")
    blanket = {i: set() for i in range(n)}
    for (i, _, j, _) in W:
        blanket[i].add(j)
    return PairwiseParams(n=n, W=W, b=b,
                          blanket={k: tuple(sorted(v)) for k, v in blanket.items()})


def _load_source(path):
    """Detect and load a model, pairwise-params or network file."""
    doc = _load_json(path)
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    if doc.get("kind") == "pairwise":
        return "params", _params_from_dict(doc)
    if "e" in doc and "W" in doc:
        return "network", LnpNetwork.from_dict(doc)
    if "n" in doc:
        return "model", model_from_dict(doc)
    raise ValidationError(f"{path}: unrecognized document layout")


def _parse_kernel(spec: str) -> KernelSpec:
    if spec.startswith("@"):
        return KernelSpec.from_dict(_load_json(spec[1:]))
    doc = {}
    for part in spec.split(","):
        if not part:
            continue
        if "=" not in part:
            raise ConfigError(f"kernel spec item {part!r} is not key=value")
        key, val = part.split("=", 1)
        doc[key.strip()] = val.strip() if key.strip() == "family" else float(val)
    return KernelSpec.from_dict(doc)


def _parse_observation(path, kind):
    if path is None:
        return None
    doc = _load_json(path)
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: observation must be a JSON object")
    if kind == "network":
        return {int(k): float(v) for k, v in doc.items()}
    return {int(k): v for k, v in doc.items()}


def _outdir(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


_SCHEDULE_ALIASES = {"seq-cyclic": "sequential_cyclic",
                     "seq-random": "sequential_random_scan",
                     "parallel": "parallel_synchronized"}
_ALGO_ALIASES = {"gibbs": "gibbs", "var": "variational", "ssi": "ssi"}


# ---------------------------------------------------------------------------
# infer


def _cmd_infer(args) -> int:
    kind, source = _load_source(args.model)
    kernel = _parse_kernel(args.kernel) if args.kernel else KernelSpec()
    init = args.init
    if args.init_file:
        init = np.asarray(_load_json(args.init_file), dtype=float)
    config = RunConfig(algorithm=_ALGO_ALIASES[args.algorithm],
                       schedule=_SCHEDULE_ALIASES[args.schedule],
                       steps=args.steps, seed=args.seed, kernel=kernel,
                       init=init)
    obs = _parse_observation(args.observe, kind)
    if kind == "network":
        traj = run_network(source, config, clamp=obs)
    elif kind == "params":
        traj = run(source, config, observation=obs)
    else:
        traj = run(source, config, observation=obs)
    out = _outdir(args)
    prov = reports.provenance(args.seed, {"command": "infer",
                                          "config": config.to_dict(),
                                          "source": traj.source_id,
                                          "observe": obs})
    traj_path = os.path.join(out, "trajectory.csv")
    reports.write_trajectory_csv(traj, traj_path, prov)
    window = min(args.window, traj.steps)
    terminal = min(args.terminal_window, traj.steps)
    summary = summarize(traj, window=window, terminal_window=terminal)
    doc = {"summary": summary.to_dict(), "algorithm": traj.algorithm,
           "schedule": traj.schedule, "steps": traj.steps,
           "source": traj.source_id, "config": traj.config}
    theta_last = traj.theta[-1]
    if kind == "network":
        from .lnp import rate as net_rate
        free_rows = ~traj.clamped
        resid = float(np.max(np.abs(
            (theta_last - net_rate(source, theta_last))[free_rows])))
        doc["terminal_residual"] = resid
    elif config.algorithm == "variational":
        params = source if kind == "params" else derive_pairwise(source)
        Wm, bv = params.dense()
        from scipy.special import expit
        target = expit(Wm @ theta_last - bv)
        free_rows = ~traj.clamped
        resid = float(np.max(np.abs(theta_last[free_rows] - target[free_rows])))
        doc["terminal_residual"] = resid
    reports.write_json(os.path.join(out, "summary.json"), doc, prov)
    if not args.no_figures:
        figures.render_trajectory(traj, os.path.join(out, "trajectory.png"),
                                  window=window)
    _say(args, f"wrote {traj_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# transform


def _cmd_transform(args) -> int:
    kind, source = _load_source(args.model)
    ops = [op for op in args.ops.split(",") if op] if args.ops else []
    known = {"remove-bias", "event-split", "dale-split"}
    unknown = set(ops) - known
    if unknown:
        raise ConfigError(f"unknown transform ops {sorted(unknown)}")

    records = []
    if kind == "model":
        stage, obj = "params", derive_pairwise(source)
        original_model = source
    elif kind == "params":
        stage, obj = "params", source
        original_model = None
    else:
        stage, obj = "network", source
        original_model = None

    for op in ops:
        if op == "remove-bias":
            if stage != "params":
                raise ConfigError("remove-bias applies before event-split")
            obj, record = remove_biases(obj)
            records.append(record)
        elif op == "event-split":
            if stage != "params":
                raise ConfigError("event-split applies to model-space input")
            if obj.b and not args.carry_bias:
                raise ConfigError(
                    "event-split requires remove-bias earlier in the chain "
                    "or --carry-bias")
            obj, record = event_split(obj, a=args.a, eps_step=args.eps_step,
                                      carry_bias=args.carry_bias)
            records.append(record)
            stage = "network"
        elif op == "dale-split":
            if stage != "network":
                raise ConfigError("dale-split applies after event-split "
                                  "or to a network input")
            obj, record = dale_split(obj)
            records.append(record)

    out = _outdir(args)
    prov = reports.provenance(args.seed, {"command": "transform", "ops": ops,
                                          "a": args.a, "eps_step": args.eps_step,
                                          "carry_bias": args.carry_bias})
    if not ops:
        if kind == "model":
            doc = model_to_dict(original_model)
            path = os.path.join(out, "model.json")
        elif kind == "params":
            doc = _params_to_dict(obj)
            path = os.path.join(out, "params.json")
        else:
            doc = obj.to_dict()
            path = os.path.join(out, "network.json")
        reports.write_json(path, doc, prov)
        size = obj.n if stage != "params" else obj.n
        records = [identity_record(size)]
    elif stage == "params":
        path = os.path.join(out, "params.json")
        reports.write_json(path, _params_to_dict(obj), prov)
    else:
        path = os.path.join(out, "network.json")
        reports.write_json(path, obj.to_dict(), prov)
    reports.write_json(os.path.join(out, "record.json"),
                       {"records": [r.to_dict() for r in records]}, prov)
    _say(args, f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# stability


def _cmd_stability(args) -> int:
    kind, net = _load_source(args.net)
    if kind != "network":
        raise ValidationError("stability commands require a network file")
    out = _outdir(args)
    chosen = [bool(args.fixed_points), args.ensemble is not None,
              args.field is not None]
    if sum(chosen) != 1:
        raise ConfigError(
            "choose exactly one of --fixed-points, --ensemble, --field")
    prov = reports.provenance(args.seed, {"command": "stability",
                                          "net": net.to_dict(),
                                          "mode": ["fixed-points", "ensemble",
                                                   "field"][chosen.index(True)]})
    if args.fixed_points:
        report = find_fixed_points(net)
        reports.write_json(os.path.join(out, "fixed_points.json"),
                           report.to_dict(), prov)
        _say(args, f"found {len(report.points)} fixed points")
        return EXIT_OK
    if args.field is not None:
        field = field_export(net, args.field)
        path = os.path.join(out, "field.csv")
        reports.write_field_csv(field, path, prov)
        if not args.no_figures:
            figures.render_field(field, os.path.join(out, "field.png"))
        _say(args, f"wrote {path}")
        return EXIT_OK
    trials, steps = args.ensemble
    report = find_fixed_points(net)
    y0 = None
    if args.start != "uniform":
        y0 = np.asarray([float(v) for v in args.start.split(",")])
    stats = ensemble(net, report.points, trials, steps, seed=args.seed,
                     radius=args.radius, terminal_window=args.terminal_window,
                     y0=y0)
    reports.write_json(os.path.join(out, "ensemble.json"), stats.to_dict(), prov)
    _say(args, "wrote ensemble.json")
    return EXIT_OK


# ---------------------------------------------------------------------------
# reconstruct


def _round_bits(values: np.ndarray) -> list:
    return [1 if v >= 0.5 else 0 for v in values]


def _activation(traj, units, terminal_window, use_terminal):
    """Per-unit probability of state 1 read off a model trajectory."""
    idx = [2 * u + 1 for u in units]
    if use_terminal:
        window = min(terminal_window, traj.steps)
        return traj.theta[traj.steps - window:, idx].mean(axis=0)
    return traj.theta[-1, idx]


def _cmd_reconstruct(args) -> int:
    kind, source = _load_source(args.model)
    if kind != "model":
        raise ValidationError("reconstruct requires a model file")
    if not source.layers:
        raise ConfigError("model file lacks a 'layers' declaration")
    bottom = list(source.layers[0])
    top = list(source.layers[-1])
    input_doc = _load_json(args.input)
    bits = [state_index(v) for v in input_doc]
    if len(bits) != len(bottom):
        raise ConfigError(
            f"input has {len(bits)} values, bottom layer has {len(bottom)}")

    params = derive_pairwise(source)
    kernel = _parse_kernel(args.kernel) if args.kernel else KernelSpec()
    algo = _ALGO_ALIASES[args.algorithm]
    use_terminal = algo != "variational"

    up_cfg = RunConfig(algorithm=algo, schedule=_SCHEDULE_ALIASES[args.schedule],
                       steps=args.up_steps, seed=args.seed, kernel=kernel)
    up = run(params, up_cfg, observation=dict(zip(bottom, bits)))
    top_act = _activation(up, top, args.terminal_window, use_terminal)
    top_bits = _round_bits(top_act)

    down_cfg = RunConfig(algorithm=algo,
                         schedule=_SCHEDULE_ALIASES[args.schedule],
                         steps=args.down_steps, seed=args.seed + 1,
                         kernel=kernel)
    down = run(params, down_cfg, observation=dict(zip(top, top_bits)))
    visible_act = _activation(down, bottom, args.terminal_window, use_terminal)

    out = _outdir(args)
    prov = reports.provenance(args.seed, {
        "command": "reconstruct", "algorithm": algo,
        "up_steps": args.up_steps, "down_steps": args.down_steps,
        "input": bits})
    doc = {"input_bits": bits, "top_activation": top_act.tolist(),
           "top_bits": top_bits, "visible_activation": visible_act.tolist(),
           "visible_bits": _round_bits(visible_act)}
    reports.write_json(os.path.join(out, "reconstruction.json"), doc, prov)
    _say(args, "wrote reconstruction.json")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate / lecam


def _cmd_simulate(args) -> int:
    from .lnp import simulate
    kind, net = _load_source(args.net)
    if kind != "network":
        raise ValidationError("simulate requires a network file")
    y0 = None
    if args.y0_file:
        y0 = np.asarray(_load_json(args.y0_file), dtype=float)
    sim = simulate(net, args.steps, args.seed, y0=y0, stream=args.stream)
    out = _outdir(args)
    prov = reports.provenance(args.seed, {"command": "simulate",
                                          "net": net.to_dict(),
                                          "steps": args.steps,
                                          "stream": args.stream})
    reports.write_raster_csv(sim, os.path.join(out, "raster.csv"), prov)
    reports.write_trace_csv(sim, os.path.join(out, "traces.csv"), prov)
    if not args.no_figures:
        figures.render_raster(sim, os.path.join(out, "raster.png"))
    _say(args, f"wrote raster.csv and traces.csv ({sim.raster.sum()} spikes)")
    return EXIT_OK


def _cmd_lecam(args) -> int:
    from .lnp import lecam_check
    rep = lecam_check(args.rate, args.eps_step, args.steps)
    out = _outdir(args)
    prov = reports.provenance(args.seed, {"command": "lecam",
                                          "rate": args.rate,
                                          "eps_step": args.eps_step,
                                          "steps": args.steps})
    reports.write_json(os.path.join(out, "lecam.json"), rep.to_dict(), prov)
    _say(args, f"tv {rep.tv:.3e} vs bound {rep.bound:.3e}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare / residuals (sampled-run statistics against the variational run)


def _cmd_compare(args) -> int:
    from .stats import histogram
    kind, source = _load_source(args.model)
    if kind == "network":
        raise ValidationError("compare requires a model or pairwise file")
    kernel = _parse_kernel(args.kernel) if args.kernel else KernelSpec()
    obs = _parse_observation(args.observe, kind)
    var = run(source, RunConfig(algorithm="variational",
                                schedule=_SCHEDULE_ALIASES[args.schedule],
                                steps=args.var_steps, seed=args.seed),
              observation=obs)
    ssi = run(source, RunConfig(algorithm="ssi",
                                schedule=_SCHEDULE_ALIASES[args.schedule],
                                steps=args.steps, seed=args.seed,
                                kernel=kernel),
              observation=obs)
    scatter = scatter_mean_vs_var(ssi, var)
    spread = std_vs_mean(ssi)
    out = _outdir(args)
    prov = reports.provenance(args.seed, {"command": "compare",
                                          "steps": args.steps,
                                          "var_steps": args.var_steps,
                                          "kernel": kernel.to_dict(),
                                          "observe": obs})
    reports.write_pairs_csv(scatter.channels, scatter.pairs,
                            os.path.join(out, "scatter.csv"), prov)
    reports.write_pairs_csv(spread.channels, spread.pairs,
                            os.path.join(out, "std_mean.csv"), prov)
    reports.write_json(os.path.join(out, "compare.json"),
                       {"max_abs_dev": scatter.max_abs_dev,
                        "mean_abs_dev": scatter.mean_abs_dev,
                        "extreme_bin_mean_std": spread.extreme_bin_mean_std,
                        "center_bin_mean_std": spread.center_bin_mean_std},
                       prov)
    if not args.no_figures:
        figures.render_scatter(scatter.pairs, os.path.join(out, "scatter.png"))
        figures.render_scatter(spread.pairs, os.path.join(out, "std_mean.png"),
                               xlabel="channel mean", ylabel="channel std")
    _say(args, f"mean |dev| {scatter.mean_abs_dev:.4f} over "
               f"{len(scatter.pairs)} channels")
    return EXIT_OK


def _cmd_residuals(args) -> int:
    from .stats import histogram, split_residuals
    kind, source = _load_source(args.model)
    if kind == "network":
        raise ValidationError("residuals requires a model or pairwise file")
    params = derive_pairwise(source) if kind == "model" else source
    kernel = _parse_kernel(args.kernel) if args.kernel else KernelSpec()
    removed, rec0 = remove_biases(params)
    net, rec1 = event_split(removed, a=args.a, eps_step=args.eps_step)
    split, rec2 = dale_split(net)
    cfg = RunConfig(algorithm="ssi", schedule="parallel_synchronized",
                    steps=args.steps, seed=args.seed, kernel=kernel,
                    init=np.full(split.n, 0.5))
    traj = run_network(split, cfg)
    rb = readback(traj, [rec0, rec1, rec2])
    res = split_residuals(rb)
    out = _outdir(args)
    prov = reports.provenance(args.seed, {"command": "residuals",
                                          "steps": args.steps,
                                          "kernel": kernel.to_dict(),
                                          "a": args.a,
                                          "eps_step": args.eps_step})
    pair_hist = histogram(res.pair_std, bins=args.bins)
    reports.write_hist_csv(pair_hist, os.path.join(out, "pair_residual_hist.csv"),
                           prov)
    if not args.no_figures:
        figures.render_histogram(pair_hist,
                                 os.path.join(out, "pair_residual_hist.png"),
                                 xlabel="std(theta_A + theta_B - 1)")
    if len(res.dale_std):
        dale_hist = histogram(res.dale_std, bins=args.bins)
        reports.write_hist_csv(dale_hist,
                               os.path.join(out, "dale_residual_hist.csv"), prov)
        if not args.no_figures:
            figures.render_histogram(
                dale_hist, os.path.join(out, "dale_residual_hist.png"),
                xlabel="std(excitatory - inhibitory)")
    reports.write_json(os.path.join(out, "residuals.json"), res.to_dict(), prov)
    _say(args, f"median pair-residual std "
               f"{res.pair_quantiles.get('0.5', float('nan')):.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# oracle


def _cmd_oracle(args) -> int:
    kind, source = _load_source(args.model)
    if kind != "model":
        raise ValidationError("oracle requires a model file")
    obs = _parse_observation(args.observe, "model")
    marginals = exact_posterior_marginals(source, observation=obs)
    doc = {"marginals": {str(i): [pa, pb] for i, (pa, pb) in sorted(marginals.items())}}
    if args.theta:
        theta_doc = _load_json(args.theta)
        doc["free_energy"] = free_energy(source, np.asarray(theta_doc, dtype=float))
    out = _outdir(args)
    prov = reports.provenance(args.seed, {"command": "oracle",
                                          "observe": obs})
    reports.write_json(os.path.join(out, "oracle.json"), doc, prov)
    _say(args, "wrote oracle.json")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spikebm", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--quiet", action="store_true")
        p.add_argument("--no-figures", action="store_true",
                       help="skip PNG rendering next to delimited outputs")

    p = sub.add_parser("infer", help="run an inference engine on a model or network")
    p.add_argument("model")
    p.add_argument("--algorithm", choices=("gibbs", "var", "ssi"), required=True)
    p.add_argument("--schedule", choices=tuple(_SCHEDULE_ALIASES), default="parallel")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--kernel", help="key=value list or @file.json")
    p.add_argument("--observe", help="JSON observation file")
    p.add_argument("--init", default="uniform_random",
                   choices=("uniform_random", "constant_half"))
    p.add_argument("--init-file", help="JSON activation vector overriding --init")
    p.add_argument("--window", type=int, default=30)
    p.add_argument("--terminal-window", type=int, default=50)
    common(p)
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("transform", help="rewrite a model into network form")
    p.add_argument("model")
    p.add_argument("--ops", default="",
                   help="comma list of remove-bias,event-split,dale-split")
    p.add_argument("--a", type=float, default=0.5)
    p.add_argument("--eps-step", type=float, default=1.0)
    p.add_argument("--carry-bias", action="store_true",
                   help="route biases into the external-input vector")
    common(p)
    p.set_defaults(func=_cmd_transform)

    p = sub.add_parser("stability", help="fixed points, ensembles, field export")
    p.add_argument("net")
    p.add_argument("--fixed-points", action="store_true")
    p.add_argument("--ensemble", nargs=2, type=int, metavar=("TRIALS", "STEPS"))
    p.add_argument("--field", type=int, metavar="RES")
    p.add_argument("--start", default="uniform",
                   help="'uniform' or comma-separated start point")
    p.add_argument("--radius", type=float, default=0.05)
    p.add_argument("--terminal-window", type=int, default=100)
    common(p)
    p.set_defaults(func=_cmd_stability)

    p = sub.add_parser("reconstruct", help="clamp, infer up, round, infer back")
    p.add_argument("model")
    p.add_argument("--input", required=True, help="JSON array of input bits")
    p.add_argument("--up-steps", type=int, required=True)
    p.add_argument("--down-steps", type=int, required=True)
    p.add_argument("--algorithm", choices=("var", "ssi"), default="var")
    p.add_argument("--schedule", choices=tuple(_SCHEDULE_ALIASES), default="parallel")
    p.add_argument("--kernel", help="key=value list or @file.json")
    p.add_argument("--terminal-window", type=int, default=50)
    common(p)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("simulate", help="spiking simulation raster and traces")
    p.add_argument("net")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--stream", type=int, default=0,
                   help="independent trial substream of the seed")
    p.add_argument("--y0-file", help="JSON initial trace vector (default 0)")
    common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("lecam", help="Poisson-approximation quality report")
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--eps-step", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    common(p)
    p.set_defaults(func=_cmd_lecam)

    p = sub.add_parser("compare",
                       help="sampled-run means against the variational run")
    p.add_argument("model")
    p.add_argument("--steps", type=int, default=5000)
    p.add_argument("--var-steps", type=int, default=400)
    p.add_argument("--schedule", choices=tuple(_SCHEDULE_ALIASES),
                   default="parallel")
    p.add_argument("--kernel", help="key=value list or @file.json")
    p.add_argument("--observe", help="JSON observation file")
    common(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("residuals",
                       help="split-identity residual histograms of a "
                            "fully transformed run")
    p.add_argument("model")
    p.add_argument("--steps", type=int, default=3000)
    p.add_argument("--kernel", help="key=value list or @file.json")
    p.add_argument("--a", type=float, default=0.5)
    p.add_argument("--eps-step", type=float, default=1.0)
    p.add_argument("--bins", type=int, default=20)
    common(p)
    p.set_defaults(func=_cmd_residuals)

    p = sub.add_parser("oracle", help="exact posterior marginals (small models)")
    p.add_argument("model")
    p.add_argument("--observe", help="JSON observation file")
    p.add_argument("--theta", help="JSON activations to score with free energy")
    common(p)
    p.set_defaults(func=_cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SpikebmError as exc:
        code = _fail_code(exc)
        print(json.dumps({"error": type(exc).__name__, "exit": code,
                          "detail": str(exc)}), file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())

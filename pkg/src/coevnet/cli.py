"""Command-line interface: simulate, fit-mle, fit-bayes, diagnose, forecast-study.

Every run with a fixed ``--seed`` writes byte-identical output files across
repeats. Exit codes: 0 success, 2 validation error, 3 numerical failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .data import (
    AttributeSeries,
    CovariateSpec,
    CoevError,
    ModelMode,
    NumericalError,
    ValidationError,
)
from . import io as cio
from .diagnostics import (
    average_ess,
    effective_sample_size,
    forecast_study,
    posterior_quantiles,
    sum_of_squares_decomposition,
)
from .gibbs import PriorSpec, run_chain
from .latent import align_latent_draws, fit_latent
from .mle import fit_mle
from .ordinal import fit_ordinal
from .simulate import SimConfig, simulate

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


def _add_data_args(sp, attributes_required=False):
    sp.add_argument("--network", required=True, help="long CSV (t,i,j,y)")
    sp.add_argument("--attributes", required=attributes_required,
                    help="long CSV (t,i,k,x)")
    sp.add_argument("--dyad-covariates", help="CSV (i,j,s1..sq)")
    sp.add_argument("--node-covariates", help="CSV (i,s1..sq)")
    sp.add_argument("--directed", action="store_true")
    sp.add_argument("--dense-zero", action="store_true",
                    help="treat unlisted network pairs as 0 instead of missing")


def _add_sampler_args(sp):
    sp.add_argument("--iters", type=int, default=2000)
    sp.add_argument("--burn-in", type=int, default=500)
    sp.add_argument("--thin", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--chains", type=int, default=1)
    sp.add_argument("--threads", type=int, default=None,
                    help="default from COEVNET_THREADS, else 1")
    sp.add_argument("--prior", help="prior.json")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="coevnet",
        description="Coevolution regression models for longitudinal "
                    "network and nodal-attribute data",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="forward-simulate the model")
    sp.add_argument("--params", required=True, help="params.json")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out-prefix", required=True)
    sp.add_argument("--init-burn-in", type=int, default=50)
    sp.add_argument("--dyad-covariates", help="CSV (i,j,s1..sq)")
    sp.add_argument("--node-covariates", help="CSV (i,s1..sq)")

    sp = sub.add_parser("fit-mle", help="closed-form Gaussian fit")
    _add_data_args(sp)
    sp.add_argument("--network-scale", default="gaussian")
    sp.add_argument("--attribute-scale", default="gaussian")
    sp.add_argument("--allow-singular", action="store_true")
    sp.add_argument("--out", required=True, help="report.json")

    sp = sub.add_parser("fit-bayes", help="Gibbs samplers for all variants")
    _add_data_args(sp)
    sp.add_argument("--network-scale", default="gaussian",
                    choices=["gaussian", "ordinal"])
    sp.add_argument("--attribute-scale", default="gaussian",
                    choices=["gaussian", "ordinal"])
    sp.add_argument("--latent-dim", type=int,
                    help="latent attribute dimension (exclusive with "
                         "--attributes)")
    sp.add_argument("--ordinal-mode", choices=["rank", "threshold"])
    sp.add_argument("--network-levels",
                    help="comma-separated ordinal levels, e.g. '0,1'")
    sp.add_argument("--attribute-levels",
                    help="semicolon-separated per-attribute level lists")
    sp.add_argument("--initial-state", action="store_true",
                    help="regress slice-0 latents on covariates")
    sp.add_argument("--x0-flat", action="store_true",
                    help="drop the N(0, I) anchor on latent x_{i,0}")
    _add_sampler_args(sp)
    sp.add_argument("--out", required=True, help="samples.ndjson")
    sp.add_argument("--export-latent",
                    help="write aligned posterior-mean trajectories "
                         "(t,i,k,xhat CSV; latent mode only)")

    sp = sub.add_parser("diagnose", help="ESS, quantiles, decomposition")
    sp.add_argument("--samples", required=True, help="samples.ndjson")
    sp.add_argument("--network")
    sp.add_argument("--attributes")
    sp.add_argument("--dyad-covariates")
    sp.add_argument("--node-covariates")
    sp.add_argument("--directed", action="store_true")
    sp.add_argument("--dense-zero", action="store_true")
    sp.add_argument("--probs", default="0.025,0.5,0.975")
    sp.add_argument("--out", help="diag.json")

    sp = sub.add_parser("forecast-study",
                        help="nested-model one-step forecast comparison")
    _add_data_args(sp)
    sp.add_argument("--holdouts", required=True,
                    help="comma-separated holdout times, e.g. 87,92,97")
    sp.add_argument("--estimator", default="mle", choices=["mle", "bayes"])
    sp.add_argument("--iters", type=int, default=1500)
    sp.add_argument("--burn-in", type=int, default=500)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    return ap


def _threads(args):
    if getattr(args, "threads", None) is not None:
        return max(1, args.threads)
    env = os.environ.get("COEVNET_THREADS")
    return max(1, int(env)) if env else 1


def _check_files(args, names, problems):
    for name in names:
        path = getattr(args, name.replace("-", "_"), None)
        if path and not os.path.exists(path):
            problems.append(f"--{name}: file not found: {path}")


def _parse_float_list(text, flag, problems):
    try:
        vals = [float(x) for x in text.split(",") if x.strip() != ""]
        if not vals:
            raise ValueError("empty list")
        return vals
    except ValueError as exc:
        problems.append(f"--{flag}: {exc}")
        return []


def validate_args(args):
    """Collect every configuration violation before touching any data."""
    problems = []
    cmd = args.command
    if cmd == "simulate":
        _check_files(args, ["params", "dyad-covariates", "node-covariates"],
                     problems)
        if args.m < 2:
            problems.append(f"--m must be >= 2, got {args.m}")
        if args.n < 1:
            problems.append(f"--n must be >= 1, got {args.n}")
        if args.p < 0:
            problems.append(f"--p must be >= 0, got {args.p}")
    if cmd in ("fit-mle", "fit-bayes", "forecast-study"):
        _check_files(args, ["network", "attributes", "dyad-covariates",
                            "node-covariates"], problems)
    if cmd == "fit-mle":
        if args.network_scale != "gaussian" or args.attribute_scale != "gaussian":
            problems.append(
                "fit-mle requires gaussian network and attribute scales; "
                "use fit-bayes for ordinal or latent variants"
            )
    if cmd == "fit-bayes":
        _check_files(args, ["prior"], problems)
        if args.latent_dim is not None:
            if args.attributes:
                problems.append(
                    "--latent-dim and --attributes are mutually exclusive "
                    "(latent attributes replace observed ones)"
                )
            if args.latent_dim < 1:
                problems.append("--latent-dim must be >= 1")
            if args.directed:
                problems.append(
                    "latent attributes are supported for undirected "
                    "networks only"
                )
            if args.attribute_scale == "ordinal":
                problems.append(
                    "--latent-dim is incompatible with ordinal attributes"
                )
        if args.export_latent and args.latent_dim is None:
            problems.append("--export-latent requires --latent-dim")
        if args.iters <= args.burn_in:
            problems.append(
                f"--iters ({args.iters}) must exceed --burn-in ({args.burn_in})"
            )
        if args.thin < 1:
            problems.append("--thin must be >= 1")
        if args.chains < 1:
            problems.append("--chains must be >= 1")
        if args.initial_state and not (args.dyad_covariates or
                                       args.node_covariates):
            # saturated initial intercepts are allowed; just flag nothing
            pass
    if cmd == "diagnose":
        _check_files(args, ["samples", "network", "attributes",
                            "dyad-covariates", "node-covariates"], problems)
        probs = _parse_float_list(args.probs, "probs", problems)
        if probs and any(not 0 < q < 1 for q in probs):
            problems.append("--probs must lie strictly in (0, 1)")
        if args.attributes and not args.network:
            problems.append("--attributes requires --network for decomposition")
    if cmd == "forecast-study":
        _parse_float_list(args.holdouts, "holdouts", problems)
        if args.estimator == "bayes" and args.iters <= args.burn_in:
            problems.append("--iters must exceed --burn-in")
    if problems:
        raise ValidationError(problems)
    return args


def _load_dataset(args, need_attributes=False):
    network = cio.load_network_csv(
        args.network, directed=args.directed, dense_zero=args.dense_zero
    )
    m = network.m
    if args.attributes:
        attributes = cio.load_attributes_csv(args.attributes)
        if attributes.m != m or attributes.n_plus_1 != network.n_plus_1:
            raise ValidationError(
                f"attribute dimensions (m={attributes.m}, "
                f"T={attributes.n_plus_1}) do not match the network "
                f"(m={m}, T={network.n_plus_1})"
            )
    elif need_attributes:
        raise ValidationError("--attributes is required for this command")
    else:
        attributes = AttributeSeries.empty(network.n_plus_1, m)
    dyad = node = None
    if args.dyad_covariates:
        dyad = cio.load_dyad_covariates_csv(args.dyad_covariates, m,
                                            args.directed)
    if args.node_covariates:
        node = cio.load_node_covariates_csv(args.node_covariates, m)
    covariates = CovariateSpec(dyad=dyad, node=node)
    n_missing = 0
    if network.missing is not None:
        n_missing += int(network.missing.sum())
    if attributes.missing is not None:
        n_missing += int(attributes.missing.sum())
    print(
        f"loaded m={m} nodes, {network.n_plus_1} time points, "
        f"p={attributes.p} attributes, {n_missing} missing entries"
    )
    return network, attributes, covariates


def cmd_simulate(args):
    params, raw = cio.load_params_json(args.params, m=args.m)
    mode = ModelMode(
        direction="directed" if raw.get("directed") else "undirected",
        network_scale=raw.get("network_scale", "gaussian"),
        attribute_scale=raw.get("attribute_scale", "gaussian"),
    )
    if params.p != args.p:
        raise ValidationError(
            f"--p={args.p} does not match params file (p={params.p})"
        )
    dyad = node = None
    if args.dyad_covariates:
        dyad = cio.load_dyad_covariates_csv(args.dyad_covariates, args.m,
                                            mode.directed)
    if args.node_covariates:
        node = cio.load_node_covariates_csv(args.node_covariates, args.m)
    covariates = CovariateSpec(dyad=dyad, node=node)
    network_cuts = raw.get("network_cuts")
    attribute_cuts = raw.get("attribute_cuts")
    config = SimConfig(
        m=args.m, n=args.n, params=params, mode=mode, covariates=covariates,
        seed=args.seed, init_burn_in=args.init_burn_in,
        network_cuts=None if network_cuts is None else np.asarray(network_cuts),
        attribute_cuts=None if attribute_cuts is None
        else [np.asarray(c) for c in attribute_cuts],
    )
    network, attributes, _ = simulate(config)
    cio.write_network_csv(f"{args.out_prefix}_network.csv", network)
    out = [f"{args.out_prefix}_network.csv"]
    if attributes.p:
        cio.write_attributes_csv(f"{args.out_prefix}_attributes.csv",
                                 attributes)
        out.append(f"{args.out_prefix}_attributes.csv")
    print("wrote " + " and ".join(out))
    return EXIT_OK


def cmd_fit_mle(args):
    network, attributes, covariates = _load_dataset(args)
    mode = ModelMode(direction="directed" if args.directed else "undirected")
    fit = fit_mle(network, attributes, covariates, mode,
                  allow_singular=args.allow_singular)
    report = {
        "mode": {"direction": mode.direction,
                 "network_scale": "gaussian",
                 "attribute_scale": "gaussian"},
        "m": network.m,
        "n_transitions": network.n_transitions,
        "params": cio.params_to_dict(fit.params),
        "rss_network": fit.rss_network,
        "rss_attributes": np.asarray(fit.rss_attributes).flatten(
            order="F").tolist(),
        "dyad_count": fit.dyad_count,
        "node_time_count": fit.node_time_count,
        "condition_numbers": {
            "network": fit.network_condition,
            "attributes": fit.attribute_condition,
        },
    }
    cio.dump_json(report, args.out)
    print(f"wrote {args.out} (alpha1={fit.params.alpha1:+.4f}, "
          f"sigma2={fit.params.sigma2:.4f})")
    return EXIT_OK


def cmd_fit_bayes(args):
    network, attributes, covariates = _load_dataset(args)
    prior = cio.load_prior_json(args.prior) if args.prior else PriorSpec()
    threads = _threads(args)
    common = dict(
        covariates=covariates, prior=prior, iters=args.iters,
        burn_in=args.burn_in, thin=args.thin, seed=args.seed,
        chains=args.chains, threads=threads,
    )
    if args.latent_dim is not None:
        if args.network_scale == "ordinal":
            mode = ModelMode(direction="undirected", network_scale="ordinal",
                             attribute_scale="latent")
            samples = fit_ordinal(
                network, None, mode=mode, latent_dim=args.latent_dim,
                ordinal_mode=args.ordinal_mode,
                network_levels=_levels(args.network_levels),
                initial_state=args.initial_state,
                x0_anchor=not args.x0_flat, **common,
            )
        else:
            samples = fit_latent(network, args.latent_dim,
                                 x0_anchor=not args.x0_flat, **common)
    elif args.network_scale == "gaussian" and args.attribute_scale == "gaussian" \
            and not network.has_missing() and not attributes.has_missing():
        mode = ModelMode(direction="directed" if args.directed else "undirected")
        samples = run_chain(network, attributes, mode=mode, **common)
    else:
        mode = ModelMode(
            direction="directed" if args.directed else "undirected",
            network_scale=args.network_scale,
            attribute_scale=args.attribute_scale,
        )
        samples = fit_ordinal(
            network, attributes, mode=mode,
            ordinal_mode=args.ordinal_mode,
            network_levels=_levels(args.network_levels),
            attribute_levels=_attr_levels(args.attribute_levels, attributes.p),
            initial_state=args.initial_state, **common,
        )
    cio.samples_to_ndjson(samples, args.out)
    print(f"wrote {samples.n_draws} draws to {args.out}")
    if args.export_latent:
        aligned = align_latent_draws(samples)
        cio.write_latent_trajectories_csv(
            args.export_latent, aligned.latent.mean(axis=0)
        )
        print(f"wrote {args.export_latent}")
    return EXIT_OK


def _levels(text):
    if not text:
        return None
    return [float(x) for x in text.split(",")]


def _attr_levels(text, p):
    if not text:
        return None
    parts = text.split(";")
    if len(parts) == 1 and p > 1:
        parts = parts * p
    if len(parts) != p:
        raise ValidationError(
            f"--attribute-levels needs {p} ';'-separated lists, got {len(parts)}"
        )
    return [[float(x) for x in part.split(",")] for part in parts]


def cmd_diagnose(args):
    samples = cio.samples_from_ndjson(args.samples)
    probs = [float(x) for x in args.probs.split(",")]
    chains = samples.scalar_chains()
    quants = posterior_quantiles(samples, probs)
    import warnings as _warnings

    ess = {}
    with _warnings.catch_warnings():
        _warnings.simplefilter("ignore")
        for name, arr in chains.items():
            if arr.size >= 100:
                ess[name] = effective_sample_size(arr)
    report = {
        "n_draws": samples.n_draws,
        "quantile_probs": probs,
        "quantiles": {k: v.tolist() for k, v in quants.items()},
        "ess": ess,
        "average_ess": float(np.mean(list(ess.values()))) if ess else None,
    }
    header = "parameter".ljust(16) + "".join(f"{q:>12.3%}" for q in probs) \
        + "         ESS"
    print(header)
    for name in sorted(quants):
        row = name.ljust(16) + "".join(f"{v:12.4f}" for v in quants[name])
        row += f"{ess.get(name, float('nan')):12.1f}"
        print(row)
    if report["average_ess"] is not None:
        print(f"average ESS across parameters: {report['average_ess']:.1f}")
    if args.network:
        network, attributes, covariates = _load_dataset(args)
        mode = ModelMode(
            direction="directed" if args.directed else "undirected"
        )
        dec = sum_of_squares_decomposition(
            samples, network, attributes, mode, covariates
        )
        report["decomposition"] = {
            "network": dec.network,
            "attributes": dec.attributes,
        }
        print("network SS%: " + ", ".join(
            f"{k}={v:.1f}" for k, v in dec.network.items()))
        if dec.attributes:
            print("attribute SS%: " + ", ".join(
                f"{k}={v:.1f}" for k, v in dec.attributes.items()))
    if args.out:
        cio.dump_json(report, args.out)
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_forecast_study(args):
    network, attributes, covariates = _load_dataset(args)
    mode = ModelMode(direction="directed" if args.directed else "undirected")
    holdouts = [int(float(x)) for x in args.holdouts.split(",")]
    comparison = forecast_study(
        network, attributes, holdouts, mode, covariates,
        estimator=args.estimator,
        mcmc={"iters": args.iters, "burn_in": args.burn_in,
              "seed": args.seed},
    )
    report = {
        "holdout_times": comparison.holdout_times,
        "pess": {k: v.tolist() for k, v in comparison.pess.items()},
        "relative_pct": comparison.relative_pct,
        "summary": comparison.summary,
    }
    cio.dump_json(report, args.out)
    for name in ("no_contagion", "no_ar", "neither"):
        print(f"{name}: {comparison.summary[name]} than the full model "
              "on average")
    print(f"wrote {args.out}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "fit-mle": cmd_fit_mle,
    "fit-bayes": cmd_fit_bayes,
    "diagnose": cmd_diagnose,
    "forecast-study": cmd_forecast_study,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        validate_args(args)
        return COMMANDS[args.command](args)
    except (ValidationError, CoevError) as exc:
        if isinstance(exc, NumericalError):
            print(f"numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        violations = getattr(exc, "violations", [str(exc)])
        for v in violations:
            print(f"error: {v}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

"""Batch command-line interface.

Subcommands
-----------
analyze   -- validation residuals, invariant state, irreducibility and gap
             diagnostics, pseudoresolvent norms, block decomposition.
bound     -- evaluate a bound flavor over an (n or t) x gamma grid.
simulate  -- Monte Carlo tails / counting records, optional trajectory dump.
verify    -- bounds against exact DP or Monte Carlo tails, with dominance
             verdicts per grid point.

Reports are emitted as a single JSON document (``--format structured``,
default) or as CSV rows with the fixed header

    flavor,horizon,gamma,bound,exponent,valid,reason,tail,tail_kind,ci_low,ci_high,verdict

Every randomized command echoes its seed; rerunning with the same arguments
reproduces the report byte for byte.  Exit codes: 0 success, 1 usage,
2 model parse failure, 3 hypothesis failure, 4 numerical runtime failure,
5 infeasible request.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__
from .bounds import (
    BoundConstants,
    BoundResult,
    bernstein_bound,
    bernstein_constants,
    confidence_lower_bound,
    counting_bound,
    counting_constants,
    hoeffding_bound,
    hoeffding_constants,
    multitime_hoeffding,
    reducible_bound,
    time_dependent_bernstein,
    time_dependent_hoeffding,
)
from .classical import (
    chain_pseudoresolvent_norm,
    exact_flux_tail,
    flux_bernstein,
    flux_hoeffding,
    is_chain_irreducible,
    stationary_distribution,
)
from .fixtures import ring_channel
from .modelfile import Model, ModelParseError, load_model, parse_complex_matrix
from .operators import DensityMatrix, validate_channel
from .spectral import (
    FixedSpaceError,
    HypothesisError,
    InconclusiveIrreducibilityError,
    additive_gap_report,
    decompose_invariant_subspaces,
    gkls_steady_state,
    invariant_state,
    is_irreducible,
    is_primitive,
    multiplicative_gap_report,
    pseudoresolvent_norm,
)
from .trajectory import (
    FilterCollapseError,
    LatticeError,
    SurvivalMonotonicityError,
    mc_counting_tail,
    mc_tail,
    sample_counting,
    sample_discrete,
    score_distribution_dp,
    counting_counts,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_HYPOTHESIS = 3
EXIT_NUMERIC = 4
EXIT_INFEASIBLE = 5

CSV_HEADER = ["flavor", "horizon", "gamma", "bound", "exponent", "valid", "reason",
              "tail", "tail_kind", "ci_low", "ci_high", "verdict"]


class UsageError(ValueError):
    pass


class InfeasibleError(RuntimeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); usage failures are exit 1
        raise UsageError(message)


def _float_grid(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"bad grid {text!r}: {exc}") from exc


def _int_grid(text: str) -> list[int]:
    return [int(round(v)) for v in _float_grid(text)]


def _parse_tolerances(pairs: list[str]) -> dict:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise UsageError(f"--tolerance expects name=value, got {pair!r}")
        name, value = pair.split("=", 1)
        out[name.strip()] = float(value)
    return out


def _resolve_rho0(spec: str, model: Model):
    if spec == "stationary":
        if model.kind == "kraus":
            return invariant_state(model.channel).matrix
        if model.kind == "gkls":
            return gkls_steady_state(model.generator).matrix
        return stationary_distribution(model.chain)
    if spec == "maximally-mixed":
        if model.kind == "classical":
            return np.full(model.chain.size, 1.0 / model.chain.size)
        dim = model.channel.dim if model.kind == "kraus" else model.generator.dim
        return np.eye(dim) / dim
    with open(spec, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if model.kind == "classical":
        return np.asarray(doc, dtype=float)
    return DensityMatrix(parse_complex_matrix(doc, "$")).matrix


def _constants_dict(c: BoundConstants) -> dict:
    out = {}
    for name in ("b", "c", "epsilon", "n_rho", "g", "m", "alpha"):
        value = getattr(c, name)
        if value is not None:
            out[name] = float(value)
    out["hypothesis_ok"] = bool(c.hypothesis_ok)
    if c.g is not None:
        out["g_provenance"] = c.g_provenance
    if c.note:
        out["note"] = c.note
    return out


def _result_row(res: BoundResult, tail=None, tail_kind="", ci=(None, None),
                verdict=None) -> dict:
    return {
        "flavor": res.flavor,
        "horizon": res.horizon,
        "gamma": res.gamma,
        "bound": res.probability_bound,
        "exponent": res.exponent if np.isfinite(res.exponent) else None,
        "valid": res.valid,
        "reason": res.reason,
        "tail": tail,
        "tail_kind": tail_kind,
        "ci_low": ci[0],
        "ci_high": ci[1],
        "verdict": verdict,
    }


def _emit(report: dict, fmt: str, output: str | None) -> None:
    if fmt == "structured":
        text = json.dumps(report, sort_keys=True, indent=2, default=_json_default) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_HEADER, extrasaction="ignore",
                                lineterminator="\n")
        writer.writeheader()
        for row in report.get("rows", []):
            writer.writerow({k: ("" if row.get(k) is None else row.get(k))
                             for k in CSV_HEADER})
        text = buf.getvalue()
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_default(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f"not JSON serializable: {type(value)!r}")


def _base_report(args, extra: dict | None = None) -> dict:
    # the echo carries every input that determines the emitted numbers; the
    # output destination does not, so reports are path-independent
    report = {
        "tool": "qmcbounds",
        "version": __version__,
        "command": {k: v for k, v in sorted(vars(args).items())
                    if k not in ("func", "output")},
        "rows": [],
    }
    if extra:
        report.update(extra)
    return report


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def _analyze_kraus(model: Model, diagnostics: dict) -> None:
    channel = model.channel
    validation = validate_channel(channel)
    diagnostics["channel_deviation"] = validation.max_deviation
    diagnostics["channel_ok"] = validation.passed
    try:
        sigma = invariant_state(channel)
        diagnostics["invariant_state_diagonal"] = np.diag(sigma.matrix).real.tolist()
        diagnostics["faithful"] = sigma.is_faithful()
        diagnostics["min_eigenvalue"] = sigma.min_eigenvalue()
        evidence = is_irreducible(channel)
        diagnostics["irreducible"] = evidence.irreducible
        diagnostics["radius_multiplicity"] = evidence.radius_multiplicity
        if evidence.irreducible:
            diagnostics["primitive"] = is_primitive(channel)
            gap = multiplicative_gap_report(channel, sigma)
            diagnostics["psi_irreducible"] = gap.irreducible
            diagnostics["epsilon_multiplicative"] = gap.epsilon
            norm = pseudoresolvent_norm(channel, sigma)
            diagnostics["pseudoresolvent_lower"] = norm.lower_estimate
            diagnostics["pseudoresolvent_certified"] = norm.certified_upper
    except FixedSpaceError as exc:
        diagnostics["irreducible"] = False
        diagnostics["fixed_space_dimension"] = exc.dimension
        decomposition = decompose_invariant_subspaces(channel)
        diagnostics["blocks"] = decomposition.blocks
        diagnostics["block_dimensions"] = [u.shape[1] for u in decomposition.isometries]
        diagnostics["commutation_residual"] = decomposition.commutation_residual


def _analyze_gkls(model: Model, diagnostics: dict) -> None:
    gen = model.generator
    diagnostics["generator_unitality_residual"] = gen.unitality_residual
    sigma = gkls_steady_state(gen)
    diagnostics["steady_state_diagonal"] = np.diag(sigma.matrix).real.tolist()
    diagnostics["faithful"] = sigma.is_faithful()
    report = additive_gap_report(gen, sigma)
    diagnostics["additive_irreducible"] = report.irreducible
    diagnostics["epsilon_additive"] = report.epsilon
    diagnostics["hamiltonian_commutes_with_steady_state"] = report.hamiltonian_commutes
    constants = counting_constants(gen, model.count_label, sigma=sigma)
    diagnostics["counting_constants"] = _constants_dict(constants)


def _analyze_classical(model: Model, diagnostics: dict) -> None:
    chain = model.chain
    diagnostics["irreducible"] = is_chain_irreducible(chain)
    if diagnostics["irreducible"]:
        sigma = stationary_distribution(chain)
        diagnostics["stationary"] = sigma.tolist()
        diagnostics["pseudoresolvent_certified"] = chain_pseudoresolvent_norm(chain, sigma)


def cmd_analyze(args) -> int:
    model = load_model(args.model, tol_channel=args.tolerances.get("channel", 1e-9))
    diagnostics: dict = {"kind": model.kind}
    failure = None
    try:
        if model.kind == "kraus":
            _analyze_kraus(model, diagnostics)
        elif model.kind == "gkls":
            _analyze_gkls(model, diagnostics)
        else:
            _analyze_classical(model, diagnostics)
    except (HypothesisError, FixedSpaceError, InconclusiveIrreducibilityError) as exc:
        # partial diagnostics are still emitted below
        failure = exc
        diagnostics["hypothesis_failure"] = str(exc)
    report = _base_report(args, {"diagnostics": diagnostics})
    report["rows"] = [{"flavor": "analyze", "reason": f"{k}={v}"}
                      for k, v in diagnostics.items()]
    _emit(report, args.format, args.output)
    if failure is not None:
        print(f"hypothesis failure: {failure}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    return EXIT_OK


# ---------------------------------------------------------------------------
# bound
# ---------------------------------------------------------------------------

def _need(value, what: str):
    if value is None:
        raise UsageError(f"this flavor requires {what}")
    return value


def cmd_bound(args) -> int:
    model = load_model(args.model, tol_channel=args.tolerances.get("channel", 1e-9))
    gammas = _float_grid(_need(args.gamma, "--gamma"))
    report = _base_report(args)
    rows = report["rows"]
    flavor = args.flavor
    two_sided = args.two_sided

    if flavor in ("bernstein", "hoeffding"):
        _need(model.channel, "a kraus model")
        f = _need(model.observation, "an observation section")
        ns = _int_grid(_need(args.n, "--n"))
        sigma = invariant_state(model.channel)
        rho0 = _resolve_rho0(args.rho0, model)
        if flavor == "bernstein":
            constants = bernstein_constants(model.channel, f, rho=rho0, sigma=sigma)
            if args.override_epsilon is not None:
                constants = _override_epsilon(constants, args.override_epsilon)
            evaluate = bernstein_bound
        else:
            constants = hoeffding_constants(model.channel, f, rho=rho0, sigma=sigma)
            evaluate = hoeffding_bound
        report["constants"] = _constants_dict(constants)
        for n in ns:
            for gamma in gammas:
                rows.append(_result_row(evaluate(constants, gamma, n, two_sided)))
    elif flavor == "counting":
        gen = _need(model.generator, "a gkls model")
        ts = _float_grid(_need(args.t, "--t"))
        sigma = gkls_steady_state(gen)
        rho0 = _resolve_rho0(args.rho0, model)
        constants = counting_constants(gen, model.count_label, rho=rho0, sigma=sigma)
        if args.override_epsilon is not None:
            constants = _override_epsilon(constants, args.override_epsilon)
        report["constants"] = _constants_dict(constants)
        for t in ts:
            for gamma in gammas:
                rows.append(_result_row(counting_bound(constants, gamma, t, two_sided)))
    elif flavor == "flux":
        chain = _need(model.chain, "a classical model")
        f = _need(model.flux, "a flux section")
        ns = _int_grid(_need(args.n, "--n"))
        nu = model.initial if model.initial is not None else stationary_distribution(chain)
        for n in ns:
            for gamma in gammas:
                rows.append(_result_row(flux_bernstein(chain, nu, f, gamma, n, two_sided)))
                rows.append(_result_row(flux_hoeffding(chain, f, gamma, n, two_sided)))
    elif flavor in ("tdm-bernstein", "tdm-hoeffding"):
        _need(model.channel, "a kraus model")
        if not model.schedule:
            raise UsageError("this flavor requires a schedule section in the model")
        ns = _int_grid(_need(args.n, "--n"))
        sigma = invariant_state(model.channel)
        rho0 = _resolve_rho0(args.rho0, model)
        for n in ns:
            steps = [model.schedule[k % len(model.schedule)] for k in range(n)]
            for gamma in gammas:
                if flavor == "tdm-bernstein":
                    res = time_dependent_bernstein(model.channel, steps, sigma.matrix,
                                                   rho0, gamma, two_sided)
                else:
                    res = time_dependent_hoeffding(model.channel, steps, sigma.matrix,
                                                   rho0, gamma, two_sided)
                rows.append(_result_row(res))
    elif flavor == "multitime":
        _need(model.channel, "a kraus model")
        windows = _need(model.observation_windows, "an observation_windows section")
        ns = _int_grid(_need(args.n, "--n"))
        sigma = invariant_state(model.channel)
        for n in ns:
            for gamma in gammas:
                rows.append(_result_row(multitime_hoeffding(
                    model.channel, sigma.matrix, windows, gamma, n, two_sided)))
    elif flavor == "reducible":
        _need(model.channel, "a kraus model")
        f = _need(model.observation, "an observation section")
        ns = _int_grid(_need(args.n, "--n"))
        rho0 = _resolve_rho0(args.rho0 if args.rho0 != "stationary" else "maximally-mixed",
                             model)
        decomposition = decompose_invariant_subspaces(model.channel)
        report["blocks"] = decomposition.blocks
        for n in ns:
            for gamma in gammas:
                for sub in ("bernstein", "hoeffding"):
                    mix = reducible_bound(decomposition, rho0, f, gamma, n, flavor=sub)
                    rows.append({
                        "flavor": f"reducible-{sub}",
                        "horizon": n, "gamma": gamma,
                        "bound": mix.mixture_bound,
                        "exponent": None, "valid": True,
                        "reason": f"mixture of {decomposition.blocks} blocks, "
                                  f"weights {np.round(mix.weights, 6).tolist()}",
                        "tail": None, "tail_kind": "", "ci_low": None,
                        "ci_high": None, "verdict": None,
                    })
    elif flavor == "ci":
        _need(model.channel, "a kraus model")
        ns = _int_grid(_need(args.n, "--n"))
        thetas = model.parameter_grid if model.parameter_grid else [None]
        for theta in thetas:
            if theta is None:
                channel, f = model.channel, _need(model.observation, "an observation section")
            elif model.family == "ring-asymmetry":
                channel, f = ring_channel(float(theta))
            else:
                raise UsageError(f"unknown parameter family {model.family!r}")
            sigma = invariant_state(channel)
            berc = bernstein_constants(channel, f, sigma=sigma)
            hoec = hoeffding_constants(channel, f, sigma=sigma)
            for n in ns:
                for gamma in gammas:
                    ber = bernstein_bound(berc, gamma, n)
                    hoe = hoeffding_bound(hoec, gamma, n)
                    coverage = confidence_lower_bound(n, gamma, ber, hoe)
                    rows.append({
                        "flavor": "ci", "horizon": n, "gamma": gamma,
                        "bound": coverage, "exponent": None, "valid": True,
                        "reason": ("" if theta is None else f"theta={theta}"),
                        "tail": None, "tail_kind": "", "ci_low": None,
                        "ci_high": None, "verdict": None,
                    })
    else:
        raise UsageError(f"unknown flavor {flavor!r}")
    _emit(report, args.format, args.output)
    return EXIT_OK


def _override_epsilon(constants: BoundConstants, value: float) -> BoundConstants:
    from dataclasses import replace
    return replace(constants, epsilon=value,
                   note=(constants.note + "; " if constants.note else "")
                   + f"epsilon overridden to {value} (negative control)")


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    if args.trials is not None and args.trials < 1:
        raise UsageError("--trials must be >= 1")
    model = load_model(args.model, tol_channel=args.tolerances.get("channel", 1e-9))
    trials = args.trials or 1000
    seed = args.seed
    report = _base_report(args, {"seed": seed})
    rows = report["rows"]
    gammas = _float_grid(args.gamma) if args.gamma else []
    rho0 = _resolve_rho0(args.rho0, model)

    if model.kind == "kraus":
        n = _int_grid(_need(args.n, "--n"))[0]
        f = model.observation
        for gamma in gammas:
            tail = mc_tail(model.channel, rho0, _need(f, "an observation section"),
                           n, gamma, trials, seed)
            rows.append({
                "flavor": "simulate", "horizon": n, "gamma": gamma,
                "bound": None, "exponent": None, "valid": True, "reason": "",
                "tail": tail.estimate, "tail_kind": "mc",
                "ci_low": tail.ci_low, "ci_high": tail.ci_high, "verdict": None,
            })
        if args.dump:
            with open(args.dump, "w", encoding="utf-8") as fh:
                for idx in range(trials):
                    rec = sample_discrete(model.channel, rho0, n, seed, index=idx)
                    fh.write(json.dumps({"seed": seed, "index": idx,
                                         "outcomes": list(rec.outcomes)},
                                        sort_keys=True) + "\n")
    elif model.kind == "gkls":
        t = _float_grid(_need(args.t, "--t"))[0]
        gen = model.generator
        sigma = gkls_steady_state(gen)
        constants = counting_constants(gen, model.count_label, sigma=sigma)
        counts = counting_counts(gen, rho0, t, trials, seed)
        col = gen.index(model.count_label)
        rate = counts[:, col] / t
        report["empirical_rate"] = float(rate.mean())
        report["empirical_rate_stderr"] = float(rate.std(ddof=1) / np.sqrt(trials))
        report["stationary_intensity"] = constants.m
        for gamma in gammas:
            hits = int(np.sum(rate - constants.m >= gamma - 1e-12))
            from .trajectory import wilson_interval
            low, high = wilson_interval(hits, trials)
            rows.append({
                "flavor": "simulate-counting", "horizon": t, "gamma": gamma,
                "bound": None, "exponent": None, "valid": True, "reason": "",
                "tail": hits / trials, "tail_kind": "mc",
                "ci_low": low, "ci_high": high, "verdict": None,
            })
        if args.dump:
            with open(args.dump, "w", encoding="utf-8") as fh:
                for idx in range(trials):
                    rec = sample_counting(gen, rho0, t, seed, index=idx)
                    fh.write(json.dumps({
                        "seed": seed, "index": idx,
                        "events": [[time, str(lab)] for time, lab in rec.events]},
                        sort_keys=True) + "\n")
    else:
        raise UsageError("simulate supports kraus and gkls models")
    _emit(report, args.format, args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _dp_feasible(channel, f, n: int) -> bool:
    try:
        from .trajectory import _score_lattice
        from .operators import observation_vector
        nums, _ = _score_lattice(observation_vector(f, channel.labels))
        span = int(nums.max() - nums.min()) if len(nums) else 0
        return n * (span * n + 1) * len(channel.kraus) <= 4_000_000
    except LatticeError:
        return False


def cmd_verify(args) -> int:
    model = load_model(args.model, tol_channel=args.tolerances.get("channel", 1e-9))
    gammas = _float_grid(_need(args.gamma, "--gamma"))
    seed = args.seed
    report = _base_report(args, {"seed": seed})
    rows = report["rows"]
    failures = 0
    flavor = args.flavor

    if flavor in ("bernstein", "hoeffding"):
        channel = _need(model.channel, "a kraus model")
        f = _need(model.observation, "an observation section")
        ns = _int_grid(_need(args.n, "--n"))
        sigma = invariant_state(channel)
        rho0 = _resolve_rho0(args.rho0, model)
        if flavor == "bernstein":
            constants = bernstein_constants(channel, f, rho=rho0, sigma=sigma)
            if args.override_epsilon is not None:
                constants = _override_epsilon(constants, args.override_epsilon)
            evaluate = bernstein_bound
        else:
            constants = hoeffding_constants(channel, f, rho=rho0, sigma=sigma)
            evaluate = hoeffding_bound
        report["constants"] = _constants_dict(constants)
        for n in ns:
            use_dp = _dp_feasible(channel, f, n)
            if not use_dp and not args.mc:
                raise InfeasibleError(
                    f"exact tail at n={n} is infeasible and --mc was not given")
            if use_dp:
                dist = score_distribution_dp(channel, rho0, f, n)
            for gamma in gammas:
                res = evaluate(constants, gamma, n, args.two_sided)
                if use_dp:
                    tail = dist.tail(gamma)
                    verdict = bool(res.probability_bound >= tail - 1e-12)
                    rows.append(_result_row(res, tail=tail, tail_kind="dp",
                                            verdict=verdict))
                else:
                    mc = mc_tail(channel, rho0, f, n, gamma, args.trials, seed)
                    verdict = bool(res.probability_bound >= mc.ci_high)
                    rows.append(_result_row(res, tail=mc.estimate, tail_kind="mc",
                                            ci=(mc.ci_low, mc.ci_high), verdict=verdict))
                failures += not rows[-1]["verdict"]
    elif flavor == "counting":
        gen = _need(model.generator, "a gkls model")
        ts = _float_grid(_need(args.t, "--t"))
        sigma = gkls_steady_state(gen)
        rho0 = _resolve_rho0(args.rho0, model)
        constants = counting_constants(gen, model.count_label, rho=rho0, sigma=sigma)
        if args.override_epsilon is not None:
            constants = _override_epsilon(constants, args.override_epsilon)
        report["constants"] = _constants_dict(constants)
        for t in ts:
            for gamma in gammas:
                res = counting_bound(constants, gamma, t, args.two_sided)
                mc = mc_counting_tail(gen, model.count_label, rho0, t, gamma,
                                      args.trials, seed, m=constants.m)
                verdict = bool(res.probability_bound >= mc.ci_high)
                rows.append(_result_row(res, tail=mc.estimate, tail_kind="mc",
                                        ci=(mc.ci_low, mc.ci_high), verdict=verdict))
                failures += not verdict
    elif flavor == "flux":
        chain = _need(model.chain, "a classical model")
        f = _need(model.flux, "a flux section")
        ns = _int_grid(_need(args.n, "--n"))
        nu = model.initial if model.initial is not None else stationary_distribution(chain)
        from .classical import edge_stationary_law, flux_matrix
        mean = float(np.sum(edge_stationary_law(chain) * flux_matrix(f, chain)))
        for n in ns:
            for gamma in gammas:
                tail = exact_flux_tail(chain, nu, f, n, mean + gamma)
                for res in (flux_bernstein(chain, nu, f, gamma, n, args.two_sided),
                            flux_hoeffding(chain, f, gamma, n, args.two_sided)):
                    verdict = bool(res.probability_bound >= tail - 1e-12)
                    rows.append(_result_row(res, tail=tail, tail_kind="dp",
                                            verdict=verdict))
                    failures += not verdict
    else:
        raise UsageError(f"verify does not support flavor {flavor!r}")
    report["summary"] = {"checked": len(rows), "violations": failures,
                         "overall": "pass" if failures == 0 else "fail"}
    _emit(report, args.format, args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--model", required=True, help="path to a JSON model file")
    sub.add_argument("--format", choices=("csv", "structured"), default="structured")
    sub.add_argument("--output", default=None, help="write the report to this path")
    sub.add_argument("--tolerance", action="append", default=[], metavar="NAME=VALUE",
                     help="override a named tolerance (e.g. channel=1e-8)")


def build_parser() -> _Parser:
    parser = _Parser(prog="qmcbounds",
                     description="Concentration bounds for quantum Markov chain "
                                 "output statistics, with exact and Monte Carlo "
                                 "tail validation.")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p_analyze = subs.add_parser("analyze", help="model diagnostics")
    _add_common(p_analyze)
    p_analyze.set_defaults(func=cmd_analyze)

    p_bound = subs.add_parser("bound", help="evaluate bounds over a grid")
    _add_common(p_bound)
    p_bound.add_argument("--flavor", required=True,
                         choices=("bernstein", "hoeffding", "counting", "flux",
                                  "tdm-bernstein", "tdm-hoeffding", "multitime",
                                  "reducible", "ci"))
    p_bound.add_argument("--n", default=None, help="comma grid of step counts")
    p_bound.add_argument("--t", default=None, help="comma grid of horizons")
    p_bound.add_argument("--gamma", default=None, help="comma grid of deviations")
    p_bound.add_argument("--rho0", default="stationary",
                         help="PATH | maximally-mixed | stationary")
    p_bound.add_argument("--two-sided", action="store_true", dest="two_sided")
    p_bound.add_argument("--override-epsilon", type=float, default=None,
                         dest="override_epsilon",
                         help="negative-control override of the spectral gap")
    p_bound.set_defaults(func=cmd_bound)

    p_sim = subs.add_parser("simulate", help="Monte Carlo tails and dumps")
    _add_common(p_sim)
    p_sim.add_argument("--n", default=None)
    p_sim.add_argument("--t", default=None)
    p_sim.add_argument("--gamma", default=None)
    p_sim.add_argument("--trials", type=int, default=None)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--rho0", default="stationary")
    p_sim.add_argument("--dump", default=None, help="write one JSON record per line")
    p_sim.set_defaults(func=cmd_simulate)

    p_verify = subs.add_parser("verify", help="dominance verdicts against tails")
    _add_common(p_verify)
    p_verify.add_argument("--flavor", required=True,
                          choices=("bernstein", "hoeffding", "counting", "flux"))
    p_verify.add_argument("--n", default=None)
    p_verify.add_argument("--t", default=None)
    p_verify.add_argument("--gamma", default=None)
    p_verify.add_argument("--trials", type=int, default=2000)
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--rho0", default="stationary")
    p_verify.add_argument("--two-sided", action="store_true", dest="two_sided")
    p_verify.add_argument("--mc", action="store_true",
                          help="fall back to Monte Carlo when exact DP is infeasible")
    p_verify.add_argument("--override-epsilon", type=float, default=None,
                          dest="override_epsilon")
    p_verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.tolerances = _parse_tolerances(args.tolerance)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelParseError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (HypothesisError, FixedSpaceError, InconclusiveIrreducibilityError) as exc:
        print(f"hypothesis failure: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (FilterCollapseError, SurvivalMonotonicityError, LatticeError,
            OverflowError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InfeasibleError as exc:
        print(f"infeasible request: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())

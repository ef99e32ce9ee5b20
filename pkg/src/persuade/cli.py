"""Batch front-end: JSON configs in, machine-readable artifacts out.

Exit codes: 0 success, 2 invalid configuration, 3 solver non-convergence,
4 certificate failure (``verify`` with any failing entry).
"""

from __future__ import annotations

import hashlib
import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import diagnostics as diag
from .curves import ScalarCurve
from .errors import ConfigurationError, PersuadeError, PreconditionError, SolverError
from .linearized import first_order_action, info_relevance, solve_limit_partition
from .manifold import (
    Graph1D,
    Hyperplane,
    PointCloudManifold,
    Sphere,
    apply_policy,
    hyperplane_policy,
    solve_curve_2d,
    sphere_policy,
)
from .model import (
    ComponentwisePolyMap,
    GaussianPrior,
    IdentityMap,
    LinearMap,
    MixturePrior,
    MomentReceiver,
    ProblemSpec,
    MultiProductUtility,
    ProductAcceptanceUtility,
    QuadraticUtility,
    RadialScaledMap,
    RadialUtility,
    TabulatedPrior,
    UniformBoxPrior,
    build_cloud,
)
from .oracle import convex_majorant_value_1d, enumerate_partitions
from .partition import optimize_partition, policy_value

CSV_VERSION = 1


# ---------------------------------------------------------------------------
# config parsing


def _parse_curve(spec):
    kind = spec.get("kind", "poly")
    if kind == "poly":
        return ScalarCurve.from_poly(spec["coeffs"])
    if kind == "table":
        return ScalarCurve.from_table(spec["x"], spec["y"])
    if kind == "csv":
        return ScalarCurve.from_csv(spec["path"])
    if kind == "identity":
        return ScalarCurve.identity()
    raise ConfigurationError(f"unknown curve kind {kind!r}")


def _parse_prior(spec):
    kind = spec["kind"]
    if kind == "gaussian":
        return GaussianPrior(spec["mean"], spec["covariance"])
    if kind == "uniform-box":
        return UniformBoxPrior(spec["lo"], spec["hi"])
    if kind == "mixture":
        comps = [(c["mean"], c["covariance"]) for c in spec["components"]]
        return MixturePrior(spec["weights"], comps)
    if kind == "tabulated":
        return TabulatedPrior(spec["points"], spec["weights"])
    raise ConfigurationError(f"unknown prior kind {kind!r}")


def _parse_moment_map(spec, state_dim):
    kind = spec.get("kind", "identity")
    if kind == "identity":
        return IdentityMap(state_dim)
    if kind == "linear":
        return LinearMap(spec["B"])
    if kind == "radial-scaled":
        return RadialScaledMap(state_dim, _parse_curve(spec["psi"]))
    if kind == "componentwise-poly":
        return ComponentwisePolyMap([_parse_curve(c) for c in spec["curves"]])
    raise ConfigurationError(f"unknown moment map kind {kind!r}")


def _parse_utility(spec):
    kind = spec["kind"]
    if kind == "quadratic":
        return QuadraticUtility(spec["H"], spec.get("h"))
    if kind == "product-acceptance":
        return ProductAcceptanceUtility([_parse_curve(c) for c in spec["curves"]])
    if kind == "multi-product":
        return MultiProductUtility([_parse_curve(c) for c in spec["curves"]])
    if kind == "radial":
        return RadialUtility(spec["H"], _parse_curve(spec["phi"]))
    raise ConfigurationError(f"unknown utility kind {kind!r}")


def _parse_manifold(spec):
    kind = spec["kind"]
    if kind == "hyperplane":
        return Hyperplane(spec["A"], extent=spec.get("extent", 6.0))
    if kind == "sphere":
        return Sphere(spec["center"], spec["radius"])
    if kind == "graph1d":
        return Graph1D(spec["theta"], spec["phi"])
    if kind == "point-cloud":
        return PointCloudManifold(spec["points"])
    raise ConfigurationError(f"unknown manifold kind {kind!r}")


def build_problem(cfg) -> ProblemSpec:
    pspec = cfg["problem"]
    state_dim = int(pspec["state_dim"])
    action_dim = int(pspec["action_dim"])
    prior = _parse_prior(pspec["prior"])
    mmap = _parse_moment_map(pspec.get("moment_map", {}), state_dim)
    utility = _parse_utility(pspec["utility"])
    rspec = pspec.get("receiver", {"kind": "moment"})
    if rspec.get("kind", "moment") != "moment":
        raise ConfigurationError(
            "general receivers need a callable evaluator; use the library API"
        )
    return ProblemSpec(
        state_dim, action_dim, prior, mmap, utility, MomentReceiver(mmap)
    )


def load_config(path, overrides):
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    for key, value in overrides:
        _apply_override(cfg, key, value)
    return cfg


def _apply_override(cfg, dotted, raw):
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = cfg
    parts = dotted.split(".")
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = value


def config_hash(cfg) -> str:
    return hashlib.sha256(
        json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()


def _sampling(cfg, seed_override):
    s = cfg.get("sampling", {})
    n = int(s.get("particles", 10_000))
    seed = int(seed_override if seed_override is not None else s.get("seed", 0))
    mode = s.get("mode", "sample")
    return n, seed, mode


# ---------------------------------------------------------------------------
# artifact writers


def _fmt(v) -> str:
    return repr(float(v))


def write_assignments(path, cloud, labels, actions):
    L = cloud.dim
    M = actions.shape[1]
    head = (
        [f"omega_{i}" for i in range(L)] + ["label"] + [f"action_{i}" for i in range(M)]
    )
    lines = [f"# assignments-csv/{CSV_VERSION}", ",".join(head)]
    for i in range(cloud.n):
        row = (
            [_fmt(x) for x in cloud.points[i]]
            + [str(int(labels[i]))]
            + [_fmt(x) for x in actions[i]]
        )
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def write_manifold_csv(path, manifold):
    lines = [f"# manifold-csv/{CSV_VERSION}"]
    if isinstance(manifold, Graph1D):
        lines.append("theta,node_0,node_1")
        for t, p in zip(manifold.theta, manifold.phi):
            lines.append(",".join([_fmt(t), _fmt(p), _fmt(t)]))
    else:
        pts = manifold.discretize()
        lines.append(",".join(["theta"] + [f"node_{i}" for i in range(pts.shape[1])]))
        for i, p in enumerate(pts):
            lines.append(",".join([str(i)] + [_fmt(x) for x in p]))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def write_report(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_diagnostics(path, report):
    Path(path).write_text(json.dumps(report.to_json(), indent=2) + "\n")


# ---------------------------------------------------------------------------
# commands


@click.group()
def main():
    """Bayesian persuasion solve / verify batch runner."""


def _common(fn):
    fn = click.option("--config", "config_path", required=True, type=click.Path())(fn)
    fn = click.option("--out", "out_dir", required=True, type=click.Path())(fn)
    fn = click.option("--seed", type=int, default=None, help="override sampling seed")(
        fn
    )
    fn = click.option("--threads", type=int, default=1, help="worker cap (recorded)")(
        fn
    )
    fn = click.option(
        "--set",
        "overrides",
        multiple=True,
        metavar="KEY=VALUE",
        help="dotted-path config override",
    )(fn)
    return fn


def _run_command(name, config_path, out_dir, seed, threads, overrides, body):
    t0 = time.perf_counter()
    try:
        pairs = []
        for ov in overrides:
            if "=" not in ov:
                raise ConfigurationError(f"override {ov!r} is not KEY=VALUE")
            k, _, v = ov.partition("=")
            pairs.append((k, v))
        cfg = load_config(config_path, pairs)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        problem = build_problem(cfg)
        n, cfg_seed, mode = _sampling(cfg, seed)
        cloud = build_cloud(problem.prior, n, cfg_seed, mode)
        payload = {
            "command": name,
            "configHash": config_hash(cfg),
            "seed": cfg_seed,
            "particles": cloud.n,
            "threads": threads,
            "backend": __import__("persuade._kernels", fromlist=["backend_name"])
            .backend_name(),
        }
        code = body(cfg, problem, cloud, out, payload)
        payload["wallTimeSeconds"] = time.perf_counter() - t0
        write_report(out / "report.json", payload)
        sys.exit(code)
    except (ConfigurationError, PreconditionError, KeyError, TypeError) as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(2)
    except SolverError as exc:
        click.echo(f"solver error: {exc}", err=True)
        sys.exit(3)
    except PersuadeError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)


@main.command()
@_common
def solve(config_path, out_dir, seed, threads, overrides):
    """Optimize a K-signal partition."""

    def body(cfg, problem, cloud, out, payload):
        block = cfg.get("solve", {})
        state = optimize_partition(
            problem,
            cloud,
            K=int(block.get("K", 8)),
            restarts=int(block.get("restarts", 8)),
            tol=float(block.get("tol", 1e-9)),
            max_iter=int(block.get("maxIter", 500)),
            seed=int(cfg.get("sampling", {}).get("seed", 0)),
        )
        payload["value"] = state.value
        payload["converged"] = bool(state.converged)
        payload["iterations"] = int(state.iterations)
        payload["K"] = int(state.K)
        write_assignments(
            out / "assignments.csv", cloud, state.labels, state.actions[state.labels]
        )
        return 0 if state.converged else 3

    _run_command("solve", config_path, out_dir, seed, threads, overrides, body)


@main.command()
@_common
def project(config_path, out_dir, seed, threads, overrides):
    """Apply a manifold projection policy."""

    def body(cfg, problem, cloud, out, payload):
        manifold = _parse_manifold(cfg["project"]["manifold"])
        actions = apply_policy(problem, manifold, cloud)
        value = policy_value(problem, cloud, actions)
        payload["value"] = value
        payload["converged"] = True
        labels = np.full(cloud.n, -1, dtype=np.int64)
        write_assignments(out / "assignments.csv", cloud, labels, actions)
        write_manifold_csv(out / "manifold.csv", manifold)
        return 0

    _run_command("project", config_path, out_dir, seed, threads, overrides, body)


@main.command()
@_common
def verify(config_path, out_dir, seed, threads, overrides):
    """Run optimality certificates; exit 4 on any failing entry."""

    def body(cfg, problem, cloud, out, payload):
        block = cfg.get("verify", {})
        checks = block.get("checks", ["maximality", "monotonicity"])
        tol = float(block.get("tolerance", 1e-6))
        report = diag.DiagnosticsReport()
        if "manifold" in block:
            manifold = _parse_manifold(block["manifold"])
            test_pts = diag.hull_test_points(
                problem, cloud, pairs=int(block.get("pairs", 10_000))
            )
            if "maximality" in checks:
                report.add(diag.verify_maximality(problem.utility, manifold, test_pts, tol))
            if "monotonicity" in checks:
                report.add(
                    diag.verify_monotonicity(
                        problem.utility, manifold.discretize()[:256], tol
                    )
                )
            if "ce-residual" in checks:
                actions = apply_policy(problem, manifold, cloud)
                report.add(
                    diag.ce_residual(
                        problem,
                        cloud,
                        actions,
                        bins=int(block.get("bins", 64)),
                        tol=float(block.get("ceTolerance", 0.02)),
                    )
                )
        if "solve" in block:
            sb = block["solve"]
            state = optimize_partition(
                problem,
                cloud,
                K=int(sb.get("K", 8)),
                restarts=int(sb.get("restarts", 8)),
                seed=int(cfg.get("sampling", {}).get("seed", 0)),
            )
            payload["value"] = state.value
            if "transport-optimality" in checks:
                report.add(diag.verify_transport_optimality(problem, cloud, state, tol))
            if "pool-inequality" in checks:
                report.add(diag.pool_inequality(problem, cloud, state, tol=tol))
            if "law-of-total-expectation" in checks:
                report.add(diag.law_of_total_expectation(problem, cloud, state))
            if "pool-dimension" in checks:
                report.add(diag.pool_dimension(problem, cloud, state))
        write_diagnostics(out / "diagnostics.json", report)
        payload["allPass"] = report.all_pass
        payload["converged"] = True
        return 0 if report.all_pass else 4

    _run_command("verify", config_path, out_dir, seed, threads, overrides, body)


@main.command("closed-form")
@_common
def closed_form(config_path, out_dir, seed, threads, overrides):
    """Hyperplane or sphere closed-form policy."""

    def body(cfg, problem, cloud, out, payload):
        kind = cfg.get("closedForm", {}).get("kind", "hyperplane")
        if kind == "hyperplane":
            if not isinstance(problem.utility, QuadraticUtility):
                raise ConfigurationError("hyperplane closed form needs quadratic W")
            manifold = hyperplane_policy(problem.utility.H, cloud.cov())
            payload["policyMatrix"] = manifold.A.tolist()
            actions = apply_policy(problem, manifold, cloud)
        elif kind == "sphere":
            res = sphere_policy(cloud, problem.utility, problem.moment_map)
            manifold = res.manifold
            payload["beta"] = res.beta
            payload["conditionHolds"] = bool(res.condition_holds)
            payload["worstSlack"] = res.worst_slack
            actions = apply_policy(problem, manifold, cloud)
        else:
            raise ConfigurationError(f"unknown closed form kind {kind!r}")
        payload["value"] = policy_value(problem, cloud, actions)
        payload["converged"] = True
        labels = np.full(cloud.n, -1, dtype=np.int64)
        write_assignments(out / "assignments.csv", cloud, labels, actions)
        write_manifold_csv(out / "manifold.csv", manifold)
        return 0

    _run_command("closed-form", config_path, out_dir, seed, threads, overrides, body)


@main.command()
@_common
def linearize(config_path, out_dir, seed, threads, overrides):
    """Small-uncertainty limit partition."""

    def body(cfg, problem, cloud, out, payload):
        block = cfg.get("linearize", {})
        eps = float(block.get("eps", 0.05))
        ir = info_relevance(problem)
        state = solve_limit_partition(
            ir,
            cloud,
            K=int(block.get("K", 4)),
            restarts=int(block.get("restarts", 8)),
            seed=int(cfg.get("sampling", {}).get("seed", 0)),
        )
        payload["Dmat"] = ir.Dmat.tolist()
        payload["Gmat"] = ir.Gmat.tolist()
        payload["steadyAction"] = ir.steady_action.tolist()
        payload["surrogateValue"] = state.value
        payload["converged"] = bool(state.converged)
        actions = np.stack(
            [first_order_action(ir, m1, eps) for m1 in state.actions]
        )
        write_assignments(
            out / "assignments.csv", cloud, state.labels, actions[state.labels]
        )
        return 0 if state.converged else 3

    _run_command("linearize", config_path, out_dir, seed, threads, overrides, body)


@main.command()
@_common
def oracle(config_path, out_dir, seed, threads, overrides):
    """Exhaustive enumeration or 1-D convex majorant."""

    def body(cfg, problem, cloud, out, payload):
        block = cfg.get("oracle", {})
        method = block.get("method", "exhaustive")
        if method == "exhaustive":
            res = enumerate_partitions(problem, cloud, int(block.get("K", 2)))
            payload["bestValue"] = res.best_value
            payload["enumerated"] = res.enumerated_count
            payload["converged"] = True
            actions_k, *_ = _labels_to_actions(problem, cloud, res.best_labels)
            write_assignments(
                out / "assignments.csv", cloud, res.best_labels, actions_k
            )
        elif method == "majorant":
            if problem.action_dim != 1:
                raise ConfigurationError("majorant oracle needs a 1-D action space")
            g = problem.g_values(cloud)[:, 0]
            order = np.argsort(g, kind="stable")
            x = g[order]
            payload["bestValue"] = convex_majorant_value_1d(
                x, cloud.weights[order], problem.utility.value_many(x[:, None])
            )
            payload["converged"] = True
        else:
            raise ConfigurationError(f"unknown oracle method {method!r}")
        return 0

    _run_command("oracle", config_path, out_dir, seed, threads, overrides, body)


def _labels_to_actions(problem, cloud, labels):
    from .partition import _solve_cells

    k = int(labels.max()) + 1
    actions, xs, masses, _ = _solve_cells(problem, cloud, labels, k)
    return actions[labels], xs, masses


@main.command()
@_common
def pools(config_path, out_dir, seed, threads, overrides):
    """Pool-slope coefficients along a solved 2-D curve (single-type model)."""

    def body(cfg, problem, cloud, out, payload):
        block = cfg.get("pools", {})
        if block.get("variant", "single") != "single":
            raise ConfigurationError(
                "only the 'single' variant is runnable from config; "
                "multi-type and multi-product run through the library API"
            )
        if not isinstance(problem.utility, ProductAcceptanceUtility) or len(
            problem.utility.curves
        ) != 1:
            raise ConfigurationError(
                "single-type pool coefficients need a one-curve product utility"
            )
        curve_manifold, info = solve_curve_2d(
            problem,
            cloud,
            n_nodes=int(block.get("nodes", 33)),
            tol=float(block.get("tol", 1e-3)),
            max_iter=int(block.get("maxIter", 200)),
        )
        coeffs = diag.application_pool_coeffs(
            "single",
            theta=curve_manifold.theta,
            f_vals=curve_manifold.phi,
            curve=problem.utility.curves[0],
        )
        payload["kappa1"] = coeffs["kappa1"].tolist()
        payload["kappa2"] = coeffs["kappa2"].tolist()
        payload["converged"] = bool(info.converged)
        payload["curveResidual"] = info.residual
        report = diag.DiagnosticsReport()
        report.add(coeffs["entry"])
        write_diagnostics(out / "diagnostics.json", report)
        write_manifold_csv(out / "manifold.csv", curve_manifold)
        if not info.converged:
            return 3
        return 0 if report.all_pass else 4

    _run_command("pools", config_path, out_dir, seed, threads, overrides, body)


if __name__ == "__main__":
    main()

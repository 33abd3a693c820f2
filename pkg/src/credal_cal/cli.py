"""
Command-line interface: ``credal-cal simulate|merge|test|null-dist|sampling-demo``.

Every command writes into ``--out-dir`` and records its configuration in
``manifest.json``.  CSV and JSON outputs depend only on the arguments and the
seed, not on the worker count; wall-clock timings go to ``timing.json``.

Exit codes: 0 ran, 2 usage error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, svg
from .datagen import Case, Family, ScenarioSpec, generate, generate_split
from .estimators import CALIBRATION_KINDS, CalEstimatorKind, Kind
from .io import DataError, ParseError, read_predictions, write_predictions
from .metalearner import TrainConfig, evaluate_weights
from .simplex import (
    CredalDataset,
    DimensionError,
    DomainError,
    NumericError,
    RngStream,
    SimplexError,
    combine_dataset,
    convex_combine,
    point_in_hull,
    sample_categorical_rows,
    sample_dirichlet,
    sample_weight_simplex,
)
from .testkit import TestConfig, run_credal_test, run_mortier_baseline, run_npbe_on_fixed_predictor

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
DEFAULT_ALPHAS = (0.01, 0.05, 0.10, 0.15, 0.20, 0.25)
METHODS = ("proposed", "npbe", "mortier")
THREADS_ENV = "CREDAL_CAL_THREADS"


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------
def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        # shortest string that reads back to the same double
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _manifest(out: Path, command: str, config: dict) -> None:
    import scipy

    _write_json(out / "manifest.json", {
        "command": command,
        "config": config,
        "versions": {
            "credal_cal": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    })


def resolve_threads(requested: int | None) -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            requested = int(env)
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    n = requested if requested else (os.cpu_count() or 1)
    if n < 1:
        raise UsageError("thread count must be positive")
    return n


def _limit_blas():
    from threadpoolctl import threadpool_limits

    threadpool_limits(1)


def _map(fn, tasks, threads: int):
    """Apply ``fn`` to ``tasks`` in a process pool; results keep task order."""
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(threads, len(tasks)), initializer=_limit_blas) as pool:
        return list(pool.map(fn, tasks))


def derive_seed(seed: int, *path: int) -> int:
    """64-bit seed for a labelled sub-task; independent of scheduling."""
    state = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(path)).generate_state(2)
    return int(state[0]) | (int(state[1]) << 32)


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {text!r}")


def _estimators(text: str) -> tuple[CalEstimatorKind, ...]:
    try:
        return tuple(CalEstimatorKind.parse(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _estimator(text: str) -> CalEstimatorKind:
    return _estimators(text)[0]


def est_label(est: CalEstimatorKind) -> str:
    param = est.bandwidth if est.kind.uses_bandwidth else est.kernel_scale
    return est.kind.value if param is None else f"{est.kind.value}:{param}"


def _cases(text: str) -> tuple[Case, ...]:
    try:
        return tuple(Case(t.strip().upper()) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _accuracy(preds, labels) -> float:
    return float(np.mean(np.argmax(preds, axis=1) == labels))


# ---------------------------------------------------------------------------
# simulate / merge
# ---------------------------------------------------------------------------
REP_HEADER = ["case", "estimator", "method", "repetition", "statistic", "p_value"]


def default_scoring(est: CalEstimatorKind) -> Kind:
    """The KL calibration error pairs with log loss, everything else with the Brier score."""
    return Kind.LOG_LOSS if est.kind is Kind.CEKL else Kind.BRIER


def default_train_config(est: CalEstimatorKind, seed: int) -> TrainConfig:
    """Meta-learner settings for synthetic sweeps."""
    return TrainConfig(loss_estimator=est, scoring_rule=default_scoring(est), seed=seed)


def _simulate_task(task):
    (family, case, n, m, k, u, rep, seed, kinds, alphas, D, resample, methods, mortier_samples, mortier_null) = task
    t0 = time.perf_counter()
    data_seed = derive_seed(seed, list(Case).index(case), rep)
    spec = ScenarioSpec(family=family, case=case, n=n, m=m, k=k, u=u, seed=data_seed)
    opt, val, _, _ = generate_split(spec)
    rows = []
    for est in kinds:
        test_seed = derive_seed(seed, list(Case).index(case), rep, list(Kind).index(est.kind))
        tc = TestConfig(alpha=alphas[0], n_bootstrap=D, estimator=est, seed=test_seed, resample_instances=resample)
        results = {}
        if "proposed" in methods:
            results["proposed"], _ = run_credal_test(opt, val, default_train_config(est, test_seed), tc)
        if "npbe" in methods:
            results["npbe"] = run_npbe_on_fixed_predictor(val.mean_predictor(), val.labels, tc)
        if "mortier" in methods:
            results["mortier"] = run_mortier_baseline(val, tc, mortier_samples, mortier_null)
        for method in METHODS:
            if method in results:
                res = results[method]
                rows.append([case.value, est_label(est), method, rep, res.statistic, res.p_value]
                            + [res.rejects_at(a) for a in alphas])
    return rows, time.perf_counter() - t0


def aggregate(rep_rows, alphas):
    """Sweep rows ``(case, estimator, method, alpha, rate, repetitions, mean_statistic)``."""
    groups: dict = {}
    for row in rep_rows:
        groups.setdefault((row[0], row[1], row[2]), []).append(row)
    order = {m: i for i, m in enumerate(METHODS)}
    out = []
    for key in sorted(groups, key=lambda g: (g[0], g[1], order.get(g[2], 99))):
        rows = groups[key]
        stats = np.array([float(r[4]) for r in rows])
        for j, a in enumerate(alphas):
            rej = np.array([bool(int(r[6 + j])) if not isinstance(r[6 + j], bool) else r[6 + j] for r in rows])
            out.append([*key, a, float(rej.mean()), len(rows), float(np.sort(stats).mean())])
    return out


SWEEP_HEADER = ["case", "estimator", "method", "alpha", "rejection_rate", "repetitions", "mean_statistic"]


def _write_sweep(out: Path, rep_rows, alphas, family: str):
    rep_rows = sorted(rep_rows, key=lambda r: (r[0], r[1], METHODS.index(r[2]), int(r[3])))
    _write_csv(out / "repetitions.csv", REP_HEADER + [f"reject_{_fmt(a)}" for a in alphas], rep_rows)
    sweep = aggregate(rep_rows, alphas)
    _write_csv(out / "sweep.csv", SWEEP_HEADER, sweep)
    _write_json(out / "sweep.json", {"family": family, "alphas": list(alphas),
                                     "rows": [dict(zip(SWEEP_HEADER, r)) for r in sweep]})
    by_case: dict = {}
    for r in sweep:
        by_case.setdefault(r[0], {}).setdefault(f"{r[2]} ({r[1]})", ([], []))
        xs, ys = by_case[r[0]][f"{r[2]} ({r[1]})"]
        xs.append(r[3])
        ys.append(r[4])
    for case, series in by_case.items():
        null = Case(case).is_null
        title = f"{family} {case}: " + ("Type I error" if null else "Type II error")
        if not null:
            series = {lab: (xs, [1.0 - y for y in ys]) for lab, (xs, ys) in series.items()}
        doc = svg.line_plot(series, title=title, xlabel="significance level", ylabel="error rate",
                            ylim=(0.0, 1.0), diagonal=null)
        (out / f"{family}_{case}.svg").write_text(doc, encoding="utf-8")
    return sweep


def cmd_simulate(args) -> int:
    family = Family(args.family)
    if family is Family.BINARY and (args.k not in (None, 2) or args.m not in (None, 2)):
        raise UsageError("the binary family has exactly M=2 and K=2")
    if family is Family.MULTICLASS and args.k is not None and args.k < 3:
        raise UsageError("the multiclass family needs K >= 3")
    if args.repetitions < 1:
        raise UsageError("need at least one repetition")
    alphas = tuple(sorted(set(args.alphas)))
    if not alphas or any(not 0 < a < 1 for a in alphas):
        raise UsageError("alphas must lie in (0, 1)")
    methods = tuple(m for m in METHODS if m in args.methods.split(","))
    unknown = set(args.methods.split(",")) - set(METHODS)
    if unknown or not methods:
        raise UsageError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")
    # validate once before any work
    ScenarioSpec(family=family, case=args.cases[0], n=args.n, m=args.m, k=args.k, u=args.u)
    TestConfig(n_bootstrap=args.bootstrap)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    threads = resolve_threads(args.threads)
    reps = range(args.rep_offset, args.rep_offset + args.repetitions)
    tasks = [(family, case, args.n, args.m, args.k, args.u, r, args.seed, args.estimators, alphas,
              args.bootstrap, args.resample_instances, methods, args.mortier_samples, args.mortier_null)
             for case in args.cases for r in reps]
    t0 = time.perf_counter()
    results = _map(_simulate_task, tasks, threads)
    rep_rows = [row for rows, _ in results for row in rows]
    _write_sweep(out, rep_rows, alphas, family.value)
    _manifest(out, "simulate", {
        "family": family.value, "cases": [c.value for c in args.cases],
        "estimators": [est_label(e) for e in args.estimators], "alphas": list(alphas), "n": args.n, "m": args.m,
        "k": args.k, "u": args.u, "repetitions": args.repetitions, "rep_offset": args.rep_offset,
        "bootstrap": args.bootstrap, "seed": args.seed, "resample_instances": args.resample_instances,
        "methods": list(methods), "mortier_samples": args.mortier_samples, "mortier_null": args.mortier_null,
    })
    runtimes = {f"{t[1].value}/{t[6]}": dt * 1e3 for t, (_, dt) in zip(tasks, results)}
    _write_json(out / "timing.json", {"total_ms": (time.perf_counter() - t0) * 1e3,
                                      "mean_runtime_ms": float(np.mean(list(runtimes.values()))),
                                      "per_task_ms": runtimes, "threads": threads})
    print(f"wrote {len(rep_rows)} repetition rows to {out}")
    return EXIT_OK


def _read_rep_rows(path: Path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        alphas = tuple(float(h[len("reject_"):]) for h in header[len(REP_HEADER):])
        rows = []
        for r in reader:
            rows.append([r[0], r[1], r[2], int(r[3]), float(r[4]), float(r[5])] + [r[j] == "1" for j in
                                                                                     range(6, len(r))])
    return alphas, rows


def cmd_merge(args) -> int:
    """Combine the repetitions of several ``simulate`` runs into one sweep."""
    all_rows, alphas, family, seen = [], None, None, set()
    for d in args.inputs:
        d = Path(d)
        try:
            a, rows = _read_rep_rows(d / "repetitions.csv")
            man = json.loads((d / "manifest.json").read_text(encoding="utf-8"))
        except (OSError, ValueError, IndexError, StopIteration) as exc:
            raise DataError(f"cannot read sweep in {d}: {exc}") from None
        if alphas is not None and a != alphas:
            raise UsageError("inputs use different alpha grids")
        fam = man["config"]["family"]
        if family is not None and fam != family:
            raise UsageError("inputs use different families")
        alphas, family = a, fam
        for r in rows:
            key = (r[0], r[1], r[2], r[3])
            if key in seen:
                raise UsageError(f"repetition {key} appears in more than one input")
            seen.add(key)
        all_rows += rows
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_sweep(out, all_rows, alphas, family)
    _manifest(out, "merge", {"inputs": [str(p) for p in args.inputs]})
    return EXIT_OK


# ---------------------------------------------------------------------------
# test
# ---------------------------------------------------------------------------
def split_rows(n: int, opt_fraction: float, seed: int):
    perm = RngStream(seed).generator().permutation(n)
    n_opt = int(round(opt_fraction * n))
    if n_opt < 2 or n - n_opt < 2:
        raise UsageError("opt-fraction leaves fewer than two rows on one side")
    return np.sort(perm[:n_opt]), np.sort(perm[n_opt:])


def cmd_test(args) -> int:
    if not 0 < args.opt_fraction < 1:
        raise UsageError("opt-fraction must lie in (0, 1)")
    if not 0 < args.alpha < 1:
        raise UsageError("alpha must lie in (0, 1)")
    if args.gamma < 0:
        raise UsageError("gamma must be non-negative")
    est = args.estimator
    scoring = args.scoring or default_scoring(est)
    if scoring not in (Kind.BRIER, Kind.LOG_LOSS):
        raise UsageError("scoring rule must be brier or logloss")
    data = read_predictions(args.input)
    if data.labels is None:
        raise DataError("the test needs a labelled file")
    opt_idx, val_idx = split_rows(data.n_instances, args.opt_fraction, args.seed)
    opt, val = data.subset(opt_idx), data.subset(val_idx)
    batch = args.batch_size if args.batch_size > 0 else None
    if batch is not None and opt.n_instances < 2 * batch:
        batch = None
    train = TrainConfig.for_ingested(loss_estimator=est, scoring_rule=scoring, gamma=args.gamma,
                                     learning_rate=args.learning_rate, epochs=args.epochs, batch_size=batch,
                                     seed=args.seed)
    tc = TestConfig(alpha=args.alpha, n_bootstrap=args.bootstrap, estimator=est, seed=args.seed,
                    resample_instances=args.resample_instances)
    proposed, net = run_credal_test(opt, val, train, tc)
    mean_pred = val.mean_predictor()
    npbe = run_npbe_on_fixed_predictor(mean_pred, val.labels, tc)
    combined = combine_dataset(val, evaluate_weights(net, val))
    report = {
        "input": str(args.input),
        "n_opt": opt.n_instances, "n_val": val.n_instances, "M": data.n_members, "K": data.n_classes,
        "estimator": est_label(est), "scoring_rule": scoring.value, "gamma": args.gamma,
        "proposed": {**proposed.to_dict(), "accuracy": _accuracy(combined, val.labels)},
        "mean_predictor": {**npbe.to_dict(), "accuracy": _accuracy(mean_pred, val.labels)},
        "train_config": train.to_dict(), "test_config": tc.to_dict(),
    }
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "report.json", report)
    net.save(out / "weightnet.json")
    _manifest(out, "test", {k: _fmt(v) if not isinstance(v, (int, float, str, bool)) else v
                            for k, v in vars(args).items() if k != "func"})
    verdict = "reject" if proposed.reject else "no reject"
    print(f"proposed: t={proposed.statistic:.6g} p={proposed.p_value:.4f} ({verdict}); "
          f"mean predictor: t={npbe.statistic:.6g} p={npbe.p_value:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------
def cmd_export(args) -> int:
    """Write a synthetic scenario in the CSV exchange format."""
    spec = ScenarioSpec(family=args.family, case=args.case, n=args.n, m=args.m, k=args.k, u=args.u, seed=args.seed)
    data, _ = generate(spec)
    path = Path(args.output)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_predictions(data, path)
    return EXIT_OK


# ---------------------------------------------------------------------------
# null-dist
# ---------------------------------------------------------------------------
def null_distribution(kinds, n: int, k: int, resamples: int, seed: int) -> dict:
    """Estimator values over label resamples of one calibrated prediction set."""
    root = RngStream(seed)
    preds = sample_dirichlet(np.ones(k), root.spawn(0), size=n)
    resolved = [est.resolve(preds) for est in kinds]
    samples = {est_label(est): np.empty(resamples) for est in kinds}
    for r in range(resamples):
        y = sample_categorical_rows(preds, root.spawn(1, r))
        for est, key in zip(resolved, samples):
            samples[key][r] = est(preds, y).value
    return samples


def cmd_null_dist(args) -> int:
    if args.resamples < 100:
        raise UsageError("need at least 100 resamples")
    if args.k < 2 or args.n < 2:
        raise UsageError("need N >= 2 and K >= 2")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    samples = null_distribution(args.estimators, args.n, args.k, args.resamples, args.seed)
    rows = []
    for name, v in samples.items():
        mean, sd, q95 = float(v.mean()), float(v.std(ddof=1)), float(np.quantile(v, 0.95, method="linear"))
        rows.append([name, mean, sd, sd / np.sqrt(v.size), q95])
        doc = svg.histogram(v, title=f"{name} under calibration (N={args.n}, K={args.k})",
                            xlabel="estimate", markers={"mean": mean, "95% quantile": q95})
        (out / f"null_{name.replace(':', '_')}.svg").write_text(doc, encoding="utf-8")
    _write_csv(out / "null_summary.csv", ["estimator", "mean", "sd", "se", "q95"], rows)
    _write_csv(out / "null_samples.csv", ["resample"] + list(samples),
               [[r] + [samples[k][r] for k in samples] for r in range(args.resamples)])
    _manifest(out, "null-dist", {"estimators": [est_label(e) for e in args.estimators], "n": args.n, "k": args.k,
                                 "resamples": args.resamples, "seed": args.seed})
    for r in rows:
        print(f"{r[0]:>6}: mean={r[1]:+.5f} sd={r[2]:.5f} q95={r[4]:.5f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sampling-demo
# ---------------------------------------------------------------------------
def demo_vertices(m: int, preset: str, rng: RngStream) -> np.ndarray:
    eye = np.eye(3)
    if preset == "auto":
        preset = "corners" if m == 3 else "corners-midpoints" if m == 6 else "corners-random"
    if preset == "corners":
        if m != 3:
            raise UsageError("the corners preset needs M=3")
        return eye
    if preset == "corners-midpoints":
        if m != 6:
            raise UsageError("the corners-midpoints preset needs M=6")
        mids = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
        return np.vstack([eye, mids])
    if preset == "corners-random":
        return np.vstack([eye, sample_dirichlet(np.ones(3), rng, size=m - 3)]) if m > 3 else eye
    if preset == "random":
        return sample_dirichlet(np.ones(3), rng, size=m)
    raise UsageError(f"unknown preset {preset!r}")


def barycentric_xy(points) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    return np.stack([p[:, 1] + 0.5 * p[:, 2], p[:, 2] * np.sqrt(3.0) / 2.0], axis=1)


def concentration_ratio(vertices, count: int, rng: RngStream, radius_fraction: float = 0.25) -> dict:
    """Centroid-ball frequency of Dir(1)-weighted images relative to uniform hull sampling.

    Uniform reference points are drawn uniformly on the simplex and kept when
    inside the hull (rejection sampling); their mean is the hull centroid.
    """
    V = np.asarray(vertices, dtype=float)
    w = sample_weight_simplex(V.shape[0], count, rng.spawn(0))
    image = w @ V
    accepted = []
    gen_stream = rng.spawn(1)
    batch = 0
    while sum(len(a) for a in accepted) < count:
        cand = sample_dirichlet(np.ones(V.shape[1]), gen_stream.spawn(batch), size=count)
        inside = np.array([point_in_hull(c, V).inside for c in cand])
        accepted.append(cand[inside])
        batch += 1
        if batch > 1000:
            raise NumericError("rejection sampler accepts too few points")
    uniform = np.vstack(accepted)[:count]
    centroid = uniform.mean(axis=0)
    radius = radius_fraction * float(np.max(np.linalg.norm(V - centroid, axis=1)))
    f_image = float(np.mean(np.linalg.norm(image - centroid, axis=1) <= radius))
    f_uniform = float(np.mean(np.linalg.norm(uniform - centroid, axis=1) <= radius))
    return {"image": image, "centroid": centroid, "radius": radius, "image_fraction": f_image,
            "uniform_fraction": f_uniform, "ratio": f_image / f_uniform if f_uniform > 0 else float("inf")}


def cmd_sampling_demo(args) -> int:
    if args.k != 3:
        raise UsageError("the sampling demo plots the 2-simplex and needs K=3")
    if args.m < 3:
        raise UsageError("need M >= 3 vertices")
    if args.count < 1:
        raise UsageError("count must be positive")
    root = RngStream(args.seed)
    V = demo_vertices(args.m, args.preset, root.spawn(0))
    res = concentration_ratio(V, args.count, root.spawn(1), args.radius_fraction)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tri = barycentric_xy(np.eye(3))
    doc = svg.scatter_plot(barycentric_xy(res["image"]), outline=tri, xlim=(0.0, 1.0), ylim=(0.0, 0.9),
                           title=f"Dir(1) weights mapped into a {args.m}-vertex hull")
    (out / "sampling_demo.svg").write_text(doc, encoding="utf-8")
    summary = {"m": args.m, "k": args.k, "count": args.count, "seed": args.seed, "preset": args.preset,
               "vertices": V.tolist(), "centroid": res["centroid"].tolist(), "radius": res["radius"],
               "image_fraction": res["image_fraction"], "uniform_fraction": res["uniform_fraction"],
               "concentration_ratio": res["ratio"]}
    _write_json(out / "sampling_summary.json", summary)
    _manifest(out, "sampling-demo", {"m": args.m, "k": args.k, "count": args.count, "seed": args.seed,
                                     "preset": args.preset, "radius_fraction": args.radius_fraction})
    print(f"concentration ratio {res['ratio']:.3f} (image {res['image_fraction']:.4f}, "
          f"uniform {res['uniform_fraction']:.4f})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="credal-cal", description="Calibration tests for credal sets of classifiers.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        if seed:
            sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out-dir", required=True)

    s = sub.add_parser("simulate", help="Type I/II error sweep on synthetic scenarios")
    s.add_argument("--family", choices=[f.value for f in Family], default="binary")
    s.add_argument("--cases", type=_cases, default=tuple(Case))
    s.add_argument("--estimators", type=_estimators,
                   default=(CalEstimatorKind(Kind.CE2), CalEstimatorKind(Kind.CEKL)))
    s.add_argument("--alphas", type=_floats, default=DEFAULT_ALPHAS)
    s.add_argument("--n", type=int, default=400)
    s.add_argument("--m", type=int, default=None)
    s.add_argument("--k", type=int, default=None)
    s.add_argument("--u", type=float, default=0.5)
    s.add_argument("--repetitions", type=int, default=200)
    s.add_argument("--rep-offset", type=int, default=0)
    s.add_argument("--bootstrap", type=int, default=100)
    s.add_argument("--methods", default=",".join(METHODS))
    s.add_argument("--mortier-samples", type=int, default=1000)
    s.add_argument("--mortier-null", choices=["sampled", "reminimized"], default="sampled")
    s.add_argument("--resample-instances", type=_bool, default=True)
    s.add_argument("--threads", type=int, default=None)
    common(s)
    s.set_defaults(func=cmd_simulate)

    mg = sub.add_parser("merge", help="merge the repetitions of several simulate runs")
    mg.add_argument("inputs", nargs="+")
    common(mg, seed=False)
    mg.set_defaults(func=cmd_merge)

    t = sub.add_parser("test", help="run the test on a CSV of ensemble predictions")
    t.add_argument("--input", required=True)
    t.add_argument("--estimator", type=_estimator, default=CalEstimatorKind(Kind.CE2))
    t.add_argument("--scoring", type=lambda s: Kind(s.lower()), default=None)
    t.add_argument("--gamma", type=float, default=0.01)
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--bootstrap", type=int, default=100)
    t.add_argument("--opt-fraction", type=float, default=0.5)
    t.add_argument("--learning-rate", type=float, default=1e-4)
    t.add_argument("--epochs", type=int, default=200)
    t.add_argument("--batch-size", type=int, default=256)
    t.add_argument("--resample-instances", type=_bool, default=True)
    common(t)
    t.set_defaults(func=cmd_test)

    e = sub.add_parser("export", help="write a synthetic scenario as CSV")
    e.add_argument("--family", choices=[f.value for f in Family], default="binary")
    e.add_argument("--case", type=lambda s: Case(s.upper()), default=Case.H01)
    e.add_argument("--n", type=int, default=400)
    e.add_argument("--m", type=int, default=None)
    e.add_argument("--k", type=int, default=None)
    e.add_argument("--u", type=float, default=0.5)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--output", required=True)
    e.set_defaults(func=cmd_export)

    nd = sub.add_parser("null-dist", help="estimator distributions for a calibrated predictor")
    nd.add_argument("--estimators", type=_estimators,
                    default=tuple(CalEstimatorKind(k) for k in CALIBRATION_KINDS))
    nd.add_argument("--n", type=int, default=1000)
    nd.add_argument("--k", type=int, default=3)
    nd.add_argument("--resamples", type=int, default=500)
    common(nd)
    nd.set_defaults(func=cmd_null_dist)

    sd = sub.add_parser("sampling-demo", help="non-uniformity of Dirichlet weight sampling in a hull")
    sd.add_argument("--m", type=int, default=6)
    sd.add_argument("--k", type=int, default=3)
    sd.add_argument("--count", type=int, default=10000)
    sd.add_argument("--preset", choices=["auto", "corners", "corners-midpoints", "corners-random", "random"],
                    default="auto")
    sd.add_argument("--radius-fraction", type=float, default=0.25)
    common(sd)
    sd.set_defaults(func=cmd_sampling_demo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, DomainError, DimensionError) as exc:
        if isinstance(exc, SimplexError):
            print(f"data error: {exc}", file=sys.stderr)
            return EXIT_DATA
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

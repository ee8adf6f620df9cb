"""Command-line experiment harness.

Subcommands: gen-model, report, design, relations, sweep, epic.  Sweeps are
driven by a JSON or TOML spec file and write one CSV row per grid cell;
re-running with the same spec and seeds reproduces the file byte for byte
(except the trailing wall-time column).  The process exits nonzero if any
cell failed or any designed mapping missed its declared budget audit.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import dataclasses
import json
import math
import sys
import time

import numpy as np

from . import design as design_mod
from . import epic as epic_mod
from . import metrics, relations
from .channels import TwoStageMapping, compose, identity_mapping, load_mapping, save_mapping
from .detection import bayes_error_G_pushed, bayes_error_H_pushed
from .model import (
    JointModel,
    generate_correlated_model,
    load_model,
    push_forward,
    save_model,
)

AUDIT_SLACK = 1e-9

ARCHITECTURES = ("ldp", "ill", "lip", "inp", "e-ldp", "epic", "identity")

#: grid axes that matter per architecture
_AXES = {
    "identity": (),
    "ldp": ("eps_ld",),
    "inp": ("eps_i",),
    "ill": ("eps_i", "eps_ld"),
    "lip": ("eps_i", "eps_ld"),
    "e-ldp": ("eps_ld",),
    "epic": ("eps_ld", "r"),
}


def _fmt(v) -> str:
    if v is None or v == "":
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def _parse_eps(v) -> float:
    if isinstance(v, str) and v.strip().lower() in ("inf", "+inf", "infinity"):
        return math.inf
    return float(v)


# -- sweep spec ------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class SweepSpec:
    model_file: str | None
    generator: dict | None
    architectures: tuple
    eps_i: tuple
    eps_ld: tuple
    r: tuple
    corr: tuple
    seeds: tuple
    epic: dict
    design: dict
    output: str | None

    @classmethod
    def from_dict(cls, data: dict) -> "SweepSpec":
        model = data.get("model", {})
        archs = tuple(data.get("architectures", ("ldp",)))
        for a in archs:
            if a not in ARCHITECTURES:
                raise ValueError(f"unknown architecture {a!r}")
        eps_i = tuple(_parse_eps(v) for v in data.get("eps_i", (math.inf,)))
        eps_ld = tuple(_parse_eps(v) for v in data.get("eps_ld", (math.inf,)))
        r = tuple(float(v) for v in data.get("r", (0.999,)))
        corr = tuple(float(v) for v in data.get("corr", (0.2,)))
        seeds = tuple(int(v) for v in data.get("seeds", (0,)))
        if not archs or not eps_i or not eps_ld or not r or not corr or not seeds:
            raise ValueError("every sweep grid must be nonempty")
        return cls(
            model_file=model.get("file"),
            generator=model.get("generator"),
            architectures=archs,
            eps_i=eps_i,
            eps_ld=eps_ld,
            r=r,
            corr=corr,
            seeds=seeds,
            epic=dict(data.get("epic", {})),
            design=dict(data.get("design", {})),
            output=data.get("output"),
        )


def load_sweep_spec(path) -> SweepSpec:
    text = open(path, "rb").read()
    if str(path).endswith(".toml"):
        import tomllib

        data = tomllib.loads(text.decode("utf-8"))
    else:
        data = json.loads(text.decode("utf-8"))
    return SweepSpec.from_dict(data)


def _spec_model(spec: SweepSpec, corr: float) -> JointModel:
    if spec.model_file:
        return load_model(spec.model_file)
    gen = dict(spec.generator or {})
    return generate_correlated_model(
        seed=int(gen.get("seed", 0)),
        s=int(gen.get("s", 4)),
        x_size=int(gen.get("x_size", 8)),
        q=int(gen.get("q", 1)),
        target_corr=corr,
        jitter=float(gen.get("jitter", 0.5)),
    )


def _base_config(spec: SweepSpec, seed: int) -> design_mod.OptimizerConfig:
    d = spec.design
    return design_mod.OptimizerConfig(
        z_size=int(d.get("z_size", 2)),
        y_size=d.get("y_size"),
        max_outer_iters=int(d.get("max_outer_iters", 60)),
        convergence_tol=float(d.get("convergence_tol", 1e-6)),
        seed=seed,
        phi_cap=int(d.get("phi_cap", 4096)),
        lp_tol=float(d.get("lp_tol", 1e-9)),
        restarts=int(d.get("restarts", 3)),
    )


CSV_BUDGET_FIELDS = [
    f"{name}_{unit}"
    for name in (
        "eps_info",
        "eps_inference_dp",
        "eps_avg_leakage",
        "eps_ldp",
        "eps_mutual_info",
        "eps_identifiability",
        "delta_x",
    )
    for unit in ("nats", "bits")
]


def sweep_columns(s: int) -> list:
    cols = ["arch", "corr", "seed", "eps_i", "eps_ld", "r", "status"]
    cols += ["bayes_error_H", "bayes_error_G", "mi_H_Z", "mi_G_Z"]
    cols += [f"mi_X{t}_Z{t}" for t in range(s)]
    cols += CSV_BUDGET_FIELDS
    cols += ["holdout_error_H", "holdout_error_G", "eps_i_hat", "eps_ld_hat"]
    cols += ["converged", "audit_ok", "error", "wall_time_s"]
    return cols


def _evaluate_mapping(model, mapping, row):
    pushed = push_forward(model, mapping)
    row["bayes_error_H"] = bayes_error_H_pushed(pushed)
    row["bayes_error_G"] = bayes_error_G_pushed(pushed)
    row["mi_H_Z"] = metrics.mutual_information(pushed.p_hz())
    row["mi_G_Z"] = metrics.mutual_information(pushed.p_gz())
    for t, mi in enumerate(metrics.per_sensor_mutual_information(model, mapping)):
        row[f"mi_X{t}_Z{t}"] = mi
    report = metrics.full_report(model, mapping)
    row.update({k: v for k, v in report.csv_fields().items()})
    return report


def _audit(report, arch, eps_i, eps_ld) -> bool:
    ok = True
    if "eps_ld" in _AXES[arch]:
        ok &= report.eps_ldp <= eps_ld + AUDIT_SLACK
    if "eps_i" in _AXES[arch]:
        ok &= report.eps_info <= eps_i + AUDIT_SLACK
    return bool(ok)


def _run_group(spec: SweepSpec, arch: str, corr: float, seed: int, eps_i: float, r: float):
    """One warm-start chain: all eps_ld values for fixed other axes."""
    model = _spec_model(spec, corr)
    rows = []
    eps_ld_axis = spec.eps_ld if "eps_ld" in _AXES[arch] else (math.inf,)
    results = [None] * len(eps_ld_axis)
    t_start = time.perf_counter()
    try:
        if arch in ("ldp", "ill", "lip"):
            cfg = _base_config(spec, seed)
            cfg = dataclasses.replace(cfg, eps_i=eps_i)
            results = design_mod.chain_designs(model, arch, list(eps_ld_axis), cfg)
        elif arch == "inp":
            cfg = dataclasses.replace(_base_config(spec, seed), eps_i=eps_i)
            results = [design_mod.design_inp(model, cfg)]
        elif arch == "identity":
            results = [None]
    except Exception as exc:  # per-cell failures stay in-row
        for eps_ld in eps_ld_axis:
            rows.append(_error_row(spec, arch, corr, seed, eps_i, eps_ld, r, exc))
        return rows
    for idx, eps_ld in enumerate(eps_ld_axis):
        t0 = time.perf_counter()
        row = _blank_row(spec, arch, corr, seed, eps_i, eps_ld, r)
        try:
            if arch == "identity":
                mapping = identity_mapping(model.s, model.x_size)
                report = _evaluate_mapping(model, mapping, row)
                row["converged"] = True
                row["audit_ok"] = True
            elif arch in ("ldp", "ill", "lip", "inp"):
                res = results[idx]
                mapping = res.network()
                report = _evaluate_mapping(model, mapping, row)
                row["converged"] = res.converged
                row["audit_ok"] = _audit(report, arch, eps_i, eps_ld)
            else:  # epic / e-ldp
                report = _run_epic_cell(spec, arch, model, seed, eps_ld, r, row)
                row["audit_ok"] = report.eps_ldp <= eps_ld + AUDIT_SLACK
            row["status"] = "ok"
        except Exception as exc:
            row["status"] = "error"
            row["error"] = f"{type(exc).__name__}: {exc}"
            row["audit_ok"] = False
        row["wall_time_s"] = time.perf_counter() - t0
        rows.append(row)
    return rows


def _run_epic_cell(spec, arch, model, seed, eps_ld, r, row):
    ep = spec.epic
    n_train = int(ep.get("n_train", 40))
    n_test = int(ep.get("n_test", 5000))
    lam = float(ep.get("lambda", 0.05))
    cfg = epic_mod.EpicConfig(
        max_sweeps=int(ep.get("max_sweeps", 12)),
        seed=seed,
        utility_slack=float(ep.get("utility_slack", 0.3)),
    )
    train = epic_mod.dataset_from_model(model, n_train, seed)
    test = epic_mod.dataset_from_model(model, n_test, seed + 1_000_000)
    if arch == "epic":
        sol = epic_mod.epic_solve(train, eps_ld, r, lam, cfg)
    else:
        sol = epic_mod.eldp_solve(train, eps_ld, lam, cfg)
    report = _evaluate_mapping(model, sol.mapping, row)
    eh, eg = epic_mod.holdout_errors(sol, test, seed + 2_000_000)
    row["holdout_error_H"] = eh
    row["holdout_error_G"] = eg
    rng = np.random.default_rng(seed + 3_000_000)
    z = sol.mapping.sample(test.x, rng)
    eps_i_hat, eps_ld_hat = metrics.empirical_budgets(
        list(zip(test.g.tolist(), [tuple(zz) for zz in z.tolist()])), sol.mapping
    )
    row["eps_i_hat"] = eps_i_hat
    row["eps_ld_hat"] = eps_ld_hat
    row["converged"] = True
    return report


def _blank_row(spec, arch, corr, seed, eps_i, eps_ld, r):
    row = {c: "" for c in sweep_columns(_spec_s(spec))}
    row["arch"] = arch
    row["corr"] = "" if spec.model_file else corr
    row["seed"] = seed
    row["eps_i"] = eps_i if "eps_i" in _AXES[arch] else ""
    row["eps_ld"] = eps_ld if "eps_ld" in _AXES[arch] else ""
    row["r"] = r if "r" in _AXES[arch] else ""
    return row


def _error_row(spec, arch, corr, seed, eps_i, eps_ld, r, exc):
    row = _blank_row(spec, arch, corr, seed, eps_i, eps_ld, r)
    row["status"] = "error"
    row["error"] = f"{type(exc).__name__}: {exc}"
    row["audit_ok"] = False
    row["wall_time_s"] = 0.0
    return row


def _spec_s(spec: SweepSpec) -> int:
    if spec.model_file:
        return load_model(spec.model_file).s
    return int((spec.generator or {}).get("s", 4))


def _group_keys(spec: SweepSpec):
    keys = []
    for arch in spec.architectures:
        axes = _AXES[arch]
        corrs = spec.corr if not spec.model_file else (0.0,)
        for corr in corrs:
            for seed in spec.seeds:
                eps_is = spec.eps_i if "eps_i" in axes else (math.inf,)
                rs = spec.r if "r" in axes else (0.999,)
                for eps_i in eps_is:
                    for r in rs:
                        keys.append((arch, corr, seed, eps_i, r))
    return keys


def run_sweep(spec: SweepSpec, jobs: int = 1):
    """Execute every grid cell; returns rows in deterministic grid order."""
    keys = _group_keys(spec)
    results = {}
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {
                pool.submit(_run_group, spec, *key): key for key in keys
            }
            for fut in concurrent.futures.as_completed(futures):
                results[futures[fut]] = fut.result()
    else:
        for key in keys:
            results[key] = _run_group(spec, *key)
    rows = []
    for key in keys:
        rows.extend(results[key])
    return rows


def write_sweep_csv(rows, spec: SweepSpec, path) -> None:
    cols = sweep_columns(_spec_s(spec))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_fmt(row.get(c, "")) for c in cols])


GNUPLOT_STUB = """# gnuplot script for sweep results
set datafile separator ','
set key autotitle columnhead outside
set xlabel 'eps_LD'
set ylabel 'Bayes error'
set logscale x
plot for [arch in "{archs}"] '{csv}' \\
    using 5:(strcol(1) eq arch ? column(8) : NaN) with linespoints title arch.' H', \\
    for [arch in "{archs}"] '{csv}' \\
    using 5:(strcol(1) eq arch ? column(9) : NaN) with linespoints title arch.' G'
"""


# -- subcommand entry points -------------------------------------------------


def _cmd_gen_model(args) -> int:
    model = generate_correlated_model(
        seed=args.seed,
        s=args.sensors,
        x_size=args.x_size,
        q=args.q,
        target_corr=args.corr,
        jitter=args.jitter,
    )
    save_model(model, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_report(args) -> int:
    model = load_model(args.model)
    mapping = load_mapping(args.mapping)
    if isinstance(mapping, TwoStageMapping):
        mapping = compose(mapping)
    report = metrics.full_report(model, mapping)
    with open(args.out + ".json", "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=1)
        fh.write("\n")
    fields = report.csv_fields()
    with open(args.out + ".csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(fields))
        writer.writerow([_fmt(v) for v in fields.values()])
    print(f"wrote {args.out}.json and {args.out}.csv")
    return 0


def _cmd_design(args) -> int:
    model = load_model(args.model)
    cfg = design_mod.OptimizerConfig(
        eps_i=_parse_eps(args.eps_i),
        eps_ld=_parse_eps(args.eps_ld),
        seed=args.seed,
        z_size=args.z_size,
        y_size=args.y_size,
        restarts=args.restarts,
    )
    res = design_mod.design(model, args.arch, cfg)
    payload = res.to_dict()
    payload["arch"] = args.arch
    payload["eps_i"] = metrics._json_float(cfg.eps_i)
    payload["eps_ld"] = metrics._json_float(cfg.eps_ld)
    audit_ok = res.report.eps_ldp <= cfg.eps_ld + AUDIT_SLACK
    if args.arch in ("ill", "lip", "inp"):
        audit_ok &= res.report.eps_info <= cfg.eps_i + AUDIT_SLACK
    payload["audit_ok"] = bool(audit_ok)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
    print(f"wrote {args.out} (objective {res.objective:.6f}, audit {'ok' if audit_ok else 'FAILED'})")
    return 0 if audit_ok else 1


def _cmd_relations(args) -> int:
    suite = relations.check_bound_suite(args.seed, args.trials)
    witnesses = relations.all_witnesses()
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["metric_a", "metric_b", "kind", "bound_constant", "verdict", "witness_params"]
        )
        for key, _, _, constant in relations.BOUND_SPECS:
            a, b = key.split("->")
            viol = suite.max_violation[key]
            verdict = (
                "implies-bound-holds"
                if viol <= relations.BOUND_TOL
                else f"violated ({viol:.3e})"
            )
            writer.writerow([a, b, "implies", constant, verdict, ""])
        for w in witnesses:
            params = ";".join(_fmt(p[0]) for p in w.points)
            writer.writerow(
                [w.metric_a, w.metric_b, "does-not-guarantee", "", w.verdict, params]
            )
        writer.writerow(
            ["inference_dp", "info", "does-not-guarantee (q->inf)", "", "external, unverified", ""]
        )
        writer.writerow(
            [
                "inference_dp",
                "avg_leakage",
                "does-not-guarantee (q->inf)",
                "",
                "external, unverified",
                "",
            ]
        )
    ok = suite.ok and all(
        w.verdict == relations.VERDICT_NON_GUARANTEE for w in witnesses
    )
    print(f"wrote {args.out}; bound suite over {suite.trials} trials: {'ok' if suite.ok else 'VIOLATED'}")
    return 0 if ok else 1


def _cmd_sweep(args) -> int:
    spec = load_sweep_spec(args.spec)
    out = args.out or spec.output
    if not out:
        print("no output path given (use --out or the spec's 'output')", file=sys.stderr)
        return 2
    rows = run_sweep(spec, jobs=args.jobs)
    write_sweep_csv(rows, spec, out)
    if args.gnuplot_stub:
        stub = GNUPLOT_STUB.format(archs=" ".join(spec.architectures), csv=out)
        with open(out + ".gp", "w", encoding="utf-8") as fh:
            fh.write(stub)
    n_err = sum(1 for r in rows if r.get("status") != "ok")
    n_audit = sum(1 for r in rows if r.get("status") == "ok" and not r.get("audit_ok"))
    print(f"wrote {out}: {len(rows)} rows, {n_err} failures, {n_audit} audit misses")
    return 0 if n_err == 0 and n_audit == 0 else 1


def _cmd_epic(args) -> int:
    train_h, train_g, train_feats = _read_labeled_csv(args.train, args.q)
    test_h, test_g, test_feats = _read_labeled_csv(args.test, args.q)
    if args.bins:
        train_x, edges = epic_mod.discretize(train_feats, args.bins)
        test_x, _ = epic_mod.discretize(test_feats, args.bins, edges=edges)
        x_size = args.bins
    else:
        train_x = train_feats.astype(np.int64)
        test_x = test_feats.astype(np.int64)
        x_size = int(max(train_x.max(), test_x.max())) + 1
    train = epic_mod.Dataset(train_h, train_g, train_x, x_size, args.q)
    test = epic_mod.Dataset(test_h, test_g, np.clip(test_x, 0, x_size - 1), x_size, args.q)
    cfg = epic_mod.EpicConfig(seed=args.seed, utility_slack=args.utility_slack)
    if args.e_ldp:
        sol = epic_mod.eldp_solve(train, _parse_eps(args.eps_ld), args.lam, cfg)
    else:
        sol = epic_mod.epic_solve(train, _parse_eps(args.eps_ld), args.r, args.lam, cfg)
    err_h, err_g = epic_mod.holdout_errors(sol, test, args.seed + 2_000_000)
    rng = np.random.default_rng(args.seed + 3_000_000)
    z = sol.mapping.sample(test.x, rng)
    eps_i_hat, eps_ld_hat = metrics.empirical_budgets(
        list(zip(test.g.tolist(), [tuple(zz) for zz in z.tolist()])), sol.mapping
    )
    with open(args.out + ".json", "w", encoding="utf-8") as fh:
        json.dump(sol.to_dict(), fh, indent=1)
        fh.write("\n")
    with open(args.out + ".csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["error_H", "error_G", "eps_i_hat", "eps_ld_hat"])
        writer.writerow([_fmt(v) for v in (err_h, err_g, eps_i_hat, eps_ld_hat)])
    print(
        f"wrote {args.out}.json/.csv: error_H={err_h:.4f} error_G={err_g:.4f} "
        f"eps_i_hat={eps_i_hat:.4f} eps_ld_hat={_fmt(eps_ld_hat)}"
    )
    return 0


def _read_labeled_csv(path, q):
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].strip().startswith("#"):
                continue
            try:
                rows.append([float(v) for v in rec])
            except ValueError:
                continue  # header line
    data = np.asarray(rows, dtype=float)
    if data.ndim != 2 or data.shape[1] < 2 + q:
        raise ValueError(f"{path}: expected h, {q} g columns and features")
    h = data[:, 0].astype(np.int64)
    g_bits = data[:, 1:1 + q].astype(np.int64)
    g = np.zeros(data.shape[0], dtype=np.int64)
    for j in range(q):
        g = g * 2 + g_bits[:, j]
    return h, g, data[:, 1 + q:]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="privdet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-model", help="generate a synthetic correlated model")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sensors", type=int, default=4)
    p.add_argument("--x-size", type=int, default=8)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--corr", type=float, default=0.2)
    p.add_argument("--jitter", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_model)

    p = sub.add_parser("report", help="budget report for a (model, mapping) pair")
    p.add_argument("--model", required=True)
    p.add_argument("--mapping", required=True)
    p.add_argument("--out", required=True, help="output prefix (.json/.csv appended)")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("design", help="optimize a privacy mapping")
    p.add_argument("--arch", choices=("ldp", "ill", "lip", "inp"), required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--eps-i", default="inf")
    p.add_argument("--eps-ld", default="inf")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--z-size", type=int, default=2)
    p.add_argument("--y-size", type=int, default=None)
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_design)

    p = sub.add_parser("relations", help="metric-implication table and bound suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_relations)

    p = sub.add_parser("sweep", help="run a configuration-driven experiment sweep")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--gnuplot-stub", action="store_true")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("epic", help="empirical design from labeled CSV data")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("--eps-ld", default="inf")
    p.add_argument("--r", type=float, default=0.999)
    p.add_argument("--lambda", dest="lam", type=float, default=0.05)
    p.add_argument("--utility-slack", type=float, default=0.3)
    p.add_argument("--e-ldp", action="store_true", help="drop the inference-privacy floor")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output prefix (.json/.csv appended)")
    p.set_defaults(func=_cmd_epic)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

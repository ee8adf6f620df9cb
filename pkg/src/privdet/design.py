"""Parametric privacy-mapping optimizers.

Three designs are provided, all built from the same block coordinate
descent skeleton (alternate between the fusion rule and one sensor's
channel at a time, sweeping sensors in order):

* ``design_ldp``   -- detection error minimization under a per-sensor local
  ratio budget only.  Binary outputs use an exact closed-form block step;
  larger outputs solve the block linear program.
* ``design_info_stage`` -- detection error minimization subject to the
  per-g detection-risk threshold theta that enforces a posterior-ratio
  budget on G.  Each block step is a linear program over mixtures of
  deterministic per-sensor quantizers.
* ``design_ill`` / ``design_lip`` -- two-stage architectures concatenating
  the two designs.  "ill" sanitizes for G first and then adds local noise
  at half the budget per stage; "lip" applies the full local budget first
  and sanitizes its output for G.  Both orders keep each composed budget
  within its target.
"""

from __future__ import annotations

import dataclasses
import itertools
import math

import numpy as np

from . import metrics
from .channels import NetworkMapping, SensorChannel, TwoStageMapping, compose
from .detection import (
    FusionRule,
    PrivacyRiskProfile,
    bayes_error_H_pushed,
    compute_c_G,
    min_risk_detector,
    optimal_fusion_rule,
    optimal_rule_from_pushed,
    theta,
)
from .metrics import BudgetReport, full_report
from .model import JointModel, push_forward, push_forward_model
from .simplex import LPInfeasible, LPResult, LPUnbounded, solve_lp as _simplex_solve


@dataclasses.dataclass(frozen=True)
class OptimizerConfig:
    """Knobs shared by every parametric design."""

    eps_i: float = math.inf
    eps_ld: float = math.inf
    z_size: int = 2
    y_size: int | None = None  # intermediate alphabet; defaults to z_size
    max_outer_iters: int = 100
    convergence_tol: float = 1e-6  # L1 norm of the mapping change per sweep
    seed: int = 0
    phi_cap: int = 4096
    lp_tol: float = 1e-9
    restarts: int = 5

    def __post_init__(self):
        if self.eps_i < 0 or self.eps_ld < 0:
            raise ValueError("privacy budgets must be nonnegative")
        if self.convergence_tol <= 0:
            raise ValueError("convergence tolerance must be positive")

    @property
    def stage_y_size(self) -> int:
        return self.y_size if self.y_size is not None else self.z_size


@dataclasses.dataclass(frozen=True)
class DesignResult:
    mapping: object  # NetworkMapping | TwoStageMapping
    rule: FusionRule
    trace: tuple  # detection error after each outer sweep (best restart)
    report: BudgetReport
    converged: bool
    objective: float  # detection error of the returned mapping
    profile: PrivacyRiskProfile | None = None

    def network(self) -> NetworkMapping:
        if isinstance(self.mapping, TwoStageMapping):
            return compose(self.mapping)
        return self.mapping

    def to_dict(self) -> dict:
        payload = {
            "mapping": self.mapping.to_dict()
            if isinstance(self.mapping, TwoStageMapping)
            else self.mapping.to_list(),
            "rule": self.rule.table.tolist(),
            "objective_trace": list(self.trace),
            "converged": self.converged,
            "report": self.report.to_dict(),
        }
        if self.profile is not None:
            payload["risk_profile"] = {
                "min_risks": {str(k): v for k, v in self.profile.min_risks.items()},
                "c_g": self.profile.c_g,
                "theta": self.profile.theta,
            }
        return payload


class InfoStageInfeasible(RuntimeError):
    """Per-sensor LP infeasible at the current risk threshold."""

    def __init__(self, g: int, theta_val: float):
        super().__init__(
            f"risk constraint for private value g={g} cannot reach theta={theta_val:.6g}"
        )
        self.blocking_g = g
        self.theta = theta_val


def solve_lp(objective, a_ub=None, b_ub=None, a_eq=None, b_eq=None, tol: float = 1e-9) -> LPResult:
    """Deterministic dense-simplex solve; raises LPInfeasible / LPUnbounded."""
    return _simplex_solve(objective, a_ub=a_ub, b_ub=b_ub, a_eq=a_eq, b_eq=b_eq, tol=tol)


# -- single-sensor block steps for the local-budget design -------------------


def block_objective_coefficients(
    model: JointModel, rule: FusionRule, channels, t: int
) -> np.ndarray:
    """Coefficients f(z, x) so that P(rule(Z) != H) = p_H(1) + sum p_t(z|x) f(z, x).

    ``channels`` is the full per-sensor list; entry t is ignored.
    """
    z_size = rule.z_size
    signed_prior = model.prior * np.array([[1.0], [-1.0]])
    accept = np.flatnonzero(rule.table == 1)
    if model.form == "cond_indep":
        pushed = [
            model.conditionals[i] @ channels[i].rows if i != t else None
            for i in range(model.s)
        ]
        acc = np.zeros((2, model.n_g, z_size))
        for zflat in accept:
            zvec = np.unravel_index(zflat, (z_size,) * model.s)
            w = np.ones((2, model.n_g))
            for i in range(model.s):
                if i != t:
                    w = w * pushed[i][:, :, zvec[i]]
            acc[:, :, zvec[t]] += w
        return np.einsum("hg,hgz,hgx->zx", signed_prior, acc, model.conditionals[t])
    # full form: contract the signed joint against the other sensors' rows
    joint = model.joint_hgx()  # (2, n_g, n_x)
    d = joint[0].sum(axis=0) - joint[1].sum(axis=0)  # p(x, H=0) - p(x, H=1)
    d = d.reshape((model.x_size,) * model.s)
    f = np.zeros((z_size, model.x_size))
    for zflat in accept:
        zvec = np.unravel_index(zflat, (z_size,) * model.s)
        w = d
        # contract sensors above t first so axis positions stay stable
        for i in reversed(range(model.s)):
            if i == t:
                continue
            w = np.tensordot(w, channels[i].rows[:, zvec[i]], axes=([i], [0]))
        f[zvec[t]] += w
    return f


def ldp_closed_form_step(
    model: JointModel, rule: FusionRule, channels, t: int, eps_ld: float
) -> SensorChannel:
    """Exact binary-output block minimizer: two-level rows at ratio e^eps.

    Rows take the low value 1/(1+e^eps) on the first output exactly when
    f(0, x) >= f(1, x) (equality included), the high value otherwise.
    """
    if rule.z_size != 2:
        raise ValueError("the closed-form step requires a binary output alphabet")
    f = block_objective_coefficients(model, rule, channels, t)
    if math.isinf(eps_ld):
        lo, hi = 0.0, 1.0
    else:
        e = math.exp(eps_ld)
        lo, hi = 1.0 / (1.0 + e), e / (1.0 + e)
    first = np.where(f[0] >= f[1], lo, hi)
    return SensorChannel(np.stack([first, 1.0 - first], axis=1))


def ldp_lp_step(
    model: JointModel, rule: FusionRule, channels, t: int, eps_ld: float, lp_tol: float = 1e-9
) -> SensorChannel:
    """Block linear program over one sensor's channel for any output size."""
    if eps_ld < 0:
        raise ValueError("eps_ld must be nonnegative")
    f = block_objective_coefficients(model, rule, channels, t)
    z_size, x_size = f.shape
    nv = x_size * z_size  # variable (x, z) -> x * z_size + z
    c = f.T.reshape(-1)
    a_eq = np.zeros((x_size, nv))
    for x in range(x_size):
        a_eq[x, x * z_size:(x + 1) * z_size] = 1.0
    b_eq = np.ones(x_size)
    a_ub = b_ub = None
    if math.isfinite(eps_ld):
        e = math.exp(eps_ld)
        rows = []
        for z in range(z_size):
            for x in range(x_size):
                for x2 in range(x_size):
                    if x2 == x:
                        continue
                    row = np.zeros(nv)
                    row[x * z_size + z] = 1.0
                    row[x2 * z_size + z] -= e
                    rows.append(row)
        a_ub = np.array(rows)
        b_ub = np.zeros(len(rows))
    res = solve_lp(c, a_ub=a_ub, b_ub=b_ub, a_eq=a_eq, b_eq=b_eq, tol=lp_tol)
    rows = np.clip(res.x.reshape(x_size, z_size), 0.0, None)
    rows = _repair_ratio_columns(rows, eps_ld)
    return SensorChannel(rows)


def _repair_ratio_columns(rows: np.ndarray, eps_ld: float) -> np.ndarray:
    """Snap solver noise so the ratio budget holds exactly after rounding."""
    rows = rows.copy()
    if math.isfinite(eps_ld):
        floor = np.exp(-eps_ld)
        for z in range(rows.shape[1]):
            col = rows[:, z]
            mx = col.max()
            if mx <= 1e-12:
                rows[:, z] = 0.0
            else:
                rows[:, z] = np.maximum(col, mx * floor)
    else:
        rows[rows <= 1e-12] = 0.0
    return rows / rows.sum(axis=1, keepdims=True)


def block_objective_value(f: np.ndarray, channel: SensorChannel) -> float:
    """sum_{z,x} p(z|x) f(z, x) for comparing block minimizers."""
    return float(np.einsum("zx,xz->", f, channel.rows))


# -- local-differential-privacy design ---------------------------------------


def design_ldp(
    model: JointModel,
    config: OptimizerConfig,
    out_size: int | None = None,
    initial: NetworkMapping | None = None,
) -> DesignResult:
    """Gauss-Seidel detection-error minimization under the local budget.

    Runs ``config.restarts`` seeded random starts (plus ``initial`` if
    given) and keeps the best final objective.  The objective trace of the
    winning start is non-increasing per sweep by construction of the block
    steps.
    """
    z_size = out_size if out_size is not None else config.z_size
    eps_ld = config.eps_ld
    starts: list[list[SensorChannel]] = []
    for ss in np.random.SeedSequence(config.seed).spawn(config.restarts):
        rng = np.random.default_rng(ss)
        raw = rng.exponential(size=(model.s, model.x_size, z_size))
        starts.append([SensorChannel(r / r.sum(axis=1, keepdims=True)) for r in raw])
    if initial is not None:
        starts.append(list(initial.channels))
    best = None
    for chans in starts:
        chans = list(chans)
        trace = []
        converged = False
        for _ in range(config.max_outer_iters):
            mapping = NetworkMapping(tuple(chans))
            rule = optimal_fusion_rule(model, mapping)
            prev_rows = [c.rows for c in chans]
            for t in range(model.s):
                if z_size == 2:
                    chans[t] = ldp_closed_form_step(model, rule, chans, t, eps_ld)
                else:
                    chans[t] = ldp_lp_step(model, rule, chans, t, eps_ld, config.lp_tol)
            mapping = NetworkMapping(tuple(chans))
            pushed = push_forward(model, mapping)
            trace.append(bayes_error_H_pushed(pushed))
            change = sum(
                float(np.abs(c.rows - p).sum()) for c, p in zip(chans, prev_rows)
            )
            if change < config.convergence_tol:
                converged = True
                break
        candidate = (trace[-1], tuple(chans), tuple(trace), converged)
        if best is None or candidate[0] < best[0] - 1e-15:
            best = candidate
    _, chans, trace, converged = best
    mapping = NetworkMapping(chans)
    pushed = push_forward(model, mapping)
    return DesignResult(
        mapping=mapping,
        rule=optimal_rule_from_pushed(pushed),
        trace=trace,
        report=full_report(model, mapping),
        converged=converged,
        objective=bayes_error_H_pushed(pushed),
    )


# -- information-privacy stage ------------------------------------------------


@dataclasses.dataclass(frozen=True)
class InfoStageResult:
    mapping: NetworkMapping
    profile: PrivacyRiskProfile
    trace: tuple
    converged: bool


def _deterministic_candidates(x_size: int, y_size: int, phi_cap: int, seed: int) -> np.ndarray:
    """One-hot candidate channels (n_cand, x_size, y_size).

    All y_size**x_size deterministic quantizers when they fit under the
    cap, otherwise a seeded random subset that always includes every
    constant quantizer (they keep the risk constraints satisfiable).
    """
    total = y_size ** x_size
    if total <= phi_cap:
        maps = np.array(list(itertools.product(range(y_size), repeat=x_size)), dtype=int)
    else:
        rng = np.random.default_rng(seed)
        maps = rng.integers(y_size, size=(phi_cap, x_size))
        consts = np.tile(np.arange(y_size)[:, None], (1, x_size))
        maps = np.unique(np.vstack([consts, maps]), axis=0)
    cands = np.zeros((maps.shape[0], x_size, y_size))
    cands[np.arange(maps.shape[0])[:, None], np.arange(x_size)[None, :], maps] = 1.0
    return cands


def _stage_column_stats(model, chans, t, cands, rule):
    """Detection error and per-g min risks for every candidate at sensor t."""
    n_g = model.n_g
    y_size = cands.shape[2]
    pushed = [model.conditionals[i] @ chans[i].rows for i in range(model.s)]
    left = np.ones((2, n_g, 1))
    for i in range(t):
        left = (left[:, :, :, None] * pushed[i][:, :, None, :]).reshape(2, n_g, -1)
    right = np.ones((2, n_g, 1))
    for i in range(t + 1, model.s):
        right = (right[:, :, :, None] * pushed[i][:, :, None, :]).reshape(2, n_g, -1)
    cand_pushed = np.einsum("cxy,hgx->chgy", cands, model.conditionals[t])
    joint = np.einsum("hg,hga,chgy,hgb->chgayb", model.prior, left, cand_pushed, right)
    joint = joint.reshape(cands.shape[0], 2, n_g, -1)
    accept = rule.table.astype(bool)
    err = joint[:, 0, :, :][:, :, accept].sum(axis=(1, 2)) + joint[:, 1, :, :][
        :, :, ~accept
    ].sum(axis=(1, 2))
    p_gy = joint.sum(axis=1)  # (c, n_g, NY)
    p_g = model.prior.sum(axis=0)
    risks = {}
    for g in range(1, n_g):
        if p_g[g] <= 0 or p_g[0] <= 0:
            continue
        risks[g] = 0.5 * np.minimum(p_gy[:, 0] / p_g[0], p_gy[:, g] / p_g[g]).sum(axis=1)
    return err, risks


def design_info_stage(model: JointModel, eps_i: float, config: OptimizerConfig) -> InfoStageResult:
    """Detection-error minimization under the per-g risk threshold.

    Per sweep: refresh the fusion rule and the threshold theta (which
    depends on the current mapping through c_G), then solve one LP per
    sensor over mixtures of deterministic quantizers plus the incumbent
    channel.  Starts from constant quantizers, which satisfy every risk
    constraint; if a later threshold update makes a block step infeasible,
    the previous iterate is returned.  Before returning, the mapping is
    audited against the posterior-ratio budget and, if numerically short,
    shrunk toward an input-independent channel until the audit passes.
    """
    if model.form != "cond_indep":
        raise ValueError("the information stage requires a cond_indep model")
    if eps_i <= 0:
        raise ValueError("eps_i must be positive")
    y_size = config.stage_y_size
    cands = _deterministic_candidates(model.x_size, y_size, config.phi_cap, config.seed)
    const_rows = np.full((model.x_size, y_size), 0.0)
    const_rows[:, 0] = 1.0
    chans = [SensorChannel(const_rows.copy()) for _ in range(model.s)]
    trace: list[float] = []
    converged = False
    for sweep in range(config.max_outer_iters):
        mapping = NetworkMapping(tuple(chans))
        pushed = push_forward(model, mapping)
        rule = optimal_rule_from_pushed(pushed)
        c_g = compute_c_G(model, mapping)
        # an unbounded budget disables the floor outright (the closed-form
        # threshold tends to (1 - c_G)/2, an artifact of its derivation)
        th = 0.0 if math.isinf(eps_i) else theta(eps_i, c_g)
        prev_rows = [c.rows for c in chans]
        try:
            for t in range(model.s):
                cols = np.concatenate([cands, chans[t].rows[None, :, :]], axis=0)
                err, risks = _stage_column_stats(model, chans, t, cols, rule)
                nu = _solve_mixture_lp(err, risks, th, config.lp_tol)
                rows = np.einsum("c,cxy->xy", nu, cols)
                rows = np.clip(rows, 0.0, None)
                chans[t] = SensorChannel(rows / rows.sum(axis=1, keepdims=True))
        except InfoStageInfeasible:
            if sweep == 0:
                raise
            chans = [SensorChannel(r) for r in prev_rows]
            break
        obj = bayes_error_H_pushed(push_forward(model, NetworkMapping(tuple(chans))))
        if trace and obj > trace[-1] + config.lp_tol:
            chans = [SensorChannel(r) for r in prev_rows]
            break
        trace.append(obj)
        change = sum(float(np.abs(c.rows - p).sum()) for c, p in zip(chans, prev_rows))
        if change < config.convergence_tol:
            converged = True
            break
    chans = _enforce_info_budget(model, chans, eps_i)
    mapping = NetworkMapping(tuple(chans))
    if not trace:
        trace = [bayes_error_H_pushed(push_forward(model, mapping))]
    profile = _risk_profile(model, mapping, eps_i)
    return InfoStageResult(mapping, profile, tuple(trace), converged)


def _solve_mixture_lp(err, risks, th, lp_tol):
    n_cols = err.shape[0]
    a_ub, b_ub = [], []
    for g, r in sorted(risks.items()):
        a_ub.append(-r)
        b_ub.append(-th)
    a_eq = np.ones((1, n_cols))
    b_eq = np.ones(1)
    try:
        res = solve_lp(
            err,
            a_ub=np.array(a_ub) if a_ub else None,
            b_ub=np.array(b_ub) if b_ub else None,
            a_eq=a_eq,
            b_eq=b_eq,
            tol=lp_tol,
        )
    except LPInfeasible:
        blocking = min(
            risks, key=lambda g: float(np.max(risks[g]))
        ) if risks else -1
        raise InfoStageInfeasible(blocking, th) from None
    nu = np.clip(res.x, 0.0, None)
    return nu / nu.sum()


def _risk_profile(model, mapping, eps_i) -> PrivacyRiskProfile:
    p_g = model.prior.sum(axis=0)
    min_risks = {}
    for g in range(1, model.n_g):
        if p_g[g] <= 0 or p_g[0] <= 0:
            continue
        _, risk = min_risk_detector(model, mapping, g)
        min_risks[g] = risk
    c_g = compute_c_G(model, mapping)
    th = 0.0 if math.isinf(eps_i) else theta(eps_i, c_g)
    return PrivacyRiskProfile(min_risks, c_g, th)


def _utility_stage(model, config, cands, max_sweeps=30):
    """Detection-error minimization with no privacy constraint at all.

    Per sweep each sensor takes the error-minimizing deterministic
    quantizer given the rest; used as the relaxation target below.
    Initialized from per-sensor likelihood-sign quantizers (an all-constant
    start is a degenerate fixed point of coordinate descent).
    """
    y_size = cands.shape[2]
    chans = []
    for t in range(model.s):
        d_h = np.einsum("hg,hgx->hx", model.prior, model.conditionals[t])
        sign = (d_h[1] > d_h[0]).astype(int)
        rows = np.zeros((model.x_size, y_size))
        rows[np.arange(model.x_size), sign % y_size] = 1.0
        chans.append(SensorChannel(rows))
    prev_obj = np.inf
    for _ in range(max_sweeps):
        mapping = NetworkMapping(tuple(chans))
        rule = optimal_rule_from_pushed(push_forward(model, mapping))
        for t in range(model.s):
            err, _ = _stage_column_stats(model, chans, t, cands, rule)
            chans[t] = SensorChannel(cands[int(np.argmin(err))])
        obj = bayes_error_H_pushed(push_forward(model, NetworkMapping(tuple(chans))))
        if obj >= prev_obj - 1e-12:
            break
        prev_obj = obj
    return chans


def _audited_waterfill(model, eps_i, config, cands):
    """Direct utility-vs-budget allocation for the no-data-privacy design.

    Starting from input-independent channels (budget zero), each sensor is
    blended toward its unconstrained utility quantizer as far as the
    audited posterior-ratio budget allows, cheapest leak first.  A sensor
    that is nearly uninformative about the private hypothesis costs almost
    no budget and gets passed through close to raw, which is exactly why a
    design without a data-privacy constraint leaks data privacy.
    """
    util = _utility_stage(model, config, cands)
    target = [u.rows for u in util]
    base = [np.tile(u.mean(axis=0), (model.x_size, 1)) for u in target]

    def mix(gammas):
        return [
            SensorChannel((1 - g) * b + g * u)
            for g, b, u in zip(gammas, base, target)
        ]

    def audit(mixed):
        pushed = push_forward(model, NetworkMapping(tuple(mixed)))
        return metrics.info_privacy_budget(pushed), bayes_error_H_pushed(pushed)

    if math.isinf(eps_i):
        return util
    # Incremental water-filling: repeatedly grant the cheapest affordable
    # marginal step until the budget binds everywhere.
    gammas = np.zeros(model.s)
    for step in (0.1, 0.02):
        while True:
            cur_b, _ = audit(mix(gammas))
            candidates = []
            for t in range(model.s):
                if gammas[t] >= 1.0:
                    continue
                trial = gammas.copy()
                trial[t] = min(1.0, gammas[t] + step)
                b, _ = audit(mix(trial))
                if b <= eps_i:
                    candidates.append((b - cur_b, t, trial[t]))
            if not candidates:
                break
            _, t, g = min(candidates)
            gammas[t] = g
    best = mix(gammas)
    if audit(best)[0] > eps_i:
        best = mix(np.zeros(model.s))
    return best


def _enforce_info_budget(model, chans, eps_i):
    """Shrink toward input-independent channels until the audit passes.

    The risk threshold is a sufficient condition only up to the constant
    c_G measured on the evolving mapping, so the final mapping is audited
    directly; mixing every sensor toward its column-average row reaches
    budget zero at full shrinkage, and the smallest adequate mixing weight
    is located by bisection (validated, with a linear scan as fallback).
    """
    if math.isinf(eps_i):
        return chans
    base = [c.rows for c in chans]
    const = [np.tile(r.mean(axis=0), (r.shape[0], 1)) for r in base]

    def budget(beta):
        mixed = [
            SensorChannel((1 - beta) * b + beta * c) for b, c in zip(base, const)
        ]
        mapping = NetworkMapping(tuple(mixed))
        return metrics.info_privacy_budget(push_forward(model, mapping)), mixed

    val, mixed = budget(0.0)
    if val <= eps_i:
        return mixed
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        val, _ = budget(mid)
        if val <= eps_i:
            hi = mid
        else:
            lo = mid
    val, mixed = budget(hi)
    if val <= eps_i:
        return mixed
    for beta in np.linspace(0.0, 1.0, 101):
        val, mixed = budget(beta)
        if val <= eps_i:
            return mixed
    val, mixed = budget(1.0)
    return mixed


# -- two-stage architectures ---------------------------------------------------


def design_ill(
    model: JointModel,
    config: OptimizerConfig,
    initial_stage2: NetworkMapping | None = None,
) -> DesignResult:
    """Information stage at the full posterior budget, then a local stage
    run at half the local budget per stage so the composition meets it."""
    info = design_info_stage(model, config.eps_i, config)
    y_model = push_forward_model(model, info.mapping)
    half = dataclasses.replace(config, eps_ld=config.eps_ld / 2.0)
    ldp = design_ldp(y_model, half, out_size=config.z_size, initial=initial_stage2)
    two = TwoStageMapping(info.mapping, ldp.mapping, "ill")
    # stage 2 runs on the stage-1 image, so its per-sweep objective is the
    # final detection error of the whole pipeline
    return _finish_two_stage(model, two, ldp.trace, ldp.converged and info.converged, info.profile)


def design_lip(
    model: JointModel,
    config: OptimizerConfig,
    initial_stage1: NetworkMapping | None = None,
) -> DesignResult:
    """Local stage at the full local budget, then an information stage on
    its output; post-processing keeps the composed local budget intact."""
    ldp = design_ldp(model, config, out_size=config.stage_y_size, initial=initial_stage1)
    y_model = push_forward_model(model, ldp.mapping)
    stage2_cfg = dataclasses.replace(config, y_size=config.z_size)
    info = design_info_stage(y_model, config.eps_i, stage2_cfg)
    two = TwoStageMapping(ldp.mapping, info.mapping, "lip")
    return _finish_two_stage(model, two, info.trace, ldp.converged and info.converged, info.profile)


def design_inp(model: JointModel, config: OptimizerConfig) -> DesignResult:
    """Information-privacy-only design: the stage output is the wire output.

    With no data-privacy stage to follow, the binding contract is the
    audited posterior-ratio budget itself, so surplus protection left by
    the conservative risk threshold is traded back for detection accuracy.
    """
    cfg = dataclasses.replace(config, y_size=config.z_size)
    info = design_info_stage(model, config.eps_i, cfg)
    cands = _deterministic_candidates(model.x_size, config.z_size, cfg.phi_cap, cfg.seed)
    filled = _audited_waterfill(model, config.eps_i, cfg, cands)
    err_info = bayes_error_H_pushed(push_forward(model, info.mapping))
    err_fill = bayes_error_H_pushed(push_forward(model, NetworkMapping(tuple(filled))))
    mapping = NetworkMapping(tuple(filled)) if err_fill <= err_info else info.mapping
    pushed = push_forward(model, mapping)
    return DesignResult(
        mapping=mapping,
        rule=optimal_rule_from_pushed(pushed),
        trace=info.trace,
        report=full_report(model, mapping),
        converged=info.converged,
        objective=bayes_error_H_pushed(pushed),
        profile=_risk_profile(model, mapping, config.eps_i),
    )


def _finish_two_stage(model, two, trace, converged, profile) -> DesignResult:
    composed = compose(two)
    pushed = push_forward(model, composed)
    return DesignResult(
        mapping=two,
        rule=optimal_rule_from_pushed(pushed),
        trace=tuple(trace),
        report=full_report(model, composed),
        converged=converged,
        objective=bayes_error_H_pushed(pushed),
        profile=profile,
    )


def design(model: JointModel, arch: str, config: OptimizerConfig, **kwargs) -> DesignResult:
    """Dispatch by architecture name: ldp, ill, lip or inp."""
    if arch == "ldp":
        return design_ldp(model, config, **kwargs)
    if arch == "ill":
        return design_ill(model, config, **kwargs)
    if arch == "lip":
        return design_lip(model, config, **kwargs)
    if arch == "inp":
        return design_inp(model, config, **kwargs)
    raise ValueError(f"unknown architecture {arch!r}")


def chain_designs(model: JointModel, arch: str, eps_ld_grid, config: OptimizerConfig):
    """Designs along an ascending local-budget grid with warm starts.

    A mapping feasible at a smaller local budget stays feasible at a larger
    one, so each grid point also considers the previous solution (as a warm
    start and as a fallback candidate), making the achieved detection error
    non-increasing along the grid.
    """
    order = sorted(range(len(eps_ld_grid)), key=lambda i: eps_ld_grid[i])
    results: dict[int, DesignResult] = {}
    prev: DesignResult | None = None
    for idx in order:
        cfg = dataclasses.replace(config, eps_ld=float(eps_ld_grid[idx]))
        kwargs = {}
        if prev is not None and arch == "ill":
            kwargs["initial_stage2"] = prev.mapping.stage2
        elif prev is not None and arch == "lip":
            kwargs["initial_stage1"] = prev.mapping.stage1
        elif prev is not None and arch == "ldp":
            kwargs["initial"] = prev.mapping
        res = design(model, arch, cfg, **kwargs)
        if prev is not None and prev.objective < res.objective - 1e-15:
            res = _reuse_previous(model, prev, res)
        results[idx] = res
        prev = results[idx]
    return [results[i] for i in range(len(eps_ld_grid))]


def _reuse_previous(model, prev: DesignResult, fresh: DesignResult) -> DesignResult:
    """Keep the previous grid point's mapping when it is strictly better."""
    return DesignResult(
        mapping=prev.mapping,
        rule=prev.rule,
        trace=fresh.trace + (prev.objective,),
        report=prev.report,
        converged=prev.converged,
        objective=prev.objective,
        profile=prev.profile,
    )

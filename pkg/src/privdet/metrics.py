"""Privacy budget computations.

All budgets are reported in nats (natural logarithms throughout).  Ratio
conventions: a pair whose numerator and denominator are both zero lies
outside the support and is skipped; a positive numerator over a zero
denominator yields +inf.  Posterior ratios are only evaluated at outputs
with positive probability.

The six budgets:

* information privacy     -- max |log p(g|z) / p(g)|
* inference differential  -- max log p(z|g) / p(z|g') over neighboring g, g'
* average leakage         -- I(G; Z)
* local differential      -- max log p_t(z|x) / p_t(z|x') per sensor
* mutual information      -- I(X; Z)
* identifiability         -- max log p(x|z) / p(x'|z) over neighboring x, x'

plus delta_x, the max log prior ratio over neighboring observation vectors.
"""

from __future__ import annotations

import dataclasses
import functools
import math

import numpy as np

from .channels import NetworkMapping
from .model import EXPANSION_CAP, JointModel, PushedModel, push_forward

LOG2 = math.log(2.0)


# -- table-level primitives --------------------------------------------------


def mutual_information(joint: np.ndarray) -> float:
    """I(A; B) in nats from a 2-D joint table, with the 0 log 0 = 0 convention."""
    joint = np.asarray(joint, dtype=float)
    if joint.ndim != 2:
        raise ValueError("mutual_information expects a 2-D joint table")
    pa = joint.sum(axis=1, keepdims=True)
    pb = joint.sum(axis=0, keepdims=True)
    mask = joint > 0
    ratio = np.ones_like(joint)
    np.divide(joint, pa * pb, out=ratio, where=mask)
    return float(max(0.0, np.sum(joint[mask] * np.log(ratio[mask]))))


def max_abs_log_posterior_ratio(joint: np.ndarray) -> float:
    """max over the joint support of |log p(a|b) / p(a)|.

    Rows index the protected variable, columns the observed one.  The
    maximum runs over cells with p(a, b) > 0: outputs of probability zero
    can never be observed, and a protected value with zero posterior mass
    at an observed output is treated the same way (the support-restricted
    reading of the posterior-ratio budget).
    """
    joint = np.asarray(joint, dtype=float)
    pa = joint.sum(axis=1)
    pb = joint.sum(axis=0)
    mask = joint > 0
    if not mask.any():
        return 0.0
    denom = pa[:, None] * pb[None, :]
    return float(np.abs(np.log(joint[mask] / denom[mask])).max())


def _max_log_ratio_pairs(num: np.ndarray, den: np.ndarray) -> float:
    """max log(num_k / den_k) over aligned entries, with zero conventions."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    live = (num > 0) | (den > 0)
    if not live.any():
        return 0.0
    if np.any((den == 0) & (num > 0)):
        return math.inf
    both = (num > 0) & (den > 0)
    if not both.any():
        return 0.0
    return float(np.log(num[both] / den[both]).max())


def _neighbor_axis_budget(table: np.ndarray) -> float:
    """max log ratio between entries differing in one leading-axis index.

    ``table`` has shape (k, ...): entries along axis 0 with identical
    trailing indices are compared pairwise.
    """
    k = table.shape[0]
    flat = table.reshape(k, -1)
    best = 0.0
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            r = _max_log_ratio_pairs(flat[i], flat[j])
            best = max(best, r)
            if best == math.inf:
                return best
    return best


# -- per-metric operations ----------------------------------------------------


def ldp_budget(mapping: NetworkMapping) -> float:
    """Worst-case per-sensor log likelihood ratio across inputs."""
    best = 0.0
    for ch in mapping.channels:
        best = max(best, _neighbor_axis_budget(ch.rows))
        if best == math.inf:
            return best
    return best


def info_privacy_budget(pushed: PushedModel) -> float:
    return max_abs_log_posterior_ratio(pushed.p_gz())


def inference_dp_budget(pushed: PushedModel) -> float:
    """max log p(z|g)/p(z|g') over g, g' differing in one component."""
    p_gz = pushed.p_gz()
    p_g = p_gz.sum(axis=1)
    best = 0.0
    for g in range(pushed.n_g):
        if p_g[g] <= 0:
            continue
        for bit in range(pushed.q):
            g2 = g ^ (1 << bit)
            if p_g[g2] <= 0:
                continue
            r = _max_log_ratio_pairs(p_gz[g] / p_g[g], p_gz[g2] / p_g[g2])
            best = max(best, r)
            if best == math.inf:
                return best
    return best


def avg_info_leakage(pushed: PushedModel) -> float:
    return mutual_information(pushed.p_gz())


def mutual_info_privacy_budget(pushed: PushedModel) -> float:
    """I(X; Z) in nats; materializes the (X, Z) joint (capped)."""
    return mutual_information(_joint_xz(pushed))


def identifiability_budget(pushed: PushedModel) -> float:
    """max log p(x|z)/p(x'|z) over observation vectors differing in one sensor."""
    joint_xz = _joint_xz(pushed)
    model = pushed.source
    shaped = joint_xz.reshape((model.x_size,) * model.s + (pushed.n_z,))
    best = 0.0
    for t in range(model.s):
        moved = np.moveaxis(shaped, t, 0)
        best = max(best, _neighbor_axis_budget(moved))
        if best == math.inf:
            return best
    return best


def delta_x(model: JointModel) -> float:
    """max log p(x)/p(x') over neighboring observation vectors."""
    p_x = model.p_x().reshape((model.x_size,) * model.s)
    best = 0.0
    for t in range(model.s):
        moved = np.moveaxis(p_x, t, 0)
        best = max(best, _neighbor_axis_budget(moved))
        if best == math.inf:
            return best
    return best


def _joint_xz(pushed: PushedModel) -> np.ndarray:
    """p(x, z) = p(x) p(z|x) over flattened vectors (Z depends on X only)."""
    model = pushed.source
    cells = model.n_x * pushed.n_z
    if cells > EXPANSION_CAP:
        raise ValueError(
            f"(X, Z) joint needs {cells} cells (cap {EXPANSION_CAP}); "
            "observation-side budgets are only computed at desk scale"
        )
    big = functools.reduce(np.kron, [ch.rows for ch in pushed.mapping.channels])
    return model.p_x()[:, None] * big


# -- empirical estimators -----------------------------------------------------


def empirical_budgets(samples, channels: NetworkMapping):
    """(eps_I_hat, eps_LD_hat) from (g, z) samples and the true channels.

    The information-privacy estimate uses empirical frequencies over the
    observed (g, z) pairs; the local budget is exact because the channels
    are known.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("empirical_budgets needs at least one sample")
    counts: dict = {}
    g_counts: dict = {}
    z_counts: dict = {}
    n = len(samples)
    for g, z in samples:
        gz = (int(g) if np.isscalar(g) else tuple(np.asarray(g).tolist()), tuple(np.asarray(z).tolist()))
        counts[gz] = counts.get(gz, 0) + 1
        g_counts[gz[0]] = g_counts.get(gz[0], 0) + 1
        z_counts[gz[1]] = z_counts.get(gz[1], 0) + 1
    eps_i = 0.0
    for (g, z), c in counts.items():
        ratio = (c / n) / ((g_counts[g] / n) * (z_counts[z] / n))
        eps_i = max(eps_i, abs(math.log(ratio)))
    return eps_i, ldp_budget(channels)


# -- aggregate report ---------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class BudgetReport:
    """All seven quantities for one (model, mapping) pair, in nats."""

    eps_info: float
    eps_inference_dp: float
    eps_avg_leakage: float
    eps_ldp: float
    eps_mutual_info: float
    eps_identifiability: float
    delta_x: float

    def to_dict(self) -> dict:
        return {k: _json_float(v) for k, v in dataclasses.asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict) -> "BudgetReport":
        return cls(**{k: _parse_float(data[k]) for k in (f.name for f in dataclasses.fields(cls))})

    def csv_fields(self) -> dict:
        """Flat dict with a nats and a bits column per budget."""
        out = {}
        for k, v in dataclasses.asdict(self).items():
            out[f"{k}_nats"] = v
            out[f"{k}_bits"] = v / LOG2 if math.isfinite(v) else v
        return out


def _json_float(v: float):
    if math.isinf(v):
        return "inf"
    return v


def _parse_float(v) -> float:
    if v == "inf":
        return math.inf
    return float(v)


def full_report(model: JointModel, mapping: NetworkMapping) -> BudgetReport:
    """Compute every budget for one (model, mapping) pair."""
    pushed = push_forward(model, mapping)
    return BudgetReport(
        eps_info=info_privacy_budget(pushed),
        eps_inference_dp=inference_dp_budget(pushed),
        eps_avg_leakage=avg_info_leakage(pushed),
        eps_ldp=ldp_budget(mapping),
        eps_mutual_info=mutual_info_privacy_budget(pushed),
        eps_identifiability=identifiability_budget(pushed),
        delta_x=delta_x(model),
    )


def per_sensor_mutual_information(model: JointModel, mapping: NetworkMapping):
    """[I(X_t; Z_t)] for each sensor, computed factor-wise."""
    from .model import marginal

    out = []
    for t in range(model.s):
        p_x_t = marginal(model, [f"X{t}"])
        joint = p_x_t[:, None] * mapping.channels[t].rows
        out.append(mutual_information(joint))
    return out

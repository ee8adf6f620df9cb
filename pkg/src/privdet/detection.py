"""Fusion-center decision rules and detection-risk machinery.

The fusion center sees the sanitized vector Z and decides the public
hypothesis H; its minimum error probability (Bayes error) is the utility
of a privacy mapping, while the Bayes error of detecting G measures how
well the private hypothesis is protected.

This module also computes the binary detection risk R_g for telling
G = g apart from G = 0 on an intermediate sanitized alphabet, together
with the model constant c_G and the risk threshold theta whose
satisfaction enforces a posterior-ratio budget on G.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .channels import NetworkMapping
from .model import JointModel, PushedModel, push_forward

RATIO_TIE_RTOL = 1e-12


@dataclasses.dataclass(frozen=True)
class FusionRule:
    """Deterministic decision map from flattened Z^s to {0, 1}."""

    table: np.ndarray  # (z_size**s,) of 0/1
    s: int
    z_size: int

    def __post_init__(self):
        table = np.asarray(self.table, dtype=np.int8)
        if table.shape != (self.z_size ** self.s,):
            raise ValueError(
                f"rule table has shape {table.shape}, expected ({self.z_size ** self.s},)"
            )
        if not np.isin(table, (0, 1)).all():
            raise ValueError("rule table entries must be 0 or 1")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    def __call__(self, z_flat: int) -> int:
        return int(self.table[z_flat])


def optimal_fusion_rule(model: JointModel, mapping: NetworkMapping) -> FusionRule:
    """Maximum-a-posteriori rule for H; ties broken toward H = 0."""
    pushed = push_forward(model, mapping)
    return optimal_rule_from_pushed(pushed)


def optimal_rule_from_pushed(pushed: PushedModel) -> FusionRule:
    p_hz = pushed.p_hz()
    table = (p_hz[1] > p_hz[0]).astype(np.int8)
    return FusionRule(table, pushed.s, pushed.z_size)


def bayes_error_H(model: JointModel, mapping: NetworkMapping, rule: FusionRule | None = None) -> float:
    """P(rule(Z) != H); with rule=None uses the optimal rule (Bayes error)."""
    pushed = push_forward(model, mapping)
    return bayes_error_H_pushed(pushed, rule)


def bayes_error_H_pushed(pushed: PushedModel, rule: FusionRule | None = None) -> float:
    p_hz = pushed.p_hz()
    if rule is None:
        return float(np.minimum(p_hz[0], p_hz[1]).sum())
    decide_one = pushed_rule_mask(pushed, rule)
    return float(p_hz[0][decide_one].sum() + p_hz[1][~decide_one].sum())


def pushed_rule_mask(pushed: PushedModel, rule: FusionRule) -> np.ndarray:
    if rule.table.shape[0] != pushed.n_z:
        raise ValueError("rule is defined on a different output space")
    return rule.table.astype(bool)


def bayes_error_G(model: JointModel, mapping: NetworkMapping) -> float:
    """Minimum error of the 2**q-ary MAP detector for G: 1 - sum_z max_g p(g, z)."""
    pushed = push_forward(model, mapping)
    return bayes_error_G_pushed(pushed)


def bayes_error_G_pushed(pushed: PushedModel) -> float:
    p_gz = pushed.p_gz()
    return float(1.0 - p_gz.max(axis=0).sum())


# -- pairwise detection risks ---------------------------------------------


def _p_y_given_g(model: JointModel, stage1: NetworkMapping, g: int) -> np.ndarray:
    pushed = push_forward(model, stage1)
    p_gy = pushed.p_gz()
    p_g = p_gy.sum(axis=1)
    if p_g[g] <= 0:
        raise ValueError(f"private value {g} has zero prior probability")
    return p_gy[g] / p_g[g]


def likelihood_ratios(model: JointModel, stage1: NetworkMapping, g: int) -> np.ndarray:
    """l_g(y) = p(y|G=g) / p(y|G=0) with inf where only the numerator lives.

    Entries outside the support of both conditionals are NaN.
    """
    p0 = _p_y_given_g(model, stage1, 0)
    pg = _p_y_given_g(model, stage1, g)
    ell = np.full(p0.shape, np.nan)
    both = p0 > 0
    ell[both] = pg[both] / p0[both]
    ell[(p0 == 0) & (pg > 0)] = np.inf
    return ell


def min_risk_detector(model: JointModel, stage1: NetworkMapping, g: int):
    """Likelihood-ratio detector for G = g versus G = 0 and its risk.

    The detector decides g exactly when l_g(y) >= 1.  Its risk
    R_g = (P(decide g | G=0) + P(decide 0 | G=g)) / 2 equals
    sum_y min(p(y|0), p(y|g)) / 2, the minimum over all detectors.
    """
    if g == 0:
        raise ValueError("the reference hypothesis G=0 cannot be its own alternative")
    p0 = _p_y_given_g(model, stage1, 0)
    if not np.any(p0 > 0):
        raise ValueError("p(y | G=0) is identically zero")
    pg = _p_y_given_g(model, stage1, g)
    decide_g = pg >= p0  # l_g(y) >= 1, ties decide g
    risk = 0.5 * (p0[decide_g].sum() + pg[~decide_g].sum())
    return decide_g.astype(np.int8), float(risk)


def min_risk_value(p0: np.ndarray, pg: np.ndarray) -> float:
    """min over detectors of R_g, directly from the two conditionals."""
    return float(0.5 * np.minimum(p0, pg).sum())


def compute_c_G(model: JointModel, stage1: NetworkMapping) -> float:
    """min over g != 0 of the extreme-likelihood-set probabilities.

    For each g the two candidates are P(Y in argmin_y l_g | G=0) and
    P(Y in argmax_y l_g | G=g); ratio ties within 1e-12 relative are
    grouped into the arg sets.
    """
    pushed = push_forward(model, stage1)
    p_gy = pushed.p_gz()
    p_g = p_gy.sum(axis=1)
    best = 1.0
    for g in range(1, pushed.n_g):
        if p_g[g] <= 0:
            continue
        p0 = p_gy[0] / p_g[0]
        pg = p_gy[g] / p_g[g]
        live = (p0 > 0) | (pg > 0)
        ell = np.full(p0.shape, np.nan)
        both = p0 > 0
        ell[both & live] = pg[both & live] / p0[both & live]
        ell[(p0 == 0) & (pg > 0)] = np.inf
        defined = live & ~np.isnan(ell)
        if not defined.any():
            continue
        vals = ell[defined]
        finite = vals[np.isfinite(vals)]
        lo = finite.min() if finite.size else np.inf
        if np.isfinite(lo):
            argmin = defined & (ell <= lo * (1 + RATIO_TIE_RTOL) + 1e-300)
        else:
            argmin = defined & np.isinf(ell)
        hi = vals.max()
        if np.isinf(hi):
            argmax = defined & np.isinf(ell)
        else:
            argmax = defined & (ell >= hi * (1 - RATIO_TIE_RTOL) - 1e-300)
        cand = min(float(p0[argmin].sum()), float(pg[argmax].sum()))
        best = min(best, cand)
    return best


def theta(eps_i: float, c_g: float) -> float:
    """Risk threshold (1 - c_G (1 - e^{-eps_I/2})) / 2 on [0, 1/2]."""
    if eps_i < 0:
        raise ValueError(f"eps_i must be nonnegative, got {eps_i}")
    if not 0.0 <= c_g <= 1.0:
        raise ValueError(f"c_G must lie in [0, 1], got {c_g}")
    return (1.0 - c_g * (1.0 - math.exp(-eps_i / 2.0))) / 2.0


@dataclasses.dataclass(frozen=True)
class PrivacyRiskProfile:
    """Per-g minimum detection risks plus the constants they are held against."""

    min_risks: dict  # g -> min over detectors of R_g
    c_g: float
    theta: float

    def worst_margin(self) -> float:
        if not self.min_risks:
            return math.inf
        return min(self.min_risks.values()) - self.theta

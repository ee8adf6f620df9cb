"""Independent brute-force oracles used across the test suite.

Everything here enumerates explicitly (pure Python loops over full product
spaces) so the fast implementations are checked against a path they share
no code with.
"""

import itertools

import numpy as np


def brute_push(model, mapping):
    """p(h, g, z-vector) by full enumeration over X^s and Z^s."""
    z_size = mapping.channels[0].z_size
    n_g = model.n_g
    joint_hgx = model.joint_hgx()
    out = np.zeros((2, n_g, z_size ** model.s))
    for h in range(2):
        for g in range(n_g):
            for xi, xvec in enumerate(itertools.product(range(model.x_size), repeat=model.s)):
                p_x = joint_hgx[h, g, xi]
                if p_x == 0:
                    continue
                for zi, zvec in enumerate(itertools.product(range(z_size), repeat=model.s)):
                    w = 1.0
                    for t in range(model.s):
                        w *= mapping.channels[t].rows[xvec[t], zvec[t]]
                    out[h, g, zi] += p_x * w
    return out


def brute_error_with_rule(pushed, rule_table):
    """P(rule(Z) != H) from the pushed joint by direct summation."""
    p_hz = pushed.joint.sum(axis=1)
    err = 0.0
    for z in range(p_hz.shape[1]):
        decided = rule_table[z]
        err += p_hz[1 - decided, z]
    return err


def best_rule_exhaustive(pushed):
    """Minimum-error deterministic rule by trying all 2**|Z^s| tables."""
    n_z = pushed.joint.shape[2]
    best_err, best_table = np.inf, None
    for bits in itertools.product((0, 1), repeat=n_z):
        err = brute_error_with_rule(pushed, bits)
        if err < best_err - 1e-15:
            best_err, best_table = err, bits
    return best_err, best_table


def best_detector_exhaustive(p0, pg):
    """min over all deterministic detectors of (P(say g|0) + P(say 0|g)) / 2."""
    n = p0.shape[0]
    best = np.inf
    for bits in itertools.product((0, 1), repeat=n):
        r = 0.5 * (
            sum(p0[y] for y in range(n) if bits[y] == 1)
            + sum(pg[y] for y in range(n) if bits[y] == 0)
        )
        best = min(best, r)
    return best


def mutual_information_direct(joint):
    """I(A;B) with explicit loops and the 0 log 0 convention."""
    joint = np.asarray(joint, dtype=float)
    pa = joint.sum(axis=1)
    pb = joint.sum(axis=0)
    total = 0.0
    for i in range(joint.shape[0]):
        for j in range(joint.shape[1]):
            if joint[i, j] > 0:
                total += joint[i, j] * np.log(joint[i, j] / (pa[i] * pb[j]))
    return total

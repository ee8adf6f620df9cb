"""Discrete probability models over (H, G, X) and their sanitized images.

H is a binary public hypothesis, G a vector of q binary private hypothesis
components (so G ranges over 2**q values), and X = (X_1, ..., X_s) the
per-sensor observations, each on the alphabet {0, ..., x_size - 1}.

Two representations are supported:

* ``cond_indep`` -- a prior table p(h, g) plus one conditional table
  p(x_t | h, g) per sensor; observations are conditionally independent
  given (H, G).  Operations work factor-wise, so the joint observation
  space X^s is never materialized.
* ``full`` -- a prior table plus a single conditional table over the
  whole observation vector, flattened row-major (sensor 1 most
  significant).  Fully general, but only viable for small s.

All model objects are immutable after construction; every operation here
is a pure function of its inputs.
"""

from __future__ import annotations

import dataclasses
import functools
import itertools
import json
from typing import Sequence

import numpy as np

from .channels import NetworkMapping

# Tolerance on user-supplied tables, and after arithmetic (summation error
# over up to ~1e6 terms).
PROB_ATOL_INPUT = 1e-12
PROB_ATOL_DERIVED = 1e-10

# Refuse to materialize joint tables bigger than this many cells.
EXPANSION_CAP = 50_000_000


class ModelFormatError(ValueError):
    """Raised when a model file or table violates the format invariants."""


@dataclasses.dataclass(frozen=True)
class Alphabet:
    """A finite symbol alphabet; symbols are 0 .. size-1."""

    name: str
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"alphabet {self.name!r} must have size >= 1, got {self.size}")


@dataclasses.dataclass(frozen=True)
class HypothesisSpace:
    """Binary public hypothesis plus q binary private components."""

    q: int

    def __post_init__(self):
        if self.q < 1:
            raise ValueError(f"q must be >= 1, got {self.q}")

    @property
    def n_g(self) -> int:
        return 2 ** self.q


def _as_readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


def _check_rows_stochastic(table: np.ndarray, what: str, atol: float = PROB_ATOL_INPUT) -> None:
    if np.any(table < 0):
        idx = tuple(int(i) for i in np.argwhere(table < 0)[0])
        raise ModelFormatError(f"{what} has negative entry {table[idx]:.3e} at {idx}")
    sums = table.sum(axis=-1)
    bad = np.abs(sums - 1.0) > atol
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise ModelFormatError(
            f"{what} row {idx} sums to {sums[idx]!r} (deficit {1.0 - sums[idx]:.3e})"
        )


@dataclasses.dataclass(frozen=True)
class JointModel:
    """Joint law of (H, G, X_1..X_s); see module docstring for the two forms."""

    s: int
    x_size: int
    q: int
    form: str  # "cond_indep" | "full"
    prior: np.ndarray  # (2, 2**q), p(h, g)
    conditionals: tuple  # cond_indep: s tables (2, 2**q, x_size); full: 1 table (2, 2**q, x_size**s)

    def __post_init__(self):
        if self.s < 1 or self.x_size < 1 or self.q < 1:
            raise ModelFormatError("s, x_size and q must all be >= 1")
        if self.form not in ("cond_indep", "full"):
            raise ModelFormatError(f"unknown model form {self.form!r}")
        prior = _as_readonly(self.prior)
        if prior.shape != (2, self.n_g):
            raise ModelFormatError(f"prior shape {prior.shape} != (2, {self.n_g})")
        if np.any(prior < 0):
            raise ModelFormatError("prior has a negative entry")
        mass = prior.sum()
        if abs(mass - 1.0) > PROB_ATOL_INPUT:
            raise ModelFormatError(f"prior mass is {mass!r} (deficit {1.0 - mass:.3e})")
        conds = tuple(_as_readonly(c) for c in self.conditionals)
        if self.form == "cond_indep":
            if len(conds) != self.s:
                raise ModelFormatError(f"expected {self.s} conditionals, got {len(conds)}")
            row_len = self.x_size
        else:
            if len(conds) != 1:
                raise ModelFormatError("full form takes exactly one conditional table")
            row_len = self.x_size ** self.s
        for t, c in enumerate(conds):
            if c.shape != (2, self.n_g, row_len):
                raise ModelFormatError(
                    f"conditional {t} shape {c.shape} != (2, {self.n_g}, {row_len})"
                )
            _check_rows_stochastic(c, f"conditional table {t}")
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "conditionals", conds)

    # -- basic views ------------------------------------------------------

    @property
    def n_g(self) -> int:
        return 2 ** self.q

    @property
    def n_x(self) -> int:
        return self.x_size ** self.s

    def p_hg(self) -> np.ndarray:
        return self.prior

    def joint_hgx(self) -> np.ndarray:
        """Full joint table p(h, g, x-vector) of shape (2, 2**q, x_size**s)."""
        cells = 2 * self.n_g * self.n_x
        if cells > EXPANSION_CAP:
            raise ModelFormatError(
                f"joint expansion needs {cells} cells (cap {EXPANSION_CAP}); "
                "keep the model in cond_indep form at this size"
            )
        if self.form == "full":
            return self.prior[:, :, None] * self.conditionals[0]
        out = self.prior[:, :, None].copy()
        for c in self.conditionals:
            out = out[:, :, :, None] * c[:, :, None, :]
            out = out.reshape(2, self.n_g, -1)
        return out

    def to_full(self) -> "JointModel":
        """Convert to the fully materialized representation."""
        if self.form == "full":
            return self
        joint = self.joint_hgx()
        prior = joint.sum(axis=2)
        cond = np.empty_like(joint)
        for h in range(2):
            for g in range(self.n_g):
                if prior[h, g] > 0:
                    cond[h, g] = joint[h, g] / prior[h, g]
                else:
                    cond[h, g] = 1.0 / self.n_x
        return JointModel(self.s, self.x_size, self.q, "full", self.prior, (cond,))

    def p_x(self) -> np.ndarray:
        """Marginal over the flattened observation vector."""
        joint = self.joint_hgx()
        return joint.sum(axis=(0, 1))

    def sensor_conditional(self, t: int) -> np.ndarray:
        """p(x_t | h, g) as a (2, 2**q, x_size) table (cond_indep only)."""
        if self.form != "cond_indep":
            raise ModelFormatError("per-sensor conditionals only exist in cond_indep form")
        return self.conditionals[t]

    def replace_sensor_conditional(self, t: int, table: np.ndarray) -> "JointModel":
        """A new model with sensor t's conditional replaced (cond_indep only)."""
        if self.form != "cond_indep":
            raise ModelFormatError("replace_sensor_conditional needs cond_indep form")
        conds = list(self.conditionals)
        conds[t] = np.asarray(table, dtype=float)
        return JointModel(self.s, self.x_size, self.q, self.form, self.prior, tuple(conds))

    # -- sampling ---------------------------------------------------------

    def sample(self, n: int, rng: np.random.Generator):
        """Draw n i.i.d. samples; returns (h, g, x) with x of shape (n, s)."""
        flat_prior = self.prior.reshape(-1)
        hg = rng.choice(flat_prior.size, size=n, p=flat_prior)
        h, g = np.divmod(hg, self.n_g)
        x = np.empty((n, self.s), dtype=np.int64)
        if self.form == "cond_indep":
            u = rng.random((n, self.s))
            for t in range(self.s):
                cdf = np.cumsum(self.conditionals[t], axis=-1)  # (2, n_g, x_size)
                x[:, t] = np.minimum(
                    (u[:, t, None] > cdf[h, g]).sum(axis=1), self.x_size - 1
                )
        else:
            cond = self.conditionals[0]
            u = rng.random(n)
            cdf = np.cumsum(cond, axis=-1)
            flat = np.minimum((u[:, None] > cdf[h, g]).sum(axis=1), self.n_x - 1)
            for t in reversed(range(self.s)):
                x[:, t] = flat % self.x_size
                flat //= self.x_size
        return h, g, x

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "x_size": self.x_size,
            "q": self.q,
            "form": self.form,
            "prior": self.prior.tolist(),
            "conditionals": [c.tolist() for c in self.conditionals],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "JointModel":
        try:
            return cls(
                s=int(data["s"]),
                x_size=int(data["x_size"]),
                q=int(data["q"]),
                form=str(data["form"]),
                prior=np.asarray(data["prior"], dtype=float),
                conditionals=tuple(np.asarray(c, dtype=float) for c in data["conditionals"]),
            )
        except KeyError as exc:
            raise ModelFormatError(f"model file is missing field {exc.args[0]!r}") from exc


@dataclasses.dataclass(frozen=True)
class PushedModel:
    """Joint law of (H, G, Z) obtained by pushing a model through a mapping.

    Keeps references to the source model and mapping so that views that
    genuinely involve X (identifiability, I(X;Z), ...) stay computable.
    """

    joint: np.ndarray  # (2, 2**q, z_size**s)
    s: int
    z_size: int
    q: int
    source: JointModel
    mapping: NetworkMapping

    def __post_init__(self):
        joint = _as_readonly(self.joint)
        if np.any(joint < 0):
            raise ModelFormatError("pushed joint has a negative entry")
        if abs(joint.sum() - 1.0) > PROB_ATOL_DERIVED:
            raise ModelFormatError(f"pushed joint mass is {joint.sum()!r}")
        drift = np.abs(joint.sum(axis=2) - self.source.prior).max()
        if drift > PROB_ATOL_DERIVED:
            raise ModelFormatError(f"(H, G) marginal drifted by {drift:.3e} under push-forward")
        object.__setattr__(self, "joint", joint)

    @property
    def n_g(self) -> int:
        return 2 ** self.q

    @property
    def n_z(self) -> int:
        return self.z_size ** self.s

    def p_hg(self) -> np.ndarray:
        return self.joint.sum(axis=2)

    def p_gz(self) -> np.ndarray:
        return self.joint.sum(axis=0)

    def p_hz(self) -> np.ndarray:
        return self.joint.sum(axis=1)

    def p_z(self) -> np.ndarray:
        return self.joint.sum(axis=(0, 1))


def push_forward(model: JointModel, mapping: NetworkMapping) -> PushedModel:
    """Push (H, G, X) through a product-form mapping, yielding (H, G, Z).

    In cond_indep form the computation is factor-wise per sensor and never
    touches X^s; in full form the per-sensor channels are combined into a
    Kronecker-product channel over whole vectors.
    """
    _check_compatible(model, mapping)
    z_size = mapping.channels[0].z_size
    n_g = model.n_g
    if model.form == "cond_indep":
        joint = model.prior[:, :, None].copy()
        for t in range(model.s):
            pushed_t = model.conditionals[t] @ mapping.channels[t].rows  # (2, n_g, z)
            joint = joint[:, :, :, None] * pushed_t[:, :, None, :]
            joint = joint.reshape(2, n_g, -1)
    else:
        big = functools.reduce(np.kron, [ch.rows for ch in mapping.channels])
        joint = model.joint_hgx() @ big
    return PushedModel(joint, model.s, z_size, model.q, model, mapping)


def push_forward_model(model: JointModel, mapping: NetworkMapping) -> JointModel:
    """Like :func:`push_forward`, but returns the image as a JointModel.

    Used to treat an intermediate sanitized alphabet as the observation
    space of a downstream design stage.  Preserves the representation form.
    """
    _check_compatible(model, mapping)
    z_size = mapping.channels[0].z_size
    if model.form == "cond_indep":
        conds = tuple(
            model.conditionals[t] @ mapping.channels[t].rows for t in range(model.s)
        )
        conds = tuple(c / c.sum(axis=-1, keepdims=True) for c in conds)
        return JointModel(model.s, z_size, model.q, "cond_indep", model.prior, conds)
    pushed = push_forward(model, mapping)
    prior = model.prior
    cond = np.empty((2, model.n_g, pushed.n_z))
    for h in range(2):
        for g in range(model.n_g):
            if prior[h, g] > 0:
                cond[h, g] = pushed.joint[h, g] / prior[h, g]
            else:
                cond[h, g] = 1.0 / pushed.n_z
    return JointModel(model.s, z_size, model.q, "full", prior, (cond,))


def _check_compatible(model: JointModel, mapping: NetworkMapping) -> None:
    if len(mapping.channels) != model.s:
        raise ModelFormatError(
            f"mapping has {len(mapping.channels)} channels for a {model.s}-sensor model"
        )
    for t, ch in enumerate(mapping.channels):
        if ch.x_size != model.x_size:
            raise ModelFormatError(
                f"channel {t} expects inputs of size {ch.x_size}, model has {model.x_size}"
            )
    z_sizes = {ch.z_size for ch in mapping.channels}
    if len(z_sizes) != 1:
        raise ModelFormatError("all channels must share one output alphabet")


# -- marginals -------------------------------------------------------------


def marginal(obj, variables: Sequence[str]) -> np.ndarray:
    """Exact marginal table of the requested variables, axes in given order.

    Variables are "H", "G", the whole vector "X"/"Z" (one flattened axis) or
    single components "X0".."X{s-1}" / "Z0"...  An empty list sums
    everything out and returns the total mass (scalar array 1.0).
    """
    if isinstance(obj, JointModel):
        return _marginal_model(obj, list(variables))
    if isinstance(obj, PushedModel):
        return _marginal_pushed(obj, list(variables))
    raise TypeError(f"cannot take marginals of {type(obj).__name__}")


def _parse_vars(variables, vec_letter, s):
    """Map variable names to ('H'|'G'|('vec',)|('comp', t)) tokens."""
    tokens = []
    for v in variables:
        if v == "H" or v == "G":
            tokens.append(v)
        elif v == vec_letter:
            tokens.append(("vec",))
        elif v.startswith(vec_letter) and v[len(vec_letter):].isdigit():
            t = int(v[len(vec_letter):])
            if not 0 <= t < s:
                raise ValueError(f"unknown variable {v!r}: sensor index out of range")
            tokens.append(("comp", t))
        else:
            raise ValueError(f"unknown variable {v!r}")
    if len(set(map(str, tokens))) != len(tokens):
        raise ValueError("duplicate variable requested")
    return tokens


def _marginal_from_joint(joint, s, sym_size, tokens):
    """Marginalize a (2, n_g, sym_size**s) table down to the tokens."""
    n_g = joint.shape[1]
    full = joint.reshape((2, n_g) + (sym_size,) * s)
    keep = []
    for tok in tokens:
        if tok == "H":
            keep.append(0)
        elif tok == "G":
            keep.append(1)
        elif tok == ("vec",):
            keep.extend(range(2, 2 + s))
        else:
            keep.append(2 + tok[1])
    drop = tuple(ax for ax in range(2 + s) if ax not in keep)
    summed = full.sum(axis=drop, keepdims=True)
    order = keep + [ax for ax in range(2 + s) if ax not in keep]
    summed = np.transpose(summed, order)
    summed = summed.reshape(summed.shape[: len(keep)])
    if any(tok == ("vec",) for tok in tokens):
        # collapse the s component axes into one flattened axis, in place
        pos = next(i for i, tok in enumerate(tokens) if tok == ("vec",))
        shape = summed.shape[:pos] + (sym_size ** s,) + summed.shape[pos + s:]
        summed = summed.reshape(shape)
    return summed if tokens else np.asarray(summed.sum())


def _marginal_model(model: JointModel, variables):
    tokens = _parse_vars(variables, "X", model.s)
    if not tokens:
        return np.asarray(model.prior.sum())
    needs_vec = any(tok == ("vec",) for tok in tokens)
    if model.form == "full" or needs_vec:
        return _marginal_from_joint(model.joint_hgx(), model.s, model.x_size, tokens)
    # cond_indep: only materialize the requested sensors
    sensors = [tok[1] for tok in tokens if isinstance(tok, tuple) and tok[0] == "comp"]
    table = model.prior.copy()  # axes (h, g) then requested sensors in order
    for t in sensors:
        table = table[..., None] * np.moveaxis(
            model.conditionals[t], (0, 1), (0, 1)
        ).reshape((2, model.n_g) + (1,) * (table.ndim - 2) + (model.x_size,))
    # now axes are (h, g, x_{sensors[0]}, ...); reduce and order per tokens
    keep = []
    for tok in tokens:
        if tok == "H":
            keep.append(0)
        elif tok == "G":
            keep.append(1)
        else:
            keep.append(2 + sensors.index(tok[1]))
    drop = tuple(ax for ax in range(table.ndim) if ax not in keep)
    summed = table.sum(axis=drop, keepdims=True)
    order = keep + [ax for ax in range(table.ndim) if ax not in keep]
    summed = np.transpose(summed, order)
    return summed.reshape(summed.shape[: len(keep)])


def _marginal_pushed(pushed: PushedModel, variables):
    tokens = _parse_vars(variables, "Z", pushed.s)
    if not tokens:
        return np.asarray(pushed.joint.sum())
    return _marginal_from_joint(pushed.joint, pushed.s, pushed.z_size, tokens)


# -- synthetic model generator ---------------------------------------------

# Mean offsets of the shifted-noise observation family, indexed by (h, g).
_BASE_SHIFT = {(0, 0): -3.0, (0, 1): -1.0, (1, 0): 1.0, (1, 1): 3.0}
_NOISE_OFFSETS = np.arange(-2, 3)  # uniform over 5 values


def generate_correlated_model(
    seed: int,
    s: int,
    x_size: int,
    q: int = 1,
    target_corr: float = 0.2,
    p_h0: float = 0.5,
    p_g0: float = 0.5,
    jitter: float = 0.5,
) -> JointModel:
    """Seeded cond_indep model whose corr(H, G) equals target_corr exactly.

    The prior is solved from the moment equations for the requested
    marginals; per-sensor conditionals come from a shifted-noise family
    (mean offset -3/-1/+1/+3 per (h, g) cell plus uniform noise over five
    steps), rescaled onto {0, ..., x_size - 1}.  ``jitter`` perturbs each
    sensor's offsets by a seeded uniform amount in [-jitter, jitter] so
    sensors are not identical; jitter=0 reproduces the family verbatim.

    Raises ValueError when the correlation is infeasible for the requested
    marginals.
    """
    if q != 1:
        raise ValueError("generator supports a single private component (q=1)")
    if not -1.0 <= target_corr <= 1.0:
        raise ValueError(f"target_corr must lie in [-1, 1], got {target_corr}")
    if not (0.0 < p_h0 < 1.0 and 0.0 < p_g0 < 1.0):
        raise ValueError("marginals must be interior: 0 < p_h0, p_g0 < 1")
    p_h1, p_g1 = 1.0 - p_h0, 1.0 - p_g0
    sd = np.sqrt(p_h0 * p_h1 * p_g0 * p_g1)
    p11 = p_h1 * p_g1 + target_corr * sd
    prior = np.array(
        [[1.0 - p_h1 - p_g1 + p11, p_g1 - p11], [p_h1 - p11, p11]]
    )
    if np.any(prior < -1e-12):
        raise ValueError(
            f"correlation {target_corr} is infeasible for marginals "
            f"p_h0={p_h0}, p_g0={p_g0}"
        )
    prior = np.clip(prior, 0.0, None)
    prior /= prior.sum()

    rng = np.random.default_rng(seed)
    conds = []
    scale = (x_size - 1) / 10.0 if x_size > 1 else 0.0
    for _ in range(s):
        table = np.zeros((2, 2, x_size))
        for (h, g), base in _BASE_SHIFT.items():
            mu = base + (rng.uniform(-jitter, jitter) if jitter > 0 else 0.0)
            for offset in _NOISE_OFFSETS:
                v = mu + offset
                sym = int(round((v + 5.0) * scale)) if x_size > 1 else 0
                sym = min(max(sym, 0), x_size - 1)
                table[h, g, sym] += 1.0 / len(_NOISE_OFFSETS)
        conds.append(table)
    return JointModel(s, x_size, 1, "cond_indep", prior, tuple(conds))


def table3_model(s: int = 4, target_corr: float = 0.2) -> JointModel:
    """The shifted-noise synthetic family on its native 11-symbol alphabet."""
    return generate_correlated_model(
        seed=0, s=s, x_size=11, q=1, target_corr=target_corr, jitter=0.0
    )


# -- file I/O ---------------------------------------------------------------


def save_model(model: JointModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, indent=1)
        fh.write("\n")


def load_model(path) -> JointModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ModelFormatError(f"{path}: expected a JSON object at top level")
    try:
        return JointModel.from_dict(data)
    except ModelFormatError as exc:
        raise ModelFormatError(f"{path}: {exc}") from exc

"""Per-sensor randomized privacy mappings and their compositions.

A sensor channel is a row-stochastic matrix p(z | x).  A network mapping is
the product-form collection of one channel per sensor.  Two-stage mappings
concatenate two network mappings per sensor, either sanitizing for the
private hypothesis first and then adding local noise ("ill") or the other
way around ("lip").
"""

from __future__ import annotations

import dataclasses
import json

import numpy as np

ROW_ATOL = 1e-12


@dataclasses.dataclass(frozen=True)
class SensorChannel:
    """Row-stochastic matrix p(z | x) with rows indexed by the input symbol."""

    rows: np.ndarray  # (x_size, z_size)

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise ValueError(f"channel matrix must be 2-D and non-empty, got {rows.shape}")
        if np.any(rows < 0):
            raise ValueError("channel has a negative entry")
        sums = rows.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > ROW_ATOL):
            bad = int(np.argmax(np.abs(sums - 1.0)))
            raise ValueError(f"channel row {bad} sums to {sums[bad]!r}")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def x_size(self) -> int:
        return self.rows.shape[0]

    @property
    def z_size(self) -> int:
        return self.rows.shape[1]

    def to_dict(self) -> dict:
        return {"x_size": self.x_size, "z_size": self.z_size, "rows": self.rows.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "SensorChannel":
        ch = cls(np.asarray(data["rows"], dtype=float))
        if ch.x_size != int(data["x_size"]) or ch.z_size != int(data["z_size"]):
            raise ValueError("declared channel sizes do not match the matrix")
        return ch


@dataclasses.dataclass(frozen=True)
class NetworkMapping:
    """Ordered per-sensor channels; the network acts as their product."""

    channels: tuple

    def __post_init__(self):
        chans = tuple(self.channels)
        if not chans:
            raise ValueError("a network mapping needs at least one channel")
        for ch in chans:
            if not isinstance(ch, SensorChannel):
                raise TypeError("channels must be SensorChannel instances")
        object.__setattr__(self, "channels", chans)

    @property
    def s(self) -> int:
        return len(self.channels)

    def sample(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Sample z (shape (n, s)) for observation rows x (shape (n, s))."""
        x = np.asarray(x)
        z = np.empty_like(x)
        for t, ch in enumerate(self.channels):
            cdf = np.cumsum(ch.rows, axis=1)
            u = rng.random(x.shape[0])
            z[:, t] = np.minimum((u[:, None] > cdf[x[:, t]]).sum(axis=1), ch.z_size - 1)
        return z

    def to_list(self) -> list:
        return [ch.to_dict() for ch in self.channels]

    @classmethod
    def from_list(cls, data: list) -> "NetworkMapping":
        return cls(tuple(SensorChannel.from_dict(d) for d in data))


@dataclasses.dataclass(frozen=True)
class TwoStageMapping:
    """Per-sensor concatenation of two mappings, tagged "ill" or "lip"."""

    stage1: NetworkMapping
    stage2: NetworkMapping
    arch: str

    def __post_init__(self):
        if self.arch not in ("ill", "lip"):
            raise ValueError(f"architecture must be 'ill' or 'lip', got {self.arch!r}")
        if self.stage1.s != self.stage2.s:
            raise ValueError("both stages must cover the same sensors")
        for t, (a, b) in enumerate(zip(self.stage1.channels, self.stage2.channels)):
            if a.z_size != b.x_size:
                raise ValueError(
                    f"sensor {t}: stage-1 output size {a.z_size} != stage-2 input {b.x_size}"
                )

    @property
    def s(self) -> int:
        return self.stage1.s

    def to_dict(self) -> dict:
        return {
            "arch": self.arch,
            "stage1": self.stage1.to_list(),
            "stage2": self.stage2.to_list(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TwoStageMapping":
        return cls(
            NetworkMapping.from_list(data["stage1"]),
            NetworkMapping.from_list(data["stage2"]),
            str(data["arch"]),
        )


def compose(two_stage: TwoStageMapping) -> NetworkMapping:
    """Collapse a two-stage mapping into one channel per sensor."""
    chans = []
    for a, b in zip(two_stage.stage1.channels, two_stage.stage2.channels):
        rows = a.rows @ b.rows
        rows = rows / rows.sum(axis=1, keepdims=True)
        chans.append(SensorChannel(rows))
    return NetworkMapping(tuple(chans))


def identity_mapping(s: int, x_size: int) -> NetworkMapping:
    eye = np.eye(x_size)
    return NetworkMapping(tuple(SensorChannel(eye) for _ in range(s)))


def uniform_mapping(s: int, x_size: int, z_size: int) -> NetworkMapping:
    rows = np.full((x_size, z_size), 1.0 / z_size)
    return NetworkMapping(tuple(SensorChannel(rows) for _ in range(s)))


def randomized_response(x_size: int, eps: float) -> SensorChannel:
    """Symmetric response channel: keep the symbol w.p. e^eps/(e^eps+k-1).

    Satisfies the local ratio bound with budget exactly ``eps``.
    """
    if eps < 0:
        raise ValueError(f"privacy budget must be nonnegative, got {eps}")
    if np.isinf(eps):
        return SensorChannel(np.eye(x_size))
    e = np.exp(eps)
    keep = e / (e + x_size - 1)
    off = 1.0 / (e + x_size - 1)
    rows = np.full((x_size, x_size), off)
    np.fill_diagonal(rows, keep)
    return SensorChannel(rows)


def random_channel(seed: int, x_size: int, z_size: int) -> SensorChannel:
    """Rows drawn uniformly from the probability simplex, reproducibly.

    Uses normalized exponential variates, which are exactly uniform on the
    simplex.
    """
    if x_size < 1 or z_size < 1:
        raise ValueError("alphabet sizes must be >= 1")
    rng = np.random.default_rng(seed)
    raw = rng.exponential(size=(x_size, z_size))
    return SensorChannel(raw / raw.sum(axis=1, keepdims=True))


def random_mapping(seed: int, s: int, x_size: int, z_size: int) -> NetworkMapping:
    """Independent random channels for every sensor, seeded as a family."""
    seeds = np.random.SeedSequence(seed).spawn(s)
    chans = []
    for ss in seeds:
        rng = np.random.default_rng(ss)
        raw = rng.exponential(size=(x_size, z_size))
        chans.append(SensorChannel(raw / raw.sum(axis=1, keepdims=True)))
    return NetworkMapping(tuple(chans))


# -- serialization helpers ---------------------------------------------------


def save_mapping(mapping, path) -> None:
    if isinstance(mapping, TwoStageMapping):
        payload = mapping.to_dict()
    elif isinstance(mapping, NetworkMapping):
        payload = mapping.to_list()
    elif isinstance(mapping, SensorChannel):
        payload = mapping.to_dict()
    else:
        raise TypeError(f"cannot serialize {type(mapping).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def load_mapping(path):
    """Load a channel, network mapping or two-stage mapping from JSON."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, list):
        return NetworkMapping.from_list(data)
    if isinstance(data, dict) and "arch" in data:
        return TwoStageMapping.from_dict(data)
    if isinstance(data, dict) and "rows" in data:
        return SensorChannel.from_dict(data)
    raise ValueError(f"{path}: unrecognized mapping layout")

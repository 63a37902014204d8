"""Integer (optionally hybrid) action spaces and the proto-action scaling maps."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

METRICS = ("chebyshev", "euclidean", "manhattan")


@dataclass
class ActionSpaceSpec:
    """Box of integer vectors, optionally followed by a box of reals.

    Actions travel through the package as flat float arrays of length
    ``n_dims + n_continuous``; the first ``n_dims`` entries are integer valued.
    ``permutation`` (one array per discrete dim) relabels values at the
    environment boundary and is invisible to the agent.
    """

    low: np.ndarray
    high: np.ndarray
    cont_low: np.ndarray = field(default_factory=lambda: np.zeros(0))
    cont_high: np.ndarray = field(default_factory=lambda: np.zeros(0))
    permutation: list[np.ndarray] | None = None
    metric: str = "chebyshev"

    def __post_init__(self) -> None:
        self.low = np.asarray(self.low, dtype=np.int64).reshape(-1)
        self.high = np.asarray(self.high, dtype=np.int64).reshape(-1)
        self.cont_low = np.asarray(self.cont_low, dtype=float).reshape(-1)
        self.cont_high = np.asarray(self.cont_high, dtype=float).reshape(-1)
        if self.low.shape != self.high.shape or np.any(self.low > self.high):
            raise ValueError("discrete bounds must satisfy low <= high per dimension")
        if self.cont_low.shape != self.cont_high.shape or np.any(self.cont_low > self.cont_high):
            raise ValueError("continuous bounds must satisfy low <= high per dimension")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.permutation is not None:
            if len(self.permutation) != self.n_dims:
                raise ValueError("need one permutation per discrete dimension")
            perms = []
            for d, p in enumerate(self.permutation):
                p = np.asarray(p, dtype=np.int64)
                values = np.arange(self.low[d], self.high[d] + 1)
                if p.shape != values.shape or not np.array_equal(np.sort(p), values):
                    raise ValueError(f"permutation of dim {d} is not a bijection on its values")
                perms.append(p)
            self.permutation = perms

    @classmethod
    def uniform(cls, n_dims: int, size: int, **kw) -> "ActionSpaceSpec":
        """``n_dims`` discrete dims each taking values ``0 .. size-1``."""
        return cls(np.zeros(n_dims, dtype=np.int64), np.full(n_dims, size - 1), **kw)

    @property
    def n_dims(self) -> int:
        return self.low.size

    @property
    def n_continuous(self) -> int:
        return self.cont_low.size

    @property
    def width(self) -> int:
        return self.n_dims + self.n_continuous

    @property
    def is_hybrid(self) -> bool:
        return self.n_continuous > 0

    def cardinality(self) -> int:
        """Number of discrete actions (python int, may be huge)."""
        out = 1
        for lo, hi in zip(self.low, self.high):
            out *= int(hi - lo + 1)
        return out

    def split(self, action: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        a = np.asarray(action)
        return np.rint(a[..., : self.n_dims]).astype(np.int64), a[..., self.n_dims:].astype(float)

    def contains(self, action: np.ndarray) -> bool:
        a = np.asarray(action, dtype=float)
        if a.shape[-1] != self.width:
            return False
        disc, cont = a[..., : self.n_dims], a[..., self.n_dims:]
        return bool(np.all(disc == np.rint(disc)) and np.all(disc >= self.low) and np.all(disc <= self.high)
                    and np.all(cont >= self.cont_low) and np.all(cont <= self.cont_high))

    def relabel(self, discrete: np.ndarray) -> np.ndarray:
        """Apply the irregular-structure permutation (identity if none)."""
        discrete = np.asarray(discrete, dtype=np.int64)
        if self.permutation is None:
            return discrete
        out = np.empty_like(discrete)
        for d, p in enumerate(self.permutation):
            out[..., d] = p[discrete[..., d] - self.low[d]]
        return out

    def sample(self, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
        """Uniform random action(s) over the full space."""
        shape = () if n is None else (n,)
        disc = rng.integers(self.low, self.high + 1, size=shape + (self.n_dims,))
        cont = rng.uniform(self.cont_low, self.cont_high, size=shape + (self.n_continuous,))
        return np.concatenate([disc.astype(float), cont], axis=-1)

    # bounds over the full flat vector
    @property
    def flat_low(self) -> np.ndarray:
        return np.concatenate([self.low.astype(float), self.cont_low])

    @property
    def flat_high(self) -> np.ndarray:
        return np.concatenate([self.high.astype(float), self.cont_high])


def scale_proto(proto: np.ndarray, spec: ActionSpaceSpec, proto_min: float = -1.0,
                proto_max: float = 1.0) -> np.ndarray:
    """Affine map from the actor range onto the action bounds (after clipping).

    Covers the discrete and continuous parts alike; degenerate bounds give a
    constant output.
    """
    p = np.clip(np.asarray(proto, dtype=float), proto_min, proto_max)
    lo, hi = spec.flat_low, spec.flat_high
    return (p - proto_min) / (proto_max - proto_min) * (hi - lo) + lo


def scale_gradient(spec: ActionSpaceSpec, proto_min: float = -1.0, proto_max: float = 1.0) -> np.ndarray:
    """Derivative of :func:`scale_proto` inside the clipping range."""
    return (spec.flat_high - spec.flat_low) / (proto_max - proto_min)


def unscale(action: np.ndarray, spec: ActionSpaceSpec, proto_min: float = -1.0,
            proto_max: float = 1.0) -> np.ndarray:
    """Inverse of :func:`scale_proto` (degenerate dims map to the range midpoint)."""
    lo, hi = spec.flat_low, spec.flat_high
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    frac = np.where(span > 0, (np.asarray(action, dtype=float) - lo) / safe, 0.5)
    return frac * (proto_max - proto_min) + proto_min


def critic_scale(action: np.ndarray, spec: ActionSpaceSpec) -> np.ndarray:
    """Map actions onto ``[0, 1]`` per dimension for the critic input."""
    lo, hi = spec.flat_low, spec.flat_high
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (np.asarray(action, dtype=float) - lo) / safe, 0.0)


def round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(np.asarray(x, dtype=float) + 0.5)


def nearest_neighbor(scaled: np.ndarray, spec: ActionSpaceSpec) -> np.ndarray:
    """Round the discrete part half-up and clip into bounds; continuous part is clipped."""
    s = np.asarray(scaled, dtype=float)
    disc = np.clip(round_half_up(s[..., : spec.n_dims]), spec.low, spec.high)
    cont = np.clip(s[..., spec.n_dims:], spec.cont_low, spec.cont_high)
    return np.concatenate([disc, cont], axis=-1)

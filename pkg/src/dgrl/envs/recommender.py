"""Movie recommender driven by cosine similarity between catalog feature rows.

Discrete variant: the user looks at one of the (distinct) recommended movies
picked uniformly at random and accepts it with probability
``1 / (1 + exp(-5 * S_ij))``. Otherwise the user picks a movie from the whole
catalog with probability proportional to that same acceptance score.

Hybrid variant: every recommended movie carries a price and the user makes a
multinomial-logit choice between the recommendations and an outside option.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..spaces import ActionSpaceSpec
from .maze import ActionError


class FormatError(ValueError):
    """Feature file is malformed."""


class DataError(ValueError):
    """Feature data violates a precondition (e.g. an all-zero row)."""


def _unique_rows(features: np.ndarray) -> np.ndarray:
    _, first = np.unique(features, axis=0, return_index=True)
    return features[np.sort(first)]


def load_feature_matrix(path: str | Path) -> np.ndarray:
    """Read delimiter-separated numeric rows (comma, tab or whitespace); duplicate rows dropped."""
    path = Path(path)
    text = path.read_text()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise FormatError(f"{path}: no data rows")
    delimiter = "," if "," in lines[0] else None
    try:
        rows = [[float(v) for v in ln.split(delimiter)] for ln in lines]
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise FormatError(f"{path}: ragged rows with widths {sorted(widths)}")
    features = np.asarray(rows, dtype=float)
    if np.any(features < 0) or not np.all(np.isfinite(features)):
        raise FormatError(f"{path}: entries must be finite and non-negative")
    if np.any(np.all(features == 0, axis=1)):
        raise DataError(f"{path}: all-zero feature row")
    return _unique_rows(features)


def synth_feature_matrix(rows: int = 343, cols: int = 24, seed: int = 0, max_tags: int = 4) -> np.ndarray:
    """Sparse non-negative tf-idf-like rows, all distinct, none zero.

    Each row tags 1..``max_tags`` columns; a tag contributes its idf weight
    ``log(1/frequency)`` times a random term frequency. Rows are L2 normalised.
    """
    rng = np.random.default_rng(seed)
    popularity = rng.dirichlet(np.full(cols, 0.8))
    idf = np.log(1.0 / np.clip(popularity, 1e-3, None))
    out: list[np.ndarray] = []
    seen: set[bytes] = set()
    while len(out) < rows:
        k = int(rng.integers(1, max_tags + 1))
        tags = rng.choice(cols, size=min(k, cols), replace=False, p=popularity)
        row = np.zeros(cols)
        row[tags] = idf[tags] * rng.integers(1, 4, size=tags.size)
        row /= np.linalg.norm(row)
        row = np.round(row, 6)
        key = row.tobytes()
        if key not in seen:
            seen.add(key)
            out.append(row)
    return np.vstack(out)


def build_similarity(features: np.ndarray) -> np.ndarray:
    """Cosine similarity matrix; symmetric with unit diagonal."""
    f = np.asarray(features, dtype=float)
    norms = np.linalg.norm(f, axis=1)
    if np.any(norms == 0):
        raise DataError("cosine similarity undefined for zero-norm rows")
    unit = f / norms[:, None]
    s = unit @ unit.T
    s = 0.5 * (s + s.T)
    np.fill_diagonal(s, 1.0)
    return s


def acceptance_probability(similarity: np.ndarray, gain: float = 5.0) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-gain * np.asarray(similarity, dtype=float)))


def mnl_probabilities(utilities: np.ndarray) -> np.ndarray:
    """Closed-form logit choice probabilities for deterministic utilities."""
    u = np.asarray(utilities, dtype=float)
    e = np.exp(u - u.max())
    return e / e.sum()


def mnl_choice(utilities: np.ndarray, rng: np.random.Generator) -> int:
    """Index of the max-utility option after adding i.i.d. standard Gumbel noise."""
    u = np.asarray(utilities, dtype=float)
    return int(np.argmax(u + rng.gumbel(size=u.shape)))


@dataclass
class RecommenderConfig:
    catalog: int = 343
    feature_dim: int = 24
    recommendations: int = 1
    feature_seed: int = 0
    feature_path: str | None = None
    leave_recommended: float = 0.10
    leave_other: float = 0.20
    sigmoid_gain: float = 5.0
    hybrid: bool = False
    kappa_similarity: float = 3.0
    kappa_price: float = 0.5
    kappa_outside: float = 1.0
    max_price: float = 5.0
    horizon: int = 100


class RecommenderEnv:
    def __init__(self, cfg: RecommenderConfig | None = None, seed: int | None = None,
                 features: np.ndarray | None = None):
        self.cfg = cfg or RecommenderConfig()
        c = self.cfg
        if features is None:
            features = (load_feature_matrix(c.feature_path) if c.feature_path
                        else synth_feature_matrix(c.catalog, c.feature_dim, c.feature_seed))
        self.features = np.asarray(features, dtype=float)
        self.similarity = build_similarity(self.features)
        self.accept = acceptance_probability(self.similarity, c.sigmoid_gain)
        n = len(self.features)
        self.movie_reward = 1.0 + self.features.mean(axis=1)
        d = c.recommendations
        cont = ([0.0] * d, [c.max_price] * d) if c.hybrid else ([], [])
        self.spec = ActionSpaceSpec(np.zeros(d), np.full(d, n - 1), cont[0], cont[1])
        self.observation_dim = self.features.shape[1]
        self._obs_scale = max(float(self.features.max()), 1e-12)
        self.rng = np.random.default_rng(seed)
        self.current = 0
        self.t = 0

    def observe(self) -> np.ndarray:
        return np.clip(self.features[self.current] / self._obs_scale, 0.0, 1.0)

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self.current = int(self.rng.integers(len(self.features)))
        self.t = 0
        return self.observe()

    def _parse(self, action: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        c = self.cfg
        a = np.asarray(action, dtype=float).reshape(-1)
        if a.size != self.spec.width:
            raise ActionError(f"expected action of length {self.spec.width}, got {a.size}")
        idx = a[: c.recommendations]
        if np.any(idx != np.rint(idx)) or np.any(idx < 0) or np.any(idx >= len(self.features)):
            raise ActionError("recommendation index outside the catalog")
        idx = idx.astype(np.int64)
        prices = np.clip(a[c.recommendations:], 0.0, c.max_price) if c.hybrid else np.zeros(idx.size)
        # duplicates collapse to the first occurrence (and its price)
        _, first = np.unique(idx, return_index=True)
        first = np.sort(first)
        return idx[first], prices[first]

    def _outside_pick(self) -> int:
        p = self.accept[self.current]
        return int(self.rng.choice(len(p), p=p / p.sum()))

    def step(self, action: np.ndarray) -> tuple[np.ndarray, float, bool, dict]:
        c = self.cfg
        recs, prices = self._parse(action)
        i = self.current
        price_paid = 0.0
        if c.hybrid:
            util = np.concatenate([[c.kappa_outside], c.kappa_similarity * self.similarity[i, recs] - c.kappa_price * prices])
            k = mnl_choice(util, self.rng)
            recommended = k > 0
            if recommended:
                chosen, price_paid = int(recs[k - 1]), float(prices[k - 1])
            else:
                chosen = self._outside_pick()
        else:
            j = int(recs[self.rng.integers(recs.size)])
            recommended = bool(self.rng.random() < self.accept[i, j])
            chosen = j if recommended else self._outside_pick()
        reward = float(self.movie_reward[chosen]) + price_paid
        leave = c.leave_recommended if recommended else c.leave_other
        left = bool(self.rng.random() < leave)
        self.current = chosen
        self.t += 1
        truncated = not left and self.t >= c.horizon
        info = {"truncated": truncated, "chosen": chosen, "recommended": recommended}
        return self.observe(), reward, left or truncated, info

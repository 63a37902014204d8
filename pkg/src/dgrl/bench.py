"""Experiment configs, multi-seed runs, step-time measurement and CSV output."""

from __future__ import annotations

import ast
import csv
import io
import time
import zipfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from pathlib import Path

import numpy as np

from .agent import ALGORITHMS, Agent, AgentConfig, ConfigError, MetricsRecord, evaluate, peak_eval_return, preset, train_agent
from .dbu import DbuConfig
from .envs import ENV_IDS, VARIANTS, InventoryConfig, JobShopConfig, MazeConfig, RecommenderConfig, make_env
from .sdn import SdnConfig

ENV_CONFIGS = {"maze": MazeConfig, "jobshop": JobShopConfig, "inventory": InventoryConfig,
               "recommender": RecommenderConfig}
# set by the variant, not by the user
_VARIANT_FIELDS = {"structured", "hybrid"}


@dataclass
class ExperimentConfig:
    env_id: str
    variant: str = "structured"
    env_params: dict = field(default_factory=dict)
    algorithm: str = "dgrl"
    agent: AgentConfig = field(default_factory=AgentConfig)
    seeds: list[int] = field(default_factory=lambda: [0])
    out_dir: str = "runs"
    workers: int = 1

    def __post_init__(self) -> None:
        if self.env_id not in ENV_IDS:
            raise ConfigError(f"unknown environment {self.env_id!r}; expected one of {ENV_IDS}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if not self.seeds:
            raise ConfigError("seed list must not be empty")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


@dataclass
class StepTimeReport:
    descriptor: str
    algorithm: str
    per_dim: int
    n_dims: int
    mean_ms: float
    std_ms: float
    calls: int
    note: str = "selection path only; environment steps not timed"


def _coerce(raw: str, default, where: str):
    """Parse ``raw`` into the type of ``default``."""
    text = raw.strip()
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            value = ast.literal_eval(text if text.startswith("(") else f"({text},)")
            return tuple(float(v) if isinstance(v, int) and default and isinstance(default[0], float) else v
                         for v in value)
        if isinstance(default, str):
            return text
        if text.lower() == "none":
            return None
        try:
            return ast.literal_eval(text)
        except (ValueError, SyntaxError):
            return text
    except (ValueError, SyntaxError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _read_pairs(path: Path) -> list[tuple[str, str, int]]:
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    pairs = []
    seen: dict[str, int] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = (s.strip() for s in body.split("=", 1))
        if key in seen:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r} (first set on line {seen[key]})")
        seen[key] = lineno
        pairs.append((key, value, lineno))
    return pairs


_AGENT_SCALARS = {f.name: f for f in fields(AgentConfig) if f.name not in ("sdn", "dbu", "algorithm")}
_SDN_FIELDS = {f.name for f in fields(SdnConfig)}
_DBU_FIELDS = {f.name for f in fields(DbuConfig)}


def parse_config(path: str | Path) -> ExperimentConfig:
    """Read a flat ``key = value`` file.

    Top-level keys: ``env``, ``variant``, ``algorithm``, ``seeds``, ``out``,
    ``workers``. ``env.<field>`` sets an environment parameter, ``sdn.<field>``
    and ``dbu.<field>`` the selection and update configs, and any other key an
    agent field. Agent defaults come from the environment preset.
    """
    path = Path(path)
    pairs = _read_pairs(path)
    top = {k: (v, n) for k, v, n in pairs if k in ("env", "variant", "algorithm", "seeds", "out", "workers")}
    if "env" not in top:
        raise ConfigError(f"{path}: missing required key 'env'")
    env_id = top["env"][0]
    if env_id not in ENV_IDS:
        raise ConfigError(f"{path}:{top['env'][1]}: unknown environment {env_id!r}; expected one of {ENV_IDS}")
    env_defaults = {f.name: f.default for f in fields(ENV_CONFIGS[env_id])}

    env_params: dict = {}
    agent_over: dict = {}
    sdn_over: dict = {}
    dbu_over: dict = {}
    for key, value, lineno in pairs:
        where = f"{path}:{lineno}"
        if key in top:
            continue
        section, _, name = key.partition(".")
        if name and section == "env":
            if name not in env_defaults or name in _VARIANT_FIELDS:
                raise ConfigError(f"{where}: unknown key {key!r} for environment {env_id!r}")
            env_params[name] = _coerce(value, env_defaults[name], where)
        elif name and section in ("sdn", "dbu"):
            known, target, cls = ((_SDN_FIELDS, sdn_over, SdnConfig) if section == "sdn"
                                  else (_DBU_FIELDS, dbu_over, DbuConfig))
            if name not in known:
                raise ConfigError(f"{where}: unknown key {key!r}")
            target[name] = (_coerce(value, getattr(cls(), name), where), lineno)
        elif not name and key in _AGENT_SCALARS:
            agent_over[key] = (_coerce(value, getattr(AgentConfig(), key), where), lineno)
        else:
            raise ConfigError(f"{where}: unknown key {key!r}")

    def line_of(k: str) -> str:
        return f"{path}:{top[k][1]}" if k in top else str(path)

    variant = top.get("variant", ("structured", 0))[0]
    algorithm = top.get("algorithm", ("dgrl", 0))[0]
    try:
        seeds = [int(s) for s in top["seeds"][0].split(",") if s.strip()] if "seeds" in top else [0]
    except ValueError as exc:
        raise ConfigError(f"{line_of('seeds')}: {exc}") from None
    workers = _coerce(top["workers"][0], 1, line_of("workers")) if "workers" in top else 1

    base = preset(env_id, variant, **env_params)

    def build(cls, obj, over):
        try:
            return replace(obj, **{k: v for k, (v, _) in over.items()})
        except (ValueError, TypeError) as exc:
            lines = ",".join(str(n) for _, n in over.values())
            raise ConfigError(f"{path}:{lines}: invalid {cls.__name__}: {exc}") from None

    sdn = build(SdnConfig, base.sdn, sdn_over)
    dbu = build(DbuConfig, base.dbu, dbu_over)
    agent = build(AgentConfig, replace(base, sdn=sdn, dbu=dbu), agent_over)
    try:
        agent = replace(agent, algorithm=algorithm)
        return ExperimentConfig(env_id, variant, env_params, algorithm, agent, seeds,
                                top.get("out", ("runs", 0))[0], workers)
    except ConfigError as exc:
        key = "seeds" if "seed" in str(exc) else "algorithm" if "algorithm" in str(exc) else "variant"
        raise ConfigError(f"{line_of(key)}: {exc}") from None


METRIC_FIELDS = [f.name for f in fields(MetricsRecord)]
TIMING_FIELDS = ("wall_time_ms_per_step",)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def emit_csv(records, path: str | Path, columns: list[str] | None = None) -> None:
    """Header plus one row per record (dataclasses or dicts); ``None`` becomes an empty cell."""
    rows = [asdict(r) if is_dataclass(r) else dict(r) for r in records]
    if columns is None:
        columns = list(rows[0]) if rows else METRIC_FIELDS
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([_cell(row.get(c)) for c in columns])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_metrics_csv(path: str | Path) -> list[MetricsRecord]:
    types = {"episode": int, "steps": int}
    out = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            vals = {k: (None if v == "" else types.get(k, float)(v)) for k, v in row.items()}
            out.append(MetricsRecord(**vals))
    return out


def save_weights(path: str | Path, arrays: dict[str, np.ndarray]) -> None:
    """Write an ``.npz``-compatible archive with fixed timestamps so the bytes are reproducible."""
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name in sorted(arrays):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.asarray(arrays[name]), allow_pickle=False)
            zf.writestr(zipfile.ZipInfo(f"{name}.npy", date_time=(1980, 1, 1, 0, 0, 0)), buf.getvalue())


def load_weights_into(agent: Agent, path: str | Path) -> None:
    data = np.load(path)
    for name, params in (("actor", agent.actor.params()), ("q1", agent.critics.q1.params()),
                         ("q2", agent.critics.q2.params())):
        for i, p in enumerate(params):
            p[...] = data[f"{name}_{i}"]
    agent.critics.q1_target = agent.critics.q1.copy()
    agent.critics.q2_target = agent.critics.q2.copy()


def _seed_agent_config(cfg: ExperimentConfig, seed: int) -> AgentConfig:
    return replace(cfg.agent, seed=seed, algorithm=cfg.algorithm)


def _run_seed(cfg: ExperimentConfig, seed: int) -> tuple[int, float]:
    out = Path(cfg.out_dir)
    env = make_env(cfg.env_id, cfg.variant, seed=seed, **cfg.env_params)
    agent, records = train_agent(env, _seed_agent_config(cfg, seed))
    emit_csv(records, out / f"metrics_seed{seed}.csv")
    save_weights(out / f"weights_seed{seed}.npz", agent.weights())
    return seed, peak_eval_return(records) if records else float("nan")


def summarize_peaks(peaks: list[float]) -> dict[str, float]:
    a = np.asarray(peaks, dtype=float)
    return {"mean_peak": float(a.mean()), "median_peak": float(np.median(a)), "std_peak": float(a.std())}


SUMMARY_COLUMNS = ["env", "variant", "algorithm", "seeds", "mean_peak", "median_peak", "std_peak", "peaks"]


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Train every seed, write ``metrics_seed<s>.csv``, ``weights_seed<s>.npz`` and ``summary.csv``."""
    out = Path(cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    if cfg.workers > 1 and len(cfg.seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(cfg.seeds))) as pool:
            results = list(pool.map(_run_seed, [cfg] * len(cfg.seeds), cfg.seeds))
    else:
        results = [_run_seed(cfg, s) for s in cfg.seeds]
    peaks = [p for _, p in sorted(results)]
    summary = {"env": cfg.env_id, "variant": cfg.variant, "algorithm": cfg.algorithm,
               "seeds": len(cfg.seeds), **summarize_peaks(peaks), "peaks": ";".join(repr(p) for p in peaks)}
    emit_csv([summary], out / "summary.csv", SUMMARY_COLUMNS)
    return summary


def read_summary(path: str | Path) -> dict:
    with Path(path).open(newline="") as fh:
        row = next(csv.DictReader(fh))
    row["peaks"] = [float(p) for p in row["peaks"].split(";") if p]
    for k in ("mean_peak", "median_peak", "std_peak"):
        row[k] = float(row[k])
    return row


def evaluate_weights(cfg: ExperimentConfig, weights: str | Path, seed: int, episodes: int) -> dict:
    env = make_env(cfg.env_id, cfg.variant, seed=seed, **cfg.env_params)
    agent_cfg = _seed_agent_config(cfg, seed)
    agent = Agent(env.spec, env.observation_dim, agent_cfg, np.random.default_rng(seed))
    load_weights_into(agent, weights)
    s = evaluate(env, agent.policy("eval"), episodes, seed)
    return {"seed": seed, "episodes": episodes, "mean": s.mean, "median": s.median, "std": s.std}


def parse_size(text: str) -> tuple[int, int]:
    """``"20^20"`` -> (per-dimension size, number of dimensions)."""
    try:
        base, exp = text.replace("**", "^").split("^")
        return int(base), int(exp)
    except ValueError:
        raise ValueError(f"size must look like 'values^dims', got {text!r}") from None


def measure_step_time(sizes: list[tuple[int, int]], algorithm: str, episodes: int = 1000,
                      steps_per_episode: int = 5, seed: int = 0, warmup: int = 50,
                      axial_steps: int | None = None) -> list[StepTimeReport]:
    """Mean wall-clock milliseconds per action selection on maze spaces of the given sizes.

    Networks are randomly initialised with the large-maze preset. Each
    episode resets the maze and times ``steps_per_episode`` selections; the
    environment steps in between are not timed.
    """
    reports = []
    for per_dim, n in sizes:
        env = make_env("maze", "structured", seed=seed, n_actuators=per_dim, d=n)
        cfg = replace(preset("maze", n_actuators=per_dim, d=n), algorithm=algorithm, seed=seed)
        if axial_steps is not None:
            cfg = replace(cfg, axial_steps=axial_steps)
        rng = np.random.default_rng(seed)
        agent = Agent(env.spec, env.observation_dim, cfg, rng)
        obs = env.reset(seed=seed)
        for _ in range(warmup):
            agent.select(agent.features(obs), "eval", rng)
        times = np.empty(episodes * steps_per_episode)
        k = 0
        for ep in range(episodes):
            obs = env.reset(seed=seed + ep)
            for _ in range(steps_per_episode):
                feats = agent.features(obs)
                t0 = time.perf_counter()
                action = agent.select(feats, "eval", rng)
                times[k] = (time.perf_counter() - t0) * 1e3
                k += 1
                obs, _, done, _ = env.step(action)
                if done:
                    obs = env.reset()
        reports.append(StepTimeReport(f"{per_dim}^{n}", algorithm, per_dim, n, float(times.mean()),
                                      float(times.std()), int(times.size)))
    return reports

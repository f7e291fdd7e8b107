"""Experiment config: JSON file parsing, field validation with named
diagnostics, and the single-seed substream discipline.

One run seed feeds named substreams (world projections, parameter init,
batch draws, eval-set draws) so ablations that share a seed share their
data exactly.
"""

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import SchemaError
from .losses import MODES, EqSimConfig
from .model import TrainConfig
from .synthgen import ASPECTS, WorldConfig

# spawn keys for the named substreams (projections use their own tags inside synthgen)
STREAMS = {"init": 1, "batches": 2, "eval": 3}

DEFAULT_RECALL_KS = (1, 5, 10)
DEFAULT_METRICS = ("group", "valse", "recall", "eqscore")


def substream(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(STREAMS[name],))
    )


@dataclass(frozen=True)
class EvalConfig:
    n_eval: int = 2000
    aspect_mix: tuple = tuple((a, 1.0) for a in ASPECTS)
    valse_threshold: float = 0.5
    bins: int = 20
    recall_ks: tuple = DEFAULT_RECALL_KS
    metrics: tuple = DEFAULT_METRICS

    def mix_dict(self) -> dict:
        return dict(self.aspect_mix)


@dataclass(frozen=True)
class ExperimentConfig:
    run_label: str
    seed: int
    world: WorldConfig
    train: TrainConfig
    eval: EvalConfig
    output_dir: str = "runs"
    edit_fraction: float = 0.5

    def echo(self) -> dict:
        """Normalized dict of the effective config, embedded in every output file."""
        out = {
            "run_label": self.run_label,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "edit_fraction": self.edit_fraction,
            "world": asdict(self.world),
            "train": asdict(self.train),
            "eval": {
                "n_eval": self.eval.n_eval,
                "aspect_mix": self.eval.mix_dict(),
                "valse_threshold": self.eval.valse_threshold,
                "bins": self.eval.bins,
                "recall_ks": list(self.eval.recall_ks),
                "metrics": list(self.eval.metrics),
            },
        }
        return out


class _Section:
    """Reads one config section with field-level diagnostics."""

    def __init__(self, data: dict, path: str):
        if not isinstance(data, dict):
            raise SchemaError(f"config section '{path}' must be an object")
        self.data = data
        self.path = path

    def get(self, name, kind, default=None, required=False, check=None):
        where = f"{self.path}.{name}" if self.path else name
        if name not in self.data:
            if required:
                raise SchemaError(f"config field '{where}' is required", field=where)
            return default
        value = self.data[name]
        if value is None:
            return default
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        wrong_type = kind is not None and not isinstance(value, kind)
        bool_as_number = isinstance(value, bool) and kind in (int, float)
        if wrong_type or bool_as_number:
            raise SchemaError(
                f"config field '{where}' must be {getattr(kind, '__name__', kind)}, "
                f"got {type(value).__name__}",
                field=where,
            )
        if check is not None:
            error = check(value)
            if error:
                raise SchemaError(f"config field '{where}' {error}", field=where)
        return value

    def section(self, name) -> "_Section":
        where = f"{self.path}.{name}" if self.path else name
        return _Section(self.data.get(name, {}), where)


def _nonneg(v):
    return None if v >= 0 else f"must be >= 0, got {v}"


def _positive(v):
    return None if v > 0 else f"must be > 0, got {v}"


def parse_experiment_config(data: dict, seed_override=None, output_override=None):
    root = _Section(data, "")
    seed = root.get("seed", int, default=0, check=_nonneg)
    if seed_override is not None:
        seed = seed_override

    w = root.section("world")
    world = WorldConfig(
        n_objects=w.get("n_objects", int, 8, check=_positive),
        max_count=w.get("max_count", int, 4, check=_positive),
        n_locations=w.get("n_locations", int, 4, check=_positive),
        n_attributes=w.get("n_attributes", int, 6, check=_positive),
        d_img=w.get("d_img", int, 32, check=_positive),
        d_txt=w.get("d_txt", int, 32, check=_positive),
        noise_std=w.get("noise_std", float, 0.1, check=_nonneg),
        signal_scale=w.get("signal_scale", float, 1.0, check=_positive),
        seed=seed,
    )

    t = root.section("train")
    e = t.section("eqsim")
    eqsim = EqSimConfig(
        alpha=e.get("alpha", float, 0.04, check=_nonneg),
        beta=e.get("beta", float, 0.5, check=_nonneg),
        k_close=e.get("k_close", int, 8, check=_nonneg),
        use_softmax=e.get("use_softmax", bool, True),
        mode=e.get(
            "mode", str, "hybrid",
            check=lambda v: None if v in MODES else f"must be one of {MODES}",
        ),
    )
    hidden_dim = t.get("hidden_dim", int, None, check=_positive)
    train = TrainConfig(
        eqsim=eqsim,
        learning_rate=t.get("learning_rate", float, 0.05, check=_nonneg),
        steps=t.get("steps", int, 2000, check=_nonneg),
        batch_size=t.get("batch_size", int, 16, check=lambda v: None if v >= 2 else "must be >= 2"),
        seed=seed,
        optimizer=t.get(
            "optimizer", str, "adam",
            check=lambda v: None if v in ("sgd", "adam") else "must be sgd or adam",
        ),
        d_img=world.d_img,
        d_txt=world.d_txt,
        embed_dim=t.get("embed_dim", int, 16, check=_positive),
        hidden_dim=hidden_dim,
    )

    v = root.section("eval")
    mix_raw = v.get("aspect_mix", dict, {a: 1.0 for a in ASPECTS})
    mix = []
    for aspect, weight in mix_raw.items():
        if aspect not in ASPECTS:
            raise SchemaError(
                f"config field 'eval.aspect_mix.{aspect}' is not a known aspect",
                field=f"eval.aspect_mix.{aspect}",
            )
        if not isinstance(weight, (int, float)) or isinstance(weight, bool) or weight < 0:
            raise SchemaError(
                f"config field 'eval.aspect_mix.{aspect}' must be a nonnegative number",
                field=f"eval.aspect_mix.{aspect}",
            )
        mix.append((aspect, float(weight)))
    if not mix or all(weight == 0 for _, weight in mix):
        raise SchemaError(
            "config field 'eval.aspect_mix' must have a positive weight",
            field="eval.aspect_mix",
        )
    metrics = tuple(
        v.get(
            "metrics", list, list(DEFAULT_METRICS),
            check=lambda vals: None
            if all(m in DEFAULT_METRICS for m in vals)
            else f"entries must be among {DEFAULT_METRICS}",
        )
    )
    eval_cfg = EvalConfig(
        n_eval=v.get("n_eval", int, 2000, check=_nonneg),
        aspect_mix=tuple(mix),
        valse_threshold=v.get("valse_threshold", float, 0.5),
        bins=v.get("bins", int, 20, check=_positive),
        recall_ks=tuple(v.get("recall_ks", list, list(DEFAULT_RECALL_KS))),
        metrics=metrics,
    )

    run_label = root.get(
        "run_label", str, required=True,
        check=lambda s: None if s.strip() else "must be nonempty",
    )
    output_dir = root.get("output_dir", str, "runs")
    if output_override is not None:
        output_dir = output_override
    return ExperimentConfig(
        run_label=run_label,
        seed=seed,
        world=world,
        train=train,
        eval=eval_cfg,
        output_dir=output_dir,
        edit_fraction=root.get("edit_fraction", float, 0.5, check=_nonneg),
    )


def load_experiment_config(path, seed_override=None, output_override=None):
    """Missing/unreadable files raise OSError (CLI exit 3); malformed content
    raises SchemaError with a line or field diagnostic (exit 2)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise SchemaError(f"{path}: line {err.lineno}, column {err.colno}: {err.msg}") from err
    return parse_experiment_config(
        data, seed_override=seed_override, output_override=output_override
    )

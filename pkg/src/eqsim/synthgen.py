"""Synthetic minimal-semantic-change world.

Latent slot tuples (object, count, location, attribute) are rendered into
image-like and text-like feature vectors through fixed seeded random
projections (one per modality) plus Gaussian observation noise. Editing
exactly one slot produces a matched pair-of-pairs with controlled semantic
distance, the unit of all pairwise evaluation here.
"""

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .errors import SlotOutOfRangeError, UneditableAspectError

ASPECTS = ("object", "count", "location", "attribute")

# spawn tags for the per-modality projection streams, derived from cfg.seed only
_PROJECTION_STREAM = {"image": 11, "text": 12}


@dataclass(frozen=True)
class SemanticSlots:
    """One point of the latent world; count is 1-based, the rest 0-based ids."""

    object: int
    count: int
    location: int
    attribute: int

    def value(self, aspect: str) -> int:
        return getattr(self, aspect)

    def hamming(self, other: "SemanticSlots") -> int:
        return sum(self.value(a) != other.value(a) for a in ASPECTS)


@dataclass(frozen=True)
class WorldConfig:
    n_objects: int = 8
    max_count: int = 4
    n_locations: int = 4
    n_attributes: int = 6
    d_img: int = 32
    d_txt: int = 32
    noise_std: float = 0.1
    signal_scale: float = 1.0  # projection magnitude relative to noise; difficulty knob
    seed: int = 0

    def __post_init__(self):
        if min(self.n_objects, self.max_count, self.n_locations, self.n_attributes) < 1:
            raise ValueError("every slot cardinality must be >= 1")
        if self.noise_std < 0:
            raise ValueError(f"noise_std must be >= 0, got {self.noise_std}")
        if self.signal_scale <= 0:
            raise ValueError(f"signal_scale must be > 0, got {self.signal_scale}")
        if min(self.d_img, self.d_txt) < len(ASPECTS):
            raise ValueError(f"observation dims must be >= {len(ASPECTS)}")

    def cardinality(self, aspect: str) -> int:
        return {
            "object": self.n_objects,
            "count": self.max_count,
            "location": self.n_locations,
            "attribute": self.n_attributes,
        }[aspect]

    @property
    def encoding_dim(self) -> int:
        return self.n_objects + self.max_count + self.n_locations + self.n_attributes


@dataclass
class PairSample:
    """Two matched (image, text) vector pairs with their ground-truth slots."""

    image1: np.ndarray
    text1: np.ndarray
    image2: np.ndarray
    text2: np.ndarray
    slots1: SemanticSlots
    slots2: SemanticSlots
    edited_aspect: str
    hamming: int


def validate_slots(slots: SemanticSlots, cfg: WorldConfig) -> None:
    for aspect in ASPECTS:
        value = slots.value(aspect)
        lo = 1 if aspect == "count" else 0
        hi = cfg.cardinality(aspect) if aspect == "count" else cfg.cardinality(aspect) - 1
        if not lo <= value <= hi:
            raise SlotOutOfRangeError(
                f"{aspect}={value} outside [{lo}, {hi}] for this world"
            )


def slot_encoding(slots: SemanticSlots, cfg: WorldConfig) -> np.ndarray:
    """Concatenated one-hot encoding of all four slots."""
    validate_slots(slots, cfg)
    enc = np.zeros(cfg.encoding_dim)
    offset = 0
    for aspect in ASPECTS:
        card = cfg.cardinality(aspect)
        idx = slots.value(aspect) - 1 if aspect == "count" else slots.value(aspect)
        enc[offset + idx] = 1.0
        offset += card
    return enc


@lru_cache(maxsize=32)
def _projection(cfg: WorldConfig, modality: str) -> np.ndarray:
    """Fixed render projection; depends on cfg.seed only, never on stream state."""
    dim = cfg.d_img if modality == "image" else cfg.d_txt
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=cfg.seed, spawn_key=(_PROJECTION_STREAM[modality],))
    )
    proj = rng.standard_normal((dim, cfg.encoding_dim)) / np.sqrt(cfg.encoding_dim)
    return cfg.signal_scale * proj


def render(
    slots: SemanticSlots, cfg: WorldConfig, modality: str, rng: np.random.Generator
) -> np.ndarray:
    """Project the slot encoding and add observation noise from rng."""
    if modality not in ("image", "text"):
        raise ValueError(f"modality must be image or text, got {modality!r}")
    clean = _projection(cfg, modality) @ slot_encoding(slots, cfg)
    if cfg.noise_std == 0:
        return clean
    return clean + cfg.noise_std * rng.standard_normal(clean.size)


def editable_aspects(cfg: WorldConfig) -> tuple[str, ...]:
    return tuple(a for a in ASPECTS if cfg.cardinality(a) >= 2)


def random_slots(cfg: WorldConfig, rng: np.random.Generator) -> SemanticSlots:
    return SemanticSlots(
        object=int(rng.integers(cfg.n_objects)),
        count=1 + int(rng.integers(cfg.max_count)),
        location=int(rng.integers(cfg.n_locations)),
        attribute=int(rng.integers(cfg.n_attributes)),
    )


def minimal_edit(
    slots: SemanticSlots, cfg: WorldConfig, aspect: str, rng: np.random.Generator
) -> SemanticSlots:
    """Change exactly one slot to a uniformly drawn different value."""
    if aspect not in ASPECTS:
        raise UneditableAspectError(f"unknown aspect {aspect!r}")
    card = cfg.cardinality(aspect)
    if card < 2:
        raise UneditableAspectError(f"aspect {aspect!r} has cardinality {card} < 2")
    validate_slots(slots, cfg)
    current = slots.value(aspect) - (1 if aspect == "count" else 0)
    draw = int(rng.integers(card - 1))
    new_idx = draw if draw < current else draw + 1
    new_value = new_idx + (1 if aspect == "count" else 0)
    return replace(slots, **{aspect: new_value})


def _render_pair(slots, cfg, rng):
    return render(slots, cfg, "image", rng), render(slots, cfg, "text", rng)


def generate_eval_set(
    cfg: WorldConfig, n: int, aspect_mix: dict, rng: np.random.Generator
) -> list[PairSample]:
    """n hamming-1 pair samples with edited aspects drawn by weight."""
    aspects = [a for a in ASPECTS if a in aspect_mix and aspect_mix[a] > 0]
    weights = np.array([float(aspect_mix[a]) for a in aspects])
    if any(w < 0 for w in aspect_mix.values()) or weights.sum() <= 0:
        raise ValueError("aspect weights must be nonnegative and not all zero")
    probs = weights / weights.sum()
    samples = []
    for _ in range(n):
        slots1 = random_slots(cfg, rng)
        aspect = aspects[int(rng.choice(len(aspects), p=probs))]
        slots2 = minimal_edit(slots1, cfg, aspect, rng)
        image1, text1 = _render_pair(slots1, cfg, rng)
        image2, text2 = _render_pair(slots2, cfg, rng)
        samples.append(
            PairSample(
                image1=image1,
                text1=text1,
                image2=image2,
                text2=text2,
                slots1=slots1,
                slots2=slots2,
                edited_aspect=aspect,
                hamming=slots1.hamming(slots2),
            )
        )
    return samples


def batch_slots(
    cfg: WorldConfig, batch_size: int, rng: np.random.Generator, edit_fraction: float
) -> list[SemanticSlots]:
    """Slot draws for one training batch: planted edit-couples first (base
    followed by its minimal edit), independent draws after."""
    aspects = editable_aspects(cfg)
    n_couples = int(edit_fraction * batch_size / 2)
    slot_list = []
    for _ in range(n_couples):
        base = random_slots(cfg, rng)
        aspect = aspects[int(rng.integers(len(aspects)))]
        slot_list.append(base)
        slot_list.append(minimal_edit(base, cfg, aspect, rng))
    while len(slot_list) < batch_size:
        slot_list.append(random_slots(cfg, rng))
    return slot_list


def generate_train_stream(
    cfg: WorldConfig,
    batch_size: int,
    rng: np.random.Generator,
    edit_fraction: float = 0.5,
):
    """Endless stream of (images, texts) batches of matched pairs.

    Per batch, int(edit_fraction * batch_size / 2) couples are planted where
    the second member is a minimal edit of the first, so the close/distant
    split always has genuinely close pairs to work with; the rest are
    independent draws.
    """
    if batch_size < 2:
        raise ValueError(f"batch_size must be >= 2, got {batch_size}")
    if not 0 <= edit_fraction <= 1:
        raise ValueError(f"edit_fraction must be in [0, 1], got {edit_fraction}")
    while True:
        slot_list = batch_slots(cfg, batch_size, rng, edit_fraction)
        images = np.empty((batch_size, cfg.d_img))
        texts = np.empty((batch_size, cfg.d_txt))
        for row, slots in enumerate(slot_list):
            images[row], texts[row] = _render_pair(slots, cfg, rng)
        yield images, texts

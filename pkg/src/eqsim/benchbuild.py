"""Benchmark-construction pipelines over abstract annotation records.

Five sources, all pure data transforms:
  ag        scene-graph frames -> templated captions + sparse pair scan
  gebc      event boundaries -> boundary-skip pairs with an action-word filter
  youcook2  video segments -> middle-frame picks behind a pluggable face filter
  kubric    slot vocabularies -> caption pairs differing in one phrase
  sd        object-keyed subsets -> caption pairs with object/scene/attribute edits

Anything needing pixels (face detection, rendering, diffusion) stays behind
injected predicates or caption-level stand-ins.
"""

import re
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadSegmentError,
    EmptySubsetError,
    MissingFieldError,
    UneditableAspectError,
)


@dataclass(frozen=True)
class AgFrame:
    index: int
    attention_rel: str
    spatial_rel: str
    contact_rel: str
    object: str


@dataclass(frozen=True)
class GebcBoundary:
    index: int
    caption_before: str
    caption_after: str
    frame_before: str
    frame_after: str


@dataclass(frozen=True)
class CandidatePair:
    source: str
    item1: tuple  # (frame id, caption)
    item2: tuple
    filter_trace: tuple


# -- Action Genome ----------------------------------------------------------

_AG_RELATIONSHIP_FIELDS = ("attention_rel", "spatial_rel", "contact_rel")


def ag_caption(frame: AgFrame) -> str:
    """Fill the fixed scene-graph caption template."""
    for name in ("attention_rel", "spatial_rel", "object"):
        if not getattr(frame, name).strip():
            raise MissingFieldError(f"frame {frame.index}: empty field {name}")
    return (
        f"The person is {frame.attention_rel} {frame.object} "
        f"which is {frame.spatial_rel} him/her."
    )


def _ag_rel_diff(a: AgFrame, b: AgFrame) -> int:
    return sum(getattr(a, f) != getattr(b, f) for f in _AG_RELATIONSHIP_FIELDS)


def ag_select_pairs(frames) -> list[CandidatePair]:
    """Forward scan pairing each anchor with the next frame that differs in
    at least 2 of the 3 relationships; after a selection the scan resumes two
    positions past the chosen frame (its immediate successor is skipped as a
    near-duplicate). An anchor with no remaining partner advances by one.
    """
    frames = list(frames)
    pairs = []
    i = 0
    while i < len(frames) - 1:
        chosen = None
        for j in range(i + 1, len(frames)):
            if _ag_rel_diff(frames[i], frames[j]) >= 2:
                chosen = j
                break
        if chosen is None:
            i += 1
            continue
        pairs.append(
            CandidatePair(
                source="ag",
                item1=(frames[i].index, ag_caption(frames[i])),
                item2=(frames[chosen].index, ag_caption(frames[chosen])),
                filter_trace=("two_of_three_relationships_differ",),
            )
        )
        i = chosen + 2
    return pairs


# -- GEBC --------------------------------------------------------------------

DEFAULT_ACTION_WORDS = frozenset({"up", "down", "upward", "downward", "towards"})


def _contains_action_word(caption: str, words) -> bool:
    pattern = r"\b(?:" + "|".join(re.escape(w) for w in sorted(words)) + r")\b"
    return re.search(pattern, caption, flags=re.IGNORECASE) is not None


def gebc_select(boundaries, action_words=DEFAULT_ACTION_WORDS) -> list[CandidatePair]:
    """Non-overlapping boundary-skip pairs (b_i, b_{i+2}) for i = 0, 2, 4, ...

    The emitted sample spans the skipped boundary: the before-side of b_i
    against the after-side of b_{i+2}. Pairs whose captions contain a
    directional action word (whole word, case-insensitive) are dropped --
    such motion is unreadable from a static frame.
    """
    boundaries = list(boundaries)
    pairs = []
    for i in range(0, len(boundaries) - 2, 2):
        first, second = boundaries[i], boundaries[i + 2]
        cap1, cap2 = first.caption_before, second.caption_after
        if _contains_action_word(cap1, action_words) or _contains_action_word(
            cap2, action_words
        ):
            continue
        pairs.append(
            CandidatePair(
                source="gebc",
                item1=(first.frame_before, cap1),
                item2=(second.frame_after, cap2),
                filter_trace=("boundary_skip", "no_action_word"),
            )
        )
    return pairs


# -- YouCook2 ----------------------------------------------------------------

def youcook2_select(segments, face_filter=None) -> list[tuple]:
    """Middle frame of each segment with its caption; frames rejected by the
    injected face predicate are dropped. face_filter=None keeps everything."""
    out = []
    for start, end, caption in segments:
        if start >= end:
            raise BadSegmentError(f"segment ({start}, {end}) has start >= end")
        middle = int((start + end) // 2)
        if face_filter is not None and not face_filter(middle):
            continue
        out.append((middle, caption))
    return out


def list_backed_face_filter(rejected_frames) -> "callable":
    """Test stand-in for a face detector: rejects exactly the listed frames."""
    rejected = set(rejected_frames)
    return lambda frame_id: frame_id not in rejected


# -- Kubric ------------------------------------------------------------------

KUBRIC_ASPECTS = ("location", "counting", "attribute")

DEFAULT_KUBRIC_VOCAB = {
    "object": ("clock", "ball", "mug", "chair", "book", "lamp"),
    "counting": ("2", "3", "4", "5"),
    "attribute": ("red", "blue", "green", "yellow", "small", "large"),
    "location": (
        "on the left side",
        "on the right side",
        "in the middle",
        "near the wall",
    ),
}


def kubric_caption(slot_values: dict) -> str:
    return (
        f"a photo of {slot_values['counting']} {slot_values['attribute']} "
        f"{slot_values['object']}s {slot_values['location']}"
    )


def kubric_captions(
    aspect: str, slot_values: dict, rng: np.random.Generator, vocab=None
):
    """Two captions identical except in the phrase for the chosen aspect.

    Returns (caption1, caption2, (old_phrase, new_phrase)).
    """
    if aspect not in KUBRIC_ASPECTS:
        raise UneditableAspectError(
            f"aspect must be one of {KUBRIC_ASPECTS}, got {aspect!r}"
        )
    vocab = DEFAULT_KUBRIC_VOCAB if vocab is None else vocab
    old = slot_values[aspect]
    options = [v for v in vocab[aspect] if v != old]
    if not options:
        raise UneditableAspectError(f"aspect {aspect!r} has < 2 vocabulary values")
    new = options[int(rng.integers(len(options)))]
    caption1 = kubric_caption(slot_values)
    caption2 = kubric_caption({**slot_values, aspect: new})
    return caption1, caption2, (old, new)


# -- Stable-Diffusion-style caption edits -------------------------------------

SD_CATEGORIES = ("object_change", "scene_change", "attribute_change")

# objects grouped into restricted swap subsets, each with compatible
# scene and attribute phrases
DEFAULT_SD_SUBSETS = (
    {
        "objects": ("horse", "cattle", "elephant", "goat", "deer", "camel", "zebra"),
        "scenes": (
            "standing on the grass",
            "in the desert",
            "near the river",
            "in the zoo",
        ),
        "attributes": ("with a sunglasses", "with a hat", "with a saddle", "with a ribbon"),
    },
    {
        "objects": ("dog", "cat", "rabbit", "hamster"),
        "scenes": ("on the sofa", "in the garden", "in the winter", "on the beach"),
        "attributes": ("with a sunglasses", "with a collar", "with a bow", "with a scarf"),
    },
)


def _sd_subset_for(obj: str, subsets):
    for subset in subsets:
        if obj in subset["objects"]:
            return subset
    raise EmptySubsetError(f"object {obj!r} belongs to no configured subset")


def sd_caption(base_slots: dict) -> str:
    caption = f"a photo of a {base_slots['object']}"
    if base_slots.get("attribute"):
        caption += f" {base_slots['attribute']}"
    if base_slots.get("scene"):
        caption += f" {base_slots['scene']}"
    return caption


def sd_caption_edit(
    base_slots: dict, category: str, rng: np.random.Generator, subsets=None
):
    """Minimal caption edit within the object's restricted subset.

    object_change swaps the object; scene_change / attribute_change replace
    that phrase (or append one when absent). Every other token is shared.
    """
    if category not in SD_CATEGORIES:
        raise UneditableAspectError(
            f"category must be one of {SD_CATEGORIES}, got {category!r}"
        )
    subsets = DEFAULT_SD_SUBSETS if subsets is None else subsets
    subset = _sd_subset_for(base_slots["object"], subsets)
    edited = dict(base_slots)
    if category == "object_change":
        options = [o for o in subset["objects"] if o != base_slots["object"]]
        key = "object"
    elif category == "scene_change":
        options = [s for s in subset["scenes"] if s != base_slots.get("scene")]
        key = "scene"
    else:
        options = [a for a in subset["attributes"] if a != base_slots.get("attribute")]
        key = "attribute"
    if not options:
        raise EmptySubsetError(f"{category} has no alternatives for this subset")
    edited[key] = options[int(rng.integers(len(options)))]
    return sd_caption(base_slots), sd_caption(edited)


# -- shared diff oracle helper -------------------------------------------------

def token_diff_span(caption1: str, caption2: str):
    """Strip the common token prefix/suffix; returns the differing middles.

    (old_tokens, new_tokens) -- both empty iff the captions are identical.
    """
    t1 = caption1.split()
    t2 = caption2.split()
    lo = 0
    while lo < len(t1) and lo < len(t2) and t1[lo] == t2[lo]:
        lo += 1
    hi = 0
    while (
        hi < len(t1) - lo and hi < len(t2) - lo and t1[-1 - hi] == t2[-1 - hi]
    ):
        hi += 1
    return t1[lo : len(t1) - hi], t2[lo : len(t2) - hi]

import numpy as np
import pytest

from eqsim import synthgen
from eqsim.errors import SlotOutOfRangeError, UneditableAspectError
from eqsim.synthgen import SemanticSlots, WorldConfig


def small_world(**kw):
    defaults = dict(
        n_objects=4, max_count=3, n_locations=3, n_attributes=4,
        d_img=8, d_txt=8, noise_std=0.0, seed=5,
    )
    defaults.update(kw)
    return WorldConfig(**defaults)


def test_render_deterministic_without_noise():
    cfg = small_world()
    slots = SemanticSlots(object=1, count=2, location=0, attribute=3)
    a = synthgen.render(slots, cfg, "image", np.random.default_rng(0))
    b = synthgen.render(slots, cfg, "image", np.random.default_rng(99))
    np.testing.assert_array_equal(a, b)


def test_render_single_slot_change_is_projection_delta():
    cfg = small_world()
    s1 = SemanticSlots(object=1, count=2, location=0, attribute=3)
    s2 = SemanticSlots(object=2, count=2, location=0, attribute=3)
    rng = np.random.default_rng(0)
    delta = synthgen.render(s2, cfg, "text", rng) - synthgen.render(s1, cfg, "text", rng)
    proj = synthgen._projection(cfg, "text")
    enc_delta = synthgen.slot_encoding(s2, cfg) - synthgen.slot_encoding(s1, cfg)
    np.testing.assert_allclose(delta, proj @ enc_delta, atol=1e-12)


def test_render_noise_reproducible_with_seeded_stream():
    cfg = small_world(noise_std=0.1)
    slots = SemanticSlots(object=0, count=1, location=1, attribute=0)
    a = synthgen.render(slots, cfg, "image", np.random.default_rng(7))
    b = synthgen.render(slots, cfg, "image", np.random.default_rng(7))
    np.testing.assert_array_equal(a, b)
    c = synthgen.render(slots, cfg, "image", np.random.default_rng(8))
    assert not np.array_equal(a, c)


def test_projections_depend_only_on_world_seed():
    p1 = synthgen._projection(small_world(), "image")
    p2 = synthgen._projection(small_world(noise_std=0.3), "image")
    np.testing.assert_array_equal(p1, p2)  # noise level does not move the world
    p3 = synthgen._projection(small_world(seed=6), "image")
    assert not np.array_equal(p1, p3)
    assert not np.array_equal(p1, synthgen._projection(small_world(), "text"))


def test_render_rejects_bad_slots():
    cfg = small_world()
    with pytest.raises(SlotOutOfRangeError):
        synthgen.render(
            SemanticSlots(object=4, count=1, location=0, attribute=0),
            cfg, "image", np.random.default_rng(0),
        )
    with pytest.raises(SlotOutOfRangeError):
        synthgen.slot_encoding(SemanticSlots(object=0, count=0, location=0, attribute=0), cfg)


def test_minimal_edit_excludes_current_value():
    cfg = small_world()
    slots = SemanticSlots(object=0, count=2, location=0, attribute=0)
    rng = np.random.default_rng(1)
    seen = set()
    for _ in range(200):
        edited = synthgen.minimal_edit(slots, cfg, "count", rng)
        assert edited.count != 2
        assert slots.hamming(edited) == 1
        seen.add(edited.count)
    assert seen == {1, 3}


def test_minimal_edit_uniform_over_alternatives():
    cfg = small_world()
    slots = SemanticSlots(object=0, count=1, location=0, attribute=1)
    rng = np.random.default_rng(2)
    n = 10_000
    counts = {}
    for _ in range(n):
        v = synthgen.minimal_edit(slots, cfg, "attribute", rng).attribute
        counts[v] = counts.get(v, 0) + 1
    # three alternatives; binomial 3-sigma bound around n/3
    p = 1 / 3
    sigma = (n * p * (1 - p)) ** 0.5
    for v in (0, 2, 3):
        assert abs(counts.get(v, 0) - n * p) <= 3 * sigma


def test_minimal_edit_uneditable():
    cfg = small_world(max_count=1)
    slots = SemanticSlots(object=0, count=1, location=0, attribute=0)
    with pytest.raises(UneditableAspectError):
        synthgen.minimal_edit(slots, cfg, "count", np.random.default_rng(0))
    with pytest.raises(UneditableAspectError):
        synthgen.minimal_edit(slots, cfg, "shape", np.random.default_rng(0))


def test_generate_eval_set_aspect_mix():
    cfg = small_world()
    rng = np.random.default_rng(3)
    samples = synthgen.generate_eval_set(cfg, 50, {"attribute": 1.0}, rng)
    assert len(samples) == 50
    assert all(s.edited_aspect == "attribute" for s in samples)
    assert all(s.hamming == 1 for s in samples)
    assert synthgen.generate_eval_set(cfg, 0, {"count": 1.0}, rng) == []


def test_generate_eval_set_balanced_counts():
    cfg = small_world()
    rng = np.random.default_rng(4)
    n = 2000
    samples = synthgen.generate_eval_set(cfg, n, {a: 1.0 for a in synthgen.ASPECTS}, rng)
    p = 1 / 4
    sigma = (n * p * (1 - p)) ** 0.5
    for aspect in synthgen.ASPECTS:
        count = sum(s.edited_aspect == aspect for s in samples)
        assert abs(count - n * p) <= 3 * sigma


def test_generate_eval_set_bad_weights():
    cfg = small_world()
    with pytest.raises(ValueError):
        synthgen.generate_eval_set(cfg, 5, {"count": -1.0}, np.random.default_rng(0))
    with pytest.raises(ValueError):
        synthgen.generate_eval_set(cfg, 5, {"count": 0.0}, np.random.default_rng(0))


def test_batch_slots_couple_structure():
    cfg = small_world()
    rng = np.random.default_rng(5)
    slots = synthgen.batch_slots(cfg, 4, rng, edit_fraction=1.0)
    assert len(slots) == 4
    assert slots[0].hamming(slots[1]) == 1
    assert slots[2].hamming(slots[3]) == 1
    none = synthgen.batch_slots(cfg, 4, rng, edit_fraction=0.0)
    assert len(none) == 4  # all independent draws, no structural guarantee


def test_train_stream_shapes_and_replay():
    cfg = small_world(noise_std=0.05)
    s1 = synthgen.generate_train_stream(cfg, 4, np.random.default_rng(6))
    s2 = synthgen.generate_train_stream(cfg, 4, np.random.default_rng(6))
    for _ in range(3):
        (i1, t1), (i2, t2) = next(s1), next(s2)
        assert i1.shape == (4, 8) and t1.shape == (4, 8)
        np.testing.assert_array_equal(i1, i2)
        np.testing.assert_array_equal(t1, t2)


def test_train_stream_argument_validation():
    cfg = small_world()
    with pytest.raises(ValueError):
        next(synthgen.generate_train_stream(cfg, 1, np.random.default_rng(0)))
    with pytest.raises(ValueError):
        next(synthgen.generate_train_stream(cfg, 4, np.random.default_rng(0), edit_fraction=1.5))


def test_zero_hamming_means_zero_distance():
    cfg = small_world()
    rng = np.random.default_rng(7)
    slots = synthgen.random_slots(cfg, rng)
    a = synthgen.render(slots, cfg, "image", rng)
    b = synthgen.render(slots, cfg, "image", rng)
    assert np.linalg.norm(a - b) == 0.0

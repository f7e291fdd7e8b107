"""Toy dual encoder: one linear map per modality (optional tanh hidden
layer), a learned log-temperature, hand-derived gradients with a central
finite-difference oracle, and a small sgd/adam training loop.

Gradients flow through the retrieval loss and the equivariance term but
not through the close/distant pair selection, which is a discrete choice
recomputed every step.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .core import DEGENERACY_TOL, BatchSimilarities
from .errors import DegenerateVectorError, DimensionMismatchError, NonFiniteLossError
from .losses import EqSimConfig, LossBreakdown, classify_pairs

LOG_TEMPERATURE_INIT = math.log(1.0 / 0.07)

# (weights, hidden weights, hidden bias) per modality, in flattening order
_ARRAY_FIELDS = (
    "image_weights",
    "image_hidden_w",
    "image_hidden_b",
    "text_weights",
    "text_hidden_w",
    "text_hidden_b",
)

_INIT_STREAM = 1


@dataclass
class EncoderParams:
    """Parameter container for both encoder branches.

    Without a hidden layer, <modality>_weights maps inputs straight to the
    shared embedding space; with one, it maps the tanh hidden activations.
    """

    image_weights: np.ndarray
    text_weights: np.ndarray
    image_hidden_w: np.ndarray | None = None
    image_hidden_b: np.ndarray | None = None
    text_hidden_w: np.ndarray | None = None
    text_hidden_b: np.ndarray | None = None
    log_temperature: float = LOG_TEMPERATURE_INIT

    def __post_init__(self):
        for name in _ARRAY_FIELDS:
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=np.float64)
            if not np.all(np.isfinite(arr)):
                raise DegenerateVectorError(f"{name} contains NaN or Inf")
            object.__setattr__(self, name, arr)
        if (self.image_hidden_w is None) != (self.image_hidden_b is None):
            raise DimensionMismatchError("image hidden weight and bias must come together")
        if (self.text_hidden_w is None) != (self.text_hidden_b is None):
            raise DimensionMismatchError("text hidden weight and bias must come together")
        if not np.isfinite(self.log_temperature):
            raise DegenerateVectorError("log_temperature must be finite")

    @property
    def embed_dim(self) -> int:
        return self.image_weights.shape[0]

    @property
    def d_img(self) -> int:
        w = self.image_hidden_w
        return w.shape[1] if w is not None else self.image_weights.shape[1]

    @property
    def d_txt(self) -> int:
        w = self.text_hidden_w
        return w.shape[1] if w is not None else self.text_weights.shape[1]

    @property
    def temperature(self) -> float:
        return math.exp(self.log_temperature)

    def copy(self) -> "EncoderParams":
        return replace(
            self,
            **{
                name: None if getattr(self, name) is None else getattr(self, name).copy()
                for name in _ARRAY_FIELDS
            },
        )


@dataclass
class GradientSet:
    """d(total loss)/d(parameter), shape-congruent with EncoderParams."""

    image_weights: np.ndarray
    text_weights: np.ndarray
    image_hidden_w: np.ndarray | None = None
    image_hidden_b: np.ndarray | None = None
    text_hidden_w: np.ndarray | None = None
    text_hidden_b: np.ndarray | None = None
    log_temperature: float = 0.0


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings plus the toy model's shape."""

    eqsim: EqSimConfig
    learning_rate: float = 0.05
    steps: int = 2000
    batch_size: int = 16
    seed: int = 0
    optimizer: str = "adam"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    d_img: int = 32
    d_txt: int = 32
    embed_dim: int = 16
    hidden_dim: int | None = None

    def __post_init__(self):
        if self.batch_size < 2:
            raise ValueError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"optimizer must be sgd or adam, got {self.optimizer!r}")


def flatten(container) -> np.ndarray:
    """Concatenate all present parameter arrays (row-major) plus log_temperature."""
    parts = [
        getattr(container, name).ravel()
        for name in _ARRAY_FIELDS
        if getattr(container, name) is not None
    ]
    parts.append(np.array([container.log_temperature]))
    return np.concatenate(parts)


def unflatten(template: EncoderParams, vec: np.ndarray, into=EncoderParams):
    """Rebuild a params/gradient container with template's shapes from a flat vector."""
    fields = {}
    pos = 0
    for name in _ARRAY_FIELDS:
        arr = getattr(template, name)
        if arr is None:
            fields[name] = None
            continue
        fields[name] = vec[pos : pos + arr.size].reshape(arr.shape).copy()
        pos += arr.size
    fields["log_temperature"] = float(vec[pos])
    return into(**fields)


def init_params(
    d_img: int,
    d_txt: int,
    embed_dim: int,
    rng: np.random.Generator,
    hidden_dim: int | None = None,
) -> EncoderParams:
    """Seeded uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) init, biases zero."""

    def uniform(shape, fan_in):
        bound = 1.0 / math.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    if hidden_dim is None:
        return EncoderParams(
            image_weights=uniform((embed_dim, d_img), d_img),
            text_weights=uniform((embed_dim, d_txt), d_txt),
        )
    return EncoderParams(
        image_weights=uniform((embed_dim, hidden_dim), hidden_dim),
        text_weights=uniform((embed_dim, hidden_dim), hidden_dim),
        image_hidden_w=uniform((hidden_dim, d_img), d_img),
        image_hidden_b=np.zeros(hidden_dim),
        text_hidden_w=uniform((hidden_dim, d_txt), d_txt),
        text_hidden_b=np.zeros(hidden_dim),
    )


def _branch(params: EncoderParams, modality: str):
    if modality == "image":
        return params.image_weights, params.image_hidden_w, params.image_hidden_b
    if modality == "text":
        return params.text_weights, params.text_hidden_w, params.text_hidden_b
    raise ValueError(f"modality must be image or text, got {modality!r}")


def _encode_batch(params: EncoderParams, modality: str, x: np.ndarray):
    """Forward one branch; returns (embeddings, hidden activations or None)."""
    w, hw, hb = _branch(params, modality)
    expected = hw.shape[1] if hw is not None else w.shape[1]
    if x.shape[1] != expected:
        raise DimensionMismatchError(
            f"{modality} input dim {x.shape[1]} != expected {expected}"
        )
    if hw is None:
        return x @ w.T, None
    hidden = np.tanh(x @ hw.T + hb)
    return hidden @ w.T, hidden


def encode(params: EncoderParams, modality: str, x) -> np.ndarray:
    """Encode a single vector into the shared embedding space."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatchError(f"expected a 1-D vector, got shape {x.shape}")
    out, _ = _encode_batch(params, modality, x[None, :])
    return out[0]


def _input_batch(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        x = np.stack([np.asarray(v, dtype=np.float64) for v in x])
    if x.shape[0] < 2:
        raise DimensionMismatchError(f"{name} batch needs n >= 2, got {x.shape[0]}")
    return x


def forward_batch(params: EncoderParams, images, texts) -> BatchSimilarities:
    """Encode both batches and assemble the raw cosine/temperature matrix."""
    imgs = _input_batch(images, "image")
    txts = _input_batch(texts, "text")
    if imgs.shape[0] != txts.shape[0]:
        raise DimensionMismatchError(
            f"batch counts differ: {imgs.shape[0]} vs {txts.shape[0]}"
        )
    u, _ = _encode_batch(params, "image", imgs)
    v, _ = _encode_batch(params, "text", txts)
    cos, un, vn = kernels.pairwise_cosine(
        np.ascontiguousarray(u), np.ascontiguousarray(v)
    )
    if min(un.min(), vn.min()) < DEGENERACY_TOL:
        raise DegenerateVectorError("an encoded vector has near-zero norm")
    return BatchSimilarities(
        scores=cos / params.temperature, temperature=params.temperature, normalized=False
    )


def _eq_inputs(scores: np.ndarray, tau: float, cfg: EqSimConfig):
    """Matrix the regularizer sees, plus the (non-differentiated) close mask."""
    if cfg.use_softmax:
        mat = kernels.softmax_rows(scores)
    else:
        mat = scores
    n = scores.shape[0]
    if cfg.mode == "off":
        mask = np.zeros((n, n), dtype=np.bool_)
    else:
        partition = classify_pairs(
            BatchSimilarities(mat, temperature=tau, normalized=cfg.use_softmax),
            cfg.k_close,
        )
        mask = partition.close_mask(n)
    return mat, mask


def loss_and_grad(params: EncoderParams, images, texts, cfg: EqSimConfig):
    """Total loss breakdown and exact gradients for every parameter."""
    imgs = _input_batch(images, "image")
    txts = _input_batch(texts, "text")
    if imgs.shape[0] != txts.shape[0]:
        raise DimensionMismatchError(
            f"batch counts differ: {imgs.shape[0]} vs {txts.shape[0]}"
        )
    u, hidden_u = _encode_batch(params, "image", imgs)
    v, hidden_v = _encode_batch(params, "text", txts)
    cos, un, vn = kernels.pairwise_cosine(
        np.ascontiguousarray(u), np.ascontiguousarray(v)
    )
    if min(un.min(), vn.min()) < DEGENERACY_TOL:
        raise DegenerateVectorError("an encoded vector has near-zero norm")
    tau = params.temperature
    scores = cos / tau

    loss_ret, grad_scores = kernels.itc_loss_grad(scores)

    eq_mat, close_mask = _eq_inputs(scores, tau, cfg)
    loss_eq, grad_eq_mat, n_close, n_distant = kernels.eq_value_grad(
        eq_mat, close_mask, float(cfg.alpha), kernels.MODE_CODES[cfg.mode]
    )
    if cfg.use_softmax:
        grad_eq_scores = kernels.softmax_rows_vjp(eq_mat, grad_eq_mat)
    else:
        grad_eq_scores = grad_eq_mat
    grad_scores = grad_scores + cfg.beta * grad_eq_scores

    # scores = cos * exp(-log_temperature)
    g_log_tau = -float((grad_scores * scores).sum())
    du, dv = kernels.pairwise_cosine_grad(
        np.ascontiguousarray(u), np.ascontiguousarray(v), un, vn, cos, grad_scores / tau
    )

    grads = {"log_temperature": g_log_tau}
    for modality, inp, hidden, dout in (
        ("image", imgs, hidden_u, du),
        ("text", txts, hidden_v, dv),
    ):
        w, hw, _ = _branch(params, modality)
        if hw is None:
            grads[f"{modality}_weights"] = dout.T @ inp
        else:
            grads[f"{modality}_weights"] = dout.T @ hidden
            dpre = (dout @ w) * (1.0 - hidden * hidden)
            grads[f"{modality}_hidden_w"] = dpre.T @ inp
            grads[f"{modality}_hidden_b"] = dpre.sum(axis=0)

    breakdown = LossBreakdown(
        retrieval=float(loss_ret),
        equivariance=float(loss_eq),
        total=float(loss_ret + cfg.beta * loss_eq),
        n_close_pairs=int(n_close),
        n_distant_pairs=int(n_distant),
    )
    return breakdown, GradientSet(**grads)


def total_loss_value(params: EncoderParams, images, texts, cfg: EqSimConfig) -> float:
    """Forward-only total loss, used by the finite-difference oracle."""
    m = forward_batch(params, images, texts)
    loss_ret = kernels.itc_loss(np.ascontiguousarray(m.scores))
    eq_mat, close_mask = _eq_inputs(m.scores, m.temperature, cfg)
    loss_eq, _, _ = kernels.eq_value(
        eq_mat, close_mask, float(cfg.alpha), kernels.MODE_CODES[cfg.mode]
    )
    return float(loss_ret + cfg.beta * loss_eq)


def finite_diff_grad(
    params: EncoderParams, images, texts, cfg: EqSimConfig, h: float = 1e-5
) -> GradientSet:
    """Central-difference gradient of the total loss, one probe pair per parameter."""
    if not 1e-7 <= h <= 1e-3:
        raise ValueError(f"h must be in [1e-7, 1e-3], got {h}")
    vec = flatten(params)
    out = np.empty_like(vec)
    for idx in range(vec.size):
        probe = vec.copy()
        probe[idx] = vec[idx] + h
        up = total_loss_value(unflatten(params, probe), images, texts, cfg)
        probe[idx] = vec[idx] - h
        down = total_loss_value(unflatten(params, probe), images, texts, cfg)
        out[idx] = (up - down) / (2.0 * h)
    return unflatten(params, out, into=GradientSet)


def train(cfg: TrainConfig, data, params: EncoderParams | None = None):
    """Run cfg.steps optimizer steps over the batch stream.

    Returns (final params, per-step LossBreakdown history). Deterministic
    given (cfg, data); aborts with NonFiniteLossError if a loss or gradient
    stops being finite.
    """
    if params is None:
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=cfg.seed, spawn_key=(_INIT_STREAM,))
        )
        params = init_params(
            cfg.d_img, cfg.d_txt, cfg.embed_dim, rng, hidden_dim=cfg.hidden_dim
        )
    else:
        params = params.copy()

    vec = flatten(params)
    if cfg.optimizer == "adam":
        m1 = np.zeros_like(vec)
        m2 = np.zeros_like(vec)

    history: list[LossBreakdown] = []
    stream = iter(data)
    for step in range(cfg.steps):
        images, texts = next(stream)
        breakdown, grads = loss_and_grad(params, images, texts, cfg.eqsim)
        gvec = flatten(grads)
        if not (np.isfinite(breakdown.total) and np.all(np.isfinite(gvec))):
            raise NonFiniteLossError(f"non-finite loss or gradient at step {step}")
        if cfg.optimizer == "sgd":
            vec = vec - cfg.learning_rate * gvec
        else:
            t = step + 1
            m1 = cfg.adam_beta1 * m1 + (1.0 - cfg.adam_beta1) * gvec
            m2 = cfg.adam_beta2 * m2 + (1.0 - cfg.adam_beta2) * gvec * gvec
            m1_hat = m1 / (1.0 - cfg.adam_beta1**t)
            m2_hat = m2 / (1.0 - cfg.adam_beta2**t)
            vec = vec - cfg.learning_rate * m1_hat / (np.sqrt(m2_hat) + cfg.adam_eps)
        params = unflatten(params, vec)
        history.append(breakdown)
    return params, history

"""Zero-shot classification over style-guided views.

Logits for view i under style guidance j are scaled cosine similarities
between the image embedding and the per-class text embeddings. Views are
reduced by a column-wise max (MaxP), each guidance row is softmaxed into
a K x K probability matrix P, and P is fused into one score vector by
either the indicator-sum strategy, the geometric-mean strategy, or a
plain weighted view baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backends import Backend, Embedding

__all__ = [
    "PromptTemplate",
    "CLIP_TEMPLATE",
    "CLIP_TEMPLATE_RENDERED",
    "DIFFUSION_TEMPLATE",
    "DIFFUSION_TEMPLATE_OCCLUDED",
    "TextClassifier",
    "ProbabilityMatrix",
    "FusionParams",
    "build_text_classifier",
    "image_logits",
    "aggregate_probability_matrix",
    "fuse_strategy_sum",
    "fuse_strategy_geo",
    "fuse_baseline",
    "predict",
]

PLACEHOLDER = "[C]"


@dataclass(frozen=True)
class PromptTemplate:
    """A prompt pattern with the class placeholder ``[C]`` exactly once."""

    pattern: str
    role: str = "clip-text"

    def __post_init__(self):
        if self.pattern.count(PLACEHOLDER) != 1:
            raise ValueError(f"pattern must contain {PLACEHOLDER} exactly once: {self.pattern!r}")
        if self.role not in ("clip-text", "diffusion-style"):
            raise ValueError(f"unknown template role {self.role!r}")

    def render(self, class_name: str) -> str:
        return self.pattern.replace(PLACEHOLDER, class_name)


CLIP_TEMPLATE = PromptTemplate("a photo of a [C]", "clip-text")
CLIP_TEMPLATE_RENDERED = PromptTemplate("a 3D image of a [C] with rendered background", "clip-text")
DIFFUSION_TEMPLATE = PromptTemplate(
    "a photo of a [C], best quality, extremely detailed", "diffusion-style"
)
DIFFUSION_TEMPLATE_OCCLUDED = PromptTemplate(
    "a photo of a [C], behind the building, best quality, extremely detailed", "diffusion-style"
)


@dataclass(frozen=True, eq=False)
class TextClassifier:
    """Ordered class names with their unit-norm text embedding rows (K x D)."""

    classes: tuple[str, ...]
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        w = np.asarray(self.weights, dtype=np.float64)
        if len(self.classes) < 2:
            raise ValueError(f"need >= 2 classes, got {len(self.classes)}")
        if w.ndim != 2 or w.shape[0] != len(self.classes):
            raise ValueError(f"weights must be ({len(self.classes)}, D), got {w.shape}")
        norms = np.linalg.norm(w, axis=1)
        if np.abs(norms - 1.0).max() > 1e-5:
            raise ValueError("classifier rows must be unit-norm within 1e-5")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def k(self) -> int:
        return len(self.classes)


@dataclass(frozen=True, eq=False)
class ProbabilityMatrix:
    """K x K matrix; row j = guidance class j, column k = predicted class k."""

    P: np.ndarray
    classes: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        p = np.asarray(self.P, dtype=np.float64)
        k = len(self.classes)
        if p.shape != (k, k):
            raise ValueError(f"P must be ({k}, {k}), got {p.shape}")
        if not ((p > 0) & (p < 1)).all():
            raise ValueError("P entries must lie in (0, 1)")
        if np.abs(p.sum(axis=1) - 1.0).max() > 1e-9:
            raise ValueError("P rows must sum to 1 within 1e-9")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "P", p)


@dataclass(frozen=True)
class FusionParams:
    """Fusion weights: w_glo/w_loc for sum, view weights for the baseline."""

    strategy: str = "sum"
    w_glo: float = 1.0
    w_loc: float = 1.0
    view_weights: tuple[float, ...] = ()

    def __post_init__(self):
        if self.strategy not in ("sum", "geo", "baseline"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.w_glo < 0 or self.w_loc < 0:
            raise ValueError("fusion weights must be nonnegative")
        if self.strategy == "sum" and self.w_glo + self.w_loc <= 0:
            raise ValueError("w_glo + w_loc must be > 0 for strategy sum")
        if self.strategy == "baseline" and self.view_weights:
            a = np.asarray(self.view_weights, dtype=np.float64)
            if (a < 0).any() or abs(float(a.sum()) - 1.0) > 1e-9:
                raise ValueError("view weights must be nonnegative and sum to 1")


def build_text_classifier(classes, template: PromptTemplate, backend: Backend) -> TextClassifier:
    """Encode one prompt per class into the zero-shot weight matrix."""
    names = tuple(classes)
    if len(names) < 2:
        raise ValueError(f"need >= 2 classes, got {len(names)}")
    if len(set(names)) != len(names):
        raise ValueError("duplicate class names")
    if template.role != "clip-text":
        raise ValueError(f"text classifier needs a clip-text template, got {template.role}")
    prompts = [template.render(c) for c in names]
    try:
        embeddings = backend.encode_text(prompts)
    except Exception as exc:
        raise type(exc)(f"encoding text prompts for classes {list(names)}: {exc}") from exc
    return TextClassifier(classes=names, weights=np.stack([e.values for e in embeddings]))


def image_logits(e: Embedding, w: TextClassifier, logit_scale: float = 100.0) -> np.ndarray:
    """logits[k] = logit_scale * <e, text row k>."""
    if e.dim != w.weights.shape[1]:
        raise ValueError(f"dimension mismatch: embedding {e.dim}, classifier {w.weights.shape[1]}")
    return logit_scale * (w.weights @ e.values)


def aggregate_probability_matrix(L: np.ndarray, classes) -> ProbabilityMatrix:
    """Column-wise max over views, then a stable softmax per guidance row.

    L is indexed [view i][guidance j][class k]; the view axis collapses by
    elementwise max (MaxP) and each remaining row softmaxes to a P row.
    """
    t = np.asarray(L, dtype=np.float64)
    names = tuple(classes)
    k = len(names)
    if t.ndim != 3 or t.shape[1:] != (k, k):
        raise ValueError(f"logits tensor must be (M, {k}, {k}), got {t.shape}")
    if t.shape[0] < 1:
        raise ValueError("need at least one view")
    if not np.isfinite(t).all():
        raise ValueError("non-finite logits")
    m = t.max(axis=0)
    shifted = m - m.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=1, keepdims=True)
    return ProbabilityMatrix(P=p, classes=names)


def fuse_strategy_sum(pm: ProbabilityMatrix, w_glo: float = 1.0, w_loc: float = 1.0) -> np.ndarray:
    """Indicator-sum fusion: column mass not above the diagonal, plus diagonal.

    p_glo[k] sums column k entries that do not exceed P[k][k]; p_loc is
    the diagonal; the result is their weighted sum.
    """
    if w_glo < 0 or w_loc < 0 or w_glo + w_loc <= 0:
        raise ValueError("need w_glo, w_loc >= 0 with a positive sum")
    p = pm.P
    diag = np.diag(p)
    p_glo = (p * (p <= diag[None, :])).sum(axis=0)
    return w_glo * p_glo + w_loc * diag


def fuse_strategy_geo(pm: ProbabilityMatrix) -> np.ndarray:
    """Geometric-mean fusion: normalized column geomean times column max.

    norm() is min-max over the K geometric means; when they are all equal
    the normalization degenerates to all-ones and the result is p_loc.
    """
    p = pm.P
    if (p <= 0).any():
        raise ValueError("geometric mean undefined for nonpositive entries")
    k = p.shape[0]
    p_glo = np.exp(np.log(p).sum(axis=0) / k)
    p_loc = p.max(axis=0)
    lo, hi = p_glo.min(), p_glo.max()
    if hi == lo:
        scaled = np.ones(k)
    else:
        scaled = (p_glo - lo) / (hi - lo)
    return scaled * p_loc


def fuse_baseline(view_logits: np.ndarray, view_weights=None) -> np.ndarray:
    """Convex combination of per-view logits (uniform weights by default)."""
    v = np.asarray(view_logits, dtype=np.float64)
    if v.ndim != 2:
        raise ValueError(f"view logits must be (M, K), got {v.shape}")
    m = v.shape[0]
    if view_weights is None or len(tuple(view_weights)) == 0:
        a = np.full(m, 1.0 / m)
    else:
        a = np.asarray(tuple(view_weights), dtype=np.float64)
    if a.shape != (m,):
        raise ValueError(f"view weights must have length {m}, got {a.shape}")
    if (a < 0).any() or abs(float(a.sum()) - 1.0) > 1e-9:
        raise ValueError("view weights must be nonnegative and sum to 1")
    return a @ v


def predict(p: np.ndarray, classes) -> tuple[str, int]:
    """Argmax class, ties broken toward the lowest index."""
    v = np.asarray(p, dtype=np.float64)
    names = tuple(classes)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"score vector must be nonempty 1D, got shape {v.shape}")
    if v.size != len(names):
        raise ValueError(f"scores ({v.size}) and classes ({len(names)}) disagree")
    if not np.isfinite(v).all():
        raise ValueError("non-finite scores")
    idx = int(np.argmax(v))
    return names[idx], idx

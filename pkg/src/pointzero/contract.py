"""Behavioral contract checks every backend implementation must pass.

Each check raises AssertionError on violation. `run_all` drives the full
suite against any object satisfying the Backend protocol, local or
remote, so a service can be certified with one call.
"""

from __future__ import annotations

import numpy as np

from .backends import Backend

__all__ = [
    "check_info",
    "check_encode_text_determinism",
    "check_encode_text_norms",
    "check_encode_image",
    "check_style_transfer",
    "run_all",
]

_PROMPTS = ["a photo of a chair", "a photo of a table", "a photo of a chair"]


def _test_image(size: int = 64) -> np.ndarray:
    img = np.zeros((size, size), dtype=np.uint8)
    img[size // 4 : size // 2, size // 4 : 3 * size // 4] = 200
    img[3 * size // 5 : 4 * size // 5, size // 3 : size // 2] = 90
    return img


def check_info(backend: Backend) -> None:
    info = backend.info()
    assert info.get("status") == "ok", f"health status not ok: {info}"
    assert int(info.get("dim", 0)) > 0, f"health reports no dim: {info}"
    assert info.get("model"), f"health reports no model id: {info}"


def check_encode_text_determinism(backend: Backend) -> None:
    a = backend.encode_text(_PROMPTS)
    b = backend.encode_text(_PROMPTS)
    assert len(a) == len(_PROMPTS), "embedding count must match prompt count"
    for i, (x, y) in enumerate(zip(a, b)):
        assert np.array_equal(x.values, y.values), f"prompt {i} not deterministic"
    assert np.array_equal(a[0].values, a[2].values), "identical prompts must map identically"


def check_encode_text_norms(backend: Backend) -> None:
    dims = set()
    for i, e in enumerate(backend.encode_text(_PROMPTS)):
        norm = float(np.linalg.norm(e.values))
        assert abs(norm - 1.0) <= 1e-5, f"prompt {i} norm {norm} not unit"
        assert np.isfinite(e.values).all(), f"prompt {i} has non-finite values"
        dims.add(e.dim)
    assert len(dims) == 1, f"embedding dimensions disagree: {dims}"
    assert dims.pop() == int(backend.info()["dim"]), "embedding dim disagrees with /health"


def check_encode_image(backend: Backend) -> None:
    img = _test_image()
    a = backend.encode_image(img)
    b = backend.encode_image(img)
    assert np.array_equal(a.values, b.values), "image encoding not deterministic"
    assert abs(float(np.linalg.norm(a.values)) - 1.0) <= 1e-5, "image embedding not unit-norm"
    text_dim = backend.encode_text(["a photo of a chair"])[0].dim
    assert a.dim == text_dim, f"image dim {a.dim} != text dim {text_dim}"


def check_style_transfer(backend: Backend) -> None:
    img = _test_image()
    prompt = "a photo of a chair, best quality, extremely detailed"
    a = backend.style_transfer(img, prompt, seed=7)
    b = backend.style_transfer(img, prompt, seed=7)
    assert a.shape == (img.shape[0], img.shape[1], 3), f"expected RGB of same size, got {a.shape}"
    assert a.dtype == np.uint8, f"expected uint8, got {a.dtype}"
    assert np.array_equal(a, b), "style transfer not deterministic at fixed seed"


def run_all(backend: Backend) -> list[str]:
    """Run every check; returns the names that passed, raises on failure."""
    checks = [
        check_info,
        check_encode_text_determinism,
        check_encode_text_norms,
        check_encode_image,
        check_style_transfer,
    ]
    passed = []
    for check in checks:
        check(backend)
        passed.append(check.__name__)
    return passed

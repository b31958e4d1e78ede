"""Central finite-difference checks of analytic gradients."""

from typing import Callable, Sequence

import numpy as np

from .losses import LossResult


class GradientCheckError(ValueError):
    pass


def _unpack(out) -> tuple[float, tuple]:
    if isinstance(out, LossResult):
        if out.grad_sims is not None and out.grad_video is None:
            return out.value, (out.grad_sims,)
        return out.value, (out.grad_video, out.grad_text)
    value, grads = out
    return value, tuple(grads)


def numeric_gradient(f: Callable[[], float], x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central differences of ``f`` w.r.t. every entry of ``x`` (perturbed in place)."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + h
        fp = f()
        x[idx] = orig - h
        fm = f()
        x[idx] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise GradientCheckError(f"non-finite loss when perturbing coordinate {idx}")
        g[idx] = (fp - fm) / (2 * h)
    return g


def gradient_check(loss_op: Callable, inputs: Sequence[np.ndarray], h: float = 1e-5) -> float:
    """Max over coordinates of ``|analytic - numeric| / max(1, |numeric|)``.

    ``loss_op(*inputs)`` must return a :class:`LossResult` or a
    ``(value, grads)`` tuple with one gradient per input, in order.
    """
    xs = [np.array(x, dtype=np.float64) for x in inputs]
    value, grads = _unpack(loss_op(*xs))
    if not np.isfinite(value):
        raise GradientCheckError("non-finite loss at the unperturbed point")
    if len(grads) != len(xs):
        raise ValueError(f"loss returned {len(grads)} gradients for {len(xs)} inputs")
    worst = 0.0
    for x, g in zip(xs, grads):
        num = numeric_gradient(lambda: _unpack(loss_op(*xs))[0], x, h)
        err = np.abs(np.asarray(g) - num) / np.maximum(1.0, np.abs(num))
        if err.size:
            worst = max(worst, float(err.max()))
    return worst

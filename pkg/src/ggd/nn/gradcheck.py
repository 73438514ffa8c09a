from __future__ import annotations

import numpy as np


def grad_check(closure, params: dict, eps: float = 1e-6, max_per_tensor: int | None = None,
               seed: int = 0, floor: float = 1e-8) -> float:
    """Largest relative error between analytic and central-difference gradients.

    ``closure(params)`` must return ``(loss, grads)``. With ``max_per_tensor``
    only that many randomly chosen entries of each tensor are perturbed.
    The relative error is ``|a - n| / max(|a|, |n|, floor)``.
    """
    _, grads = closure(params)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name in sorted(params):
        p = params[name]
        analytic = np.asarray(grads.get(name, np.zeros_like(p)), dtype=np.float64).reshape(-1)
        flat = p.reshape(-1)
        idx = np.arange(flat.size)
        if max_per_tensor is not None and flat.size > max_per_tensor:
            idx = rng.choice(flat.size, size=max_per_tensor, replace=False)
        for i in idx:
            old = flat[i]
            flat[i] = old + eps
            lp = closure(params)[0]
            flat[i] = old - eps
            lm = closure(params)[0]
            flat[i] = old
            num = (lp - lm) / (2.0 * eps)
            a = analytic[i]
            err = abs(a - num) / max(abs(a), abs(num), floor)
            worst = max(worst, err)
    return worst

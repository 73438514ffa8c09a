"""Gated recurrent unit cell (reset gate applied after the hidden projection)."""
from __future__ import annotations

import numpy as np

from ggd.nn.core import glorot, sigmoid

GATES = ("r", "z", "n")


class GRUCell:
    def __init__(self, prefix: str, d_in: int, d_hidden: int):
        self.prefix, self.d_in, self.d_hidden = prefix, d_in, d_hidden

    def _k(self, name):
        return f"{self.prefix}.{name}"

    def init(self, params, rng):
        h = self.d_hidden
        params[self._k("Wx")] = np.concatenate([glorot(rng, self.d_in, h) for _ in GATES], axis=1)
        params[self._k("Wh")] = np.concatenate([glorot(rng, h, h) for _ in GATES], axis=1)
        params[self._k("bx")] = np.zeros(3 * h)
        params[self._k("bh")] = np.zeros(3 * h)
        return params

    def forward(self, params, x, h):
        """One step for a batch: ``x`` is (B, d_in), ``h`` is (B, d_hidden)."""
        d = self.d_hidden
        gx = x @ params[self._k("Wx")] + params[self._k("bx")]
        gh = h @ params[self._k("Wh")] + params[self._k("bh")]
        r = sigmoid(gx[:, :d] + gh[:, :d])
        z = sigmoid(gx[:, d:2 * d] + gh[:, d:2 * d])
        hn = gh[:, 2 * d:]
        cand = np.tanh(gx[:, 2 * d:] + r * hn)
        h_new = (1.0 - z) * cand + z * h
        return h_new, (x, h, r, z, hn, cand)

    def backward(self, params, cache, dh_new, grads):
        """Returns ``(dx, dh)`` and accumulates parameter gradients."""
        x, h, r, z, hn, cand = cache
        dcand = dh_new * (1.0 - z)
        dz = dh_new * (h - cand)
        dh = dh_new * z
        dpre_n = dcand * (1.0 - cand ** 2)
        dr = dpre_n * hn
        dhn = dpre_n * r
        dpre_r = dr * r * (1.0 - r)
        dpre_z = dz * z * (1.0 - z)
        dgx = np.concatenate([dpre_r, dpre_z, dpre_n], axis=1)
        dgh = np.concatenate([dpre_r, dpre_z, dhn], axis=1)
        for key, inp, dg in (("Wx", x, dgx), ("Wh", h, dgh)):
            k = self._k(key)
            grads[k] = grads.get(k, 0.0) + inp.T @ dg
        for key, dg in (("bx", dgx), ("bh", dgh)):
            k = self._k(key)
            grads[k] = grads.get(k, 0.0) + dg.sum(axis=0)
        dx = dgx @ params[self._k("Wx")].T
        dh = dh + dgh @ params[self._k("Wh")].T
        return dx, dh

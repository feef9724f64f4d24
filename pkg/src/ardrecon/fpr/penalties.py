"""Penalties and their scalar thresholding operators."""
import numpy as np

from ..errors import ParameterError


class Penalty:
    """``kind`` in {l1, l2, scad, mcp} with strength ``lam`` and shape ``a``.

    ``a`` defaults to 3.7 for SCAD and 3.0 for MCP. The L2 penalty is
    ``lam / 2 * beta^2``.
    """

    kinds = ("l1", "l2", "scad", "mcp")

    def __init__(self, kind="l1", lam=0.0, a=None):
        kind = kind.lower()
        if kind not in self.kinds:
            raise ParameterError(f"unknown penalty {kind!r}")
        if not lam >= 0:
            raise ParameterError("lambda must be >= 0")
        if a is None:
            a = 3.7 if kind == "scad" else 3.0
        if kind == "scad" and not a > 2:
            raise ParameterError("SCAD needs a > 2")
        if kind == "mcp" and not a > 1:
            raise ParameterError("MCP needs a > 1")
        self.kind, self.lam, self.a = kind, float(lam), float(a)

    def __repr__(self):
        return f"Penalty({self.kind!r}, lam={self.lam}, a={self.a})"

    def with_lambda(self, lam):
        return Penalty(self.kind, lam, self.a)

    def value(self, beta):
        b = np.abs(np.asarray(beta, dtype=float))
        lam, a = self.lam, self.a
        if self.kind == "l1":
            return float(lam * b.sum())
        if self.kind == "l2":
            return float(0.5 * lam * np.sum(b * b))
        if self.kind == "scad":
            out = np.where(b <= lam, lam * b,
                           np.where(b <= a * lam,
                                    (2 * a * lam * b - b * b - lam * lam) / (2 * (a - 1)),
                                    0.5 * lam * lam * (a + 1)))
            return float(out.sum())
        out = np.where(b <= a * lam, lam * b - b * b / (2 * a), 0.5 * a * lam * lam)
        return float(out.sum())

    def prox(self, v, step):
        """Thresholding rule applied coordinate-wise with effective ``lam * step``."""
        if not np.all(np.asarray(step) > 0):
            raise ParameterError("step must be > 0")
        return prox(self.kind, v, self.lam * step, self.a)


def soft_threshold(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def prox(kind, v, lt, a=3.7):
    """Closed-form thresholding of ``v`` with effective threshold ``lt = lam * step``."""
    v = np.asarray(v, dtype=float)
    av = np.abs(v)
    if kind == "l1":
        return soft_threshold(v, lt)
    if kind == "l2":
        return v / (1.0 + lt)
    if kind == "scad":
        if not a > 2:
            raise ParameterError("SCAD needs a > 2")
        mid = ((a - 1) * v - np.sign(v) * a * lt) / (a - 2)
        return np.where(av <= 2 * lt, soft_threshold(v, lt), np.where(av <= a * lt, mid, v))
    if kind == "mcp":
        if not a > 1:
            raise ParameterError("MCP needs a > 1")
        return np.where(av <= a * lt, soft_threshold(v, lt) / (1.0 - 1.0 / a), v)
    raise ParameterError(f"unknown penalty {kind!r}")

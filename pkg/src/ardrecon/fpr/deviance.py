"""Cell-wise deviances between ARD counts ``y`` and fitted rates ``mu``."""
import numpy as np

from ..errors import ParameterError

MU_FLOOR = 1e-12
MAD_SCALE = 1.4826  # makes the MAD consistent for the normal sd


def huber(x, delta=1.345):
    ax = np.abs(x)
    return np.where(ax <= delta, 0.5 * x * x, delta * ax - 0.5 * delta * delta)


def huber_psi(x, delta=1.345):
    return np.clip(x, -delta, delta)


def robust_scale(resid):
    """Normal-consistent MAD of the residuals, floored at 1."""
    r = np.asarray(resid, dtype=float).ravel()
    if r.size == 0:
        return 1.0
    mad = np.median(np.abs(r - np.median(r)))
    return max(1.0, MAD_SCALE * float(mad))


class Deviance:
    """``kind`` in {poisson, logistic, huber}; ``delta`` is the Huber threshold."""

    kinds = ("poisson", "logistic", "huber")

    def __init__(self, kind="poisson", delta=1.345):
        if kind not in self.kinds:
            raise ParameterError(f"unknown deviance {kind!r}")
        if not delta > 0:
            raise ParameterError("huber delta must be > 0")
        self.kind = kind
        self.delta = float(delta)

    def __repr__(self):
        return f"Deviance({self.kind!r}, delta={self.delta})"

    def scale(self, y, mu):
        return robust_scale(y - mu) if self.kind == "huber" else 1.0

    def value(self, y, mu, trials=None, scale=1.0):
        """Per-cell deviance. ``trials`` (= |G_k \\ {i}|) is needed for logistic."""
        mu = np.maximum(mu, MU_FLOOR)
        if self.kind == "poisson":
            ylog = np.where(y > 0, y * np.log(np.where(y > 0, y, 1.0) / mu), 0.0)
            return 2.0 * (mu - y + ylog)
        if self.kind == "huber":
            return huber((y - mu) / scale, self.delta)
        N = trials
        yc = np.clip(y, 0.0, N)
        mu = np.clip(mu, MU_FLOOR, np.maximum(N - MU_FLOOR, MU_FLOOR))
        fail, mfail = N - yc, np.maximum(N - mu, MU_FLOOR)
        t1 = np.where(yc > 0, yc * np.log(np.where(yc > 0, yc, 1.0) / mu), 0.0)
        t2 = np.where(fail > 0, fail * np.log(np.where(fail > 0, fail, 1.0) / mfail), 0.0)
        return np.where(N > 0, 2.0 * (t1 + t2), 0.0)

    def grad(self, y, mu, trials=None, scale=1.0):
        """Derivative of :meth:`value` with respect to ``mu`` (scale held fixed)."""
        if self.kind == "poisson":
            muf = np.maximum(mu, MU_FLOOR)
            return np.where(mu > MU_FLOOR, 2.0 * (1.0 - y / muf), 2.0)
        if self.kind == "huber":
            return -huber_psi((y - mu) / scale, self.delta) / scale
        N = trials
        yc = np.clip(y, 0.0, N)
        muc = np.clip(mu, MU_FLOOR, np.maximum(N - MU_FLOOR, MU_FLOOR))
        g = 2.0 * (-yc / muc + (N - yc) / np.maximum(N - muc, MU_FLOOR))
        return np.where(N > 0, g, 0.0)

"""Pair feature map: intercept, node effects and symmetric trait-pair indicators."""
import numpy as np

from ..errors import ParameterError


class FeatureMap:
    """``X_ij`` = [1, e_i + e_j, b_kl(i, j) for k <= l].

    ``b_kk = 1[i in G_k, j in G_k]`` and, for ``k < l``,
    ``b_kl = 1[i in G_k, j in G_l] + 1[i in G_l, j in G_k]``, so ``X_ij = X_ji``.
    The trait block of ``X_ij' beta`` equals ``M_i B M_j'`` with ``B`` the
    symmetric K x K matrix holding the ``b`` coefficients.
    """

    def __init__(self, n, K):
        if n < 2 or K < 1:
            raise ParameterError("feature map needs n >= 2 and K >= 1")
        self.n = int(n)
        self.K = int(K)
        self.kl = np.array([(k, l) for k in range(K) for l in range(k, K)], dtype=np.int64)

    @classmethod
    def for_traits(cls, traits):
        return cls(traits.n, traits.K)

    @property
    def dim(self):
        return 1 + self.n + len(self.kl)

    @property
    def names(self):
        return (["intercept"] + [f"node:{i}" for i in range(self.n)]
                + [f"traitpair:{k}:{l}" for k, l in self.kl])

    def split(self, beta):
        """``(intercept, node effects a, symmetric B)`` views of ``beta``."""
        beta = np.asarray(beta, dtype=float)
        if beta.shape != (self.dim,):
            raise ParameterError(f"beta must have length {self.dim}")
        B = np.zeros((self.K, self.K))
        b = beta[1 + self.n:]
        B[self.kl[:, 0], self.kl[:, 1]] = b
        B[self.kl[:, 1], self.kl[:, 0]] = b
        return beta[0], beta[1:1 + self.n], B

    def join_gradient(self, g0, ga, GB):
        """Pack gradients wrt (intercept, a, full B matrix) into beta coordinates."""
        k, l = self.kl[:, 0], self.kl[:, 1]
        gb = np.where(k == l, GB[k, l], GB[k, l] + GB[l, k])
        return np.concatenate([[g0], ga, gb])

    def linear_predictor(self, beta, membership):
        """``X_ij' beta`` for all ordered pairs (diagonal meaningless)."""
        b0, a, B = self.split(beta)
        M = membership
        return b0 + a[:, None] + a[None, :] + M @ B @ M.T

    def row(self, membership, i, j):
        """Explicit feature vector ``X_ij``."""
        x = np.zeros(self.dim)
        x[0] = 1.0
        x[1 + i] += 1.0
        x[1 + j] += 1.0
        mi, mj = membership[i], membership[j]
        k, l = self.kl[:, 0], self.kl[:, 1]
        x[1 + self.n:] = np.where(k == l, mi[k] * mj[k], mi[k] * mj[l] + mi[l] * mj[k])
        return x

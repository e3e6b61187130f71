"""G-optimal design over finite arm sets via Frank-Wolfe.

Starting from uniform weights, each iteration moves mass toward the arm
with the largest leverage ||x||^2_{M(pi)^-1} using the closed-form step
for the log-det objective, stopping once the worst-case leverage reaches
the relaxed 2d bound. A small ridge keeps rank-deficient arm sets
well-posed.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class DesignDistribution:
    support: np.ndarray          # (m, d) arm vectors carrying positive weight
    support_indices: np.ndarray  # (m,) indices into the original arm array
    weights: np.ndarray          # (m,) probabilities
    g_value: float               # max leverage under the ridged design matrix
    ridge_eps: float
    iterations: int

    def sample_index(self, rng):
        """Index into the ORIGINAL arm array, drawn by design weight."""
        j = int(rng.choice(len(self.weights), p=self.weights))
        return int(self.support_indices[j])

    def sample_arm(self, rng):
        j = int(rng.choice(len(self.weights), p=self.weights))
        return self.support[j]


def _leverages(arms, weights, ridge_eps):
    d = arms.shape[1]
    M = ridge_eps * np.eye(d) + (arms * weights[:, None]).T @ arms
    sol = np.linalg.solve(M, arms.T)
    return np.sum(arms.T * sol, axis=0)


def g_optimal(arms, max_iters=500, tol=0.0, ridge_eps=1e-8):
    """Design distribution with worst-case leverage at most 2d (+tol)."""
    arms = np.asarray(arms, dtype=float)
    if arms.ndim != 2 or arms.shape[0] == 0:
        raise ValueError("g_optimal needs a nonempty (K, d) arm matrix")
    K, d = arms.shape
    target = 2.0 * d + tol
    weights = np.full(K, 1.0 / K)
    lev = _leverages(arms, weights, ridge_eps)
    g_value = float(lev.max())
    iters = 0
    while g_value > target:
        if iters >= max_iters:
            raise RuntimeError(
                f"Frank-Wolfe failed to reach the 2d bound in {max_iters} "
                f"iterations (g={g_value:.4f}, d={d})"
            )
        i_star = int(np.argmax(lev))
        # closed-form step for the log-det objective
        step = (g_value / d - 1.0) / (g_value - 1.0)
        weights *= 1.0 - step
        weights[i_star] += step
        lev = _leverages(arms, weights, ridge_eps)
        g_value = float(lev.max())
        iters += 1

    indices = np.arange(K)
    keep = weights > 1e-9
    if not np.all(keep):
        weights = weights[keep] / weights[keep].sum()
        arms = arms[keep]
        indices = indices[keep]
        g_value = float(_leverages(arms, weights, ridge_eps).max())
        if g_value > target + 1e-12:
            raise RuntimeError("support pruning pushed the design past 2d")
    return DesignDistribution(
        support=arms,
        support_indices=indices,
        weights=weights,
        g_value=g_value,
        ridge_eps=ridge_eps,
        iterations=iters,
    )

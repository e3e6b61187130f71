"""Binary-tree continual-release mechanism over matrix-valued streams.

A balanced binary tree over the (power-of-two padded) horizon stores, per
dyadic interval, the clean partial sum of inserted increments plus one
symmetric Gaussian noise matrix sampled when the interval completes. Any
prefix sum decomposes into at most ceil(log2 T) + 1 disjoint nodes, and
changing a single increment touches only the nodes on its root path.
"""

import math

import numpy as np


def tree_levels(T):
    """Number of node levels m = ceil(log2 T) + 1 for a declared horizon."""
    if T < 1:
        raise ValueError("horizon must be at least 1")
    return int(math.ceil(math.log2(T))) + 1 if T > 1 else 1


def sigma_from_budget(eps, delta, T, sensitivity):
    """Per-coordinate node noise std 6 sqrt(m) ln(32/delta) * sens / eps."""
    if eps <= 0 or delta <= 0:
        raise ValueError("eps and delta must be positive")
    m = tree_levels(T)
    return 6.0 * math.sqrt(m) * math.log(32.0 / delta) * sensitivity / eps


def prefix_decomposition(t, size):
    """Disjoint dyadic intervals covering [1, t] in a tree over [1, size]."""
    out = []
    lo, hi = 1, size
    while True:
        if t == hi:
            out.append((lo, hi))
            return out
        mid = (lo + hi) // 2
        if t <= mid:
            hi = mid
        else:
            out.append((lo, mid))
            lo = mid + 1


def root_path(t, size):
    """Dyadic intervals containing position t, root first."""
    out = []
    lo, hi = 1, size
    while True:
        out.append((lo, hi))
        if lo == hi:
            return out
        mid = (lo + hi) // 2
        if t <= mid:
            hi = mid
        else:
            lo = mid + 1


class NoisyPrefixTree:
    """Streaming noisy prefix sums of symmetric d x d increments."""

    def __init__(self, T, d, sigma_noise, seed=None, sensitivity=None):
        if T < 1:
            raise ValueError("horizon must be at least 1")
        if sigma_noise < 0:
            raise ValueError("noise std must be nonnegative")
        self.T = int(T)
        self.d = int(d)
        self.sigma_noise = float(sigma_noise)
        self.sensitivity = sensitivity
        self.levels = tree_levels(T)
        self.size = 1 << max(self.levels - 1, 0)
        self.next_t = 1
        self._clean = {}
        self._noise = {}
        self._rng = np.random.default_rng(seed)
        self.sensitivity_warnings = 0

    def _node_noise(self, node):
        """Sample the node's symmetric noise exactly once."""
        if node not in self._noise:
            if self.sigma_noise == 0.0:
                self._noise[node] = 0.0
            else:
                Z = self._rng.normal(0.0, self.sigma_noise, size=(self.d, self.d))
                self._noise[node] = 0.5 * (Z + Z.T)
        return self._noise[node]

    def insert(self, increment):
        """Append the next increment; zero-matrix inserts are legal."""
        if self.next_t > self.T:
            raise ValueError("stream exhausted: horizon reached")
        t = self.next_t
        if increment is None or (np.isscalar(increment) and increment == 0):
            inc = None
        else:
            inc = np.asarray(increment, dtype=float)
            if inc.shape != (self.d, self.d):
                raise ValueError("increment shape mismatch")
            if not np.allclose(inc, inc.T, rtol=0.0, atol=1e-12):
                raise ValueError("increment must be symmetric")
            if self.sensitivity is not None:
                if np.linalg.norm(inc, 2) > self.sensitivity * (1 + 1e-9):
                    self.sensitivity_warnings += 1
        for node in root_path(t, self.size):
            if inc is not None:
                if node in self._clean:
                    self._clean[node] = self._clean[node] + inc
                else:
                    self._clean[node] = inc.copy()
            if node[1] == t:
                self._node_noise(node)
        self.next_t = t + 1

    def prefix_sum(self, t):
        """Noisy sum of increments 1..t; t must already be inserted."""
        if not (1 <= t <= self.next_t - 1):
            raise ValueError("prefix index out of inserted range")
        total = np.zeros((self.d, self.d))
        for node in prefix_decomposition(t, self.size):
            if node in self._clean:
                total = total + self._clean[node]
            noise = self._node_noise(node)
            if not np.isscalar(noise):
                total = total + noise
        return 0.5 * (total + total.T)

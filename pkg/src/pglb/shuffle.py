"""Multi-message shuffle summation for private vector and matrix sums.

Each scalar in [-delta_cap, delta_cap] is shifted by +delta_cap, quantized
to g levels with stochastic rounding, and padded with Binomial(b, p) noise
bits. The shuffler only ever needs the per-label bit totals, so messages
are stored as counts and pooled directly; a debug mode materializes and
permutes the individual bits to validate the compressed path.

The worst-case noise count b from the protocol's calibration is far too
large for desk-scale simulation, so it carries a scaling knob c_b; runs
with c_b < 1 are not protocol-private and are flagged as such downstream.
"""

import json
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ProtocolParams:
    g: int          # quantization granularity
    b: int          # binomial noise trials per message
    p: float        # binomial bias, 1/4 in the calibrated protocol
    n: int          # number of contributing users
    delta_cap: float  # per-entry magnitude bound on inputs
    d: int          # vector dimension


@dataclass(frozen=True)
class ShuffleMessage:
    """Compressed bit multiset: number of one-bits out of g + b."""

    label: object
    ones_count: int


def derive_params(n, d, eps, delta, c_b=1.0):
    """Protocol parameters for an (eps, delta) target over n users.

    g = max(2 sqrt(n), d, 4) rounded up,
    b = ceil(c_b * 24e4 g^2 ln(4(d^2+1)/delta)^2 / (eps^2 n)), p = 1/4.
    """
    if not (0.0 < eps <= 15.0):
        raise ValueError("eps must lie in (0, 15]")
    if not (0.0 < delta < 0.5):
        raise ValueError("delta must lie in (0, 1/2)")
    if n < 1:
        raise ValueError("need at least one user")
    if not (0.0 < c_b <= 1.0):
        raise ValueError("c_b must lie in (0, 1]")
    g = int(max(math.ceil(2.0 * math.sqrt(n)), d, 4))
    log_term = math.log(4.0 * (d * d + 1) / delta)
    b = math.ceil(c_b * 24e4 * g * g * log_term * log_term / (eps * eps * n))
    return ProtocolParams(g=g, b=int(b), p=0.25, n=n, delta_cap=1.0, d=d)


def _encode(x, span, params, rng):
    """Stochastic-rounding encoder for x in [0, span], plus binomial pad.

    Vectorized: x may be an array; returns integer counts of one-bits.
    """
    x = np.asarray(x, dtype=float)
    scaled = x * params.g / span
    base = np.floor(scaled)
    frac = scaled - base
    ones = base.astype(np.int64) + (rng.random(x.shape) < frac)
    if params.b > 0:
        ones = ones + rng.binomial(params.b, params.p, size=x.shape)
    return ones


def scalar_randomize(x, params, rng):
    """Randomize one scalar in [0, delta_cap] into a bit-multiset count."""
    if not (0.0 <= x <= params.delta_cap * (1 + 1e-12)):
        raise ValueError("input outside [0, delta_cap]")
    ones = int(_encode(np.array([x]), params.delta_cap, params, rng)[0])
    return ShuffleMessage(label=None, ones_count=ones)


def vector_randomize(v, params, rng):
    """Randomizer for one user's vector with entries in [-cap, cap].

    Entries are shifted by +cap and encoded over the doubled range, one
    labeled message per coordinate.
    """
    v = np.asarray(v, dtype=float)
    cap = params.delta_cap
    if v.shape != (params.d,):
        raise ValueError("vector dimension mismatch")
    if np.max(np.abs(v)) > cap * (1 + 1e-12):
        raise ValueError("entry magnitude exceeds delta_cap")
    ones = _encode(v + cap, 2.0 * cap, params, rng)
    return [ShuffleMessage(label=k, ones_count=int(ones[k])) for k in range(params.d)]


def matrix_randomize(X, params, rng):
    """Randomizer for one user's symmetric matrix, upper triangle only."""
    X = np.asarray(X, dtype=float)
    cap = params.delta_cap
    if X.shape != (params.d, params.d):
        raise ValueError("matrix dimension mismatch")
    if not np.allclose(X, X.T, rtol=0.0, atol=1e-12):
        raise ValueError("matrix input must be symmetric")
    if np.max(np.abs(X)) > cap * (1 + 1e-12):
        raise ValueError("entry magnitude exceeds delta_cap")
    iu, ju = np.triu_indices(params.d)
    ones = _encode(X[iu, ju] + cap, 2.0 * cap, params, rng)
    return [
        ShuffleMessage(label=(int(i), int(j)), ones_count=int(c))
        for i, j, c in zip(iu, ju, ones)
    ]


def shuffle_pool(user_messages, rng=None, materialize_bits=False):
    """Pool per-label one-bit totals across users.

    The analyzer only consumes per-label sums, which are invariant under
    any permutation, so pooling replaces the explicit shuffle. With
    materialize_bits=True the bits are expanded, permuted and recounted.
    """
    if not user_messages:
        raise ValueError("no user messages to pool")
    labels = [m.label for m in user_messages[0]]
    pooled = {label: 0 for label in labels}
    for msgs in user_messages:
        seen = set()
        for m in msgs:
            if m.label not in pooled:
                raise ValueError(f"unexpected label {m.label!r}")
            pooled[m.label] += m.ones_count
            seen.add(m.label)
        if len(seen) != len(pooled):
            raise ValueError("every user must contribute every label")
    if materialize_bits:
        if rng is None:
            raise ValueError("materialize_bits needs an rng for the permutation")
        total_bits = {label: [] for label in pooled}
        for msgs in user_messages:
            for m in msgs:
                total_bits[m.label].extend([1] * m.ones_count)
        for label, bits in total_bits.items():
            perm = rng.permutation(len(bits))
            pooled[label] = int(np.sum(np.asarray(bits)[perm])) if bits else 0
    return pooled


def analyze_vector(pooled, params):
    """Debiased vector-sum estimate from pooled per-coordinate counts."""
    cap = params.delta_cap
    out = np.empty(params.d)
    limit = params.n * (params.g + params.b)
    for k in range(params.d):
        c = pooled[k]
        if not (0 <= c <= limit):
            raise ValueError("pooled count outside feasible range")
        z = (2.0 * cap / params.g) * (c - params.p * params.b * params.n)
        out[k] = z - params.n * cap
    return out


def analyze_matrix(pooled, params):
    """Debiased symmetric-matrix-sum estimate, lower triangle mirrored."""
    cap = params.delta_cap
    out = np.empty((params.d, params.d))
    limit = params.n * (params.g + params.b)
    for i in range(params.d):
        for j in range(i, params.d):
            c = pooled[(i, j)]
            if not (0 <= c <= limit):
                raise ValueError("pooled count outside feasible range")
            z = (2.0 * cap / params.g) * (c - params.p * params.b * params.n)
            out[i, j] = z - params.n * cap
            out[j, i] = out[i, j]
    return out


def sum_vectors(vectors, params, rng):
    """End-to-end randomize/pool/analyze round trip for a vector batch."""
    msgs = [vector_randomize(v, params, rng) for v in vectors]
    return analyze_vector(shuffle_pool(msgs), params)


def sum_matrices(matrices, params, rng):
    """End-to-end round trip for a batch of symmetric matrices."""
    msgs = [matrix_randomize(X, params, rng) for X in matrices]
    return analyze_matrix(shuffle_pool(msgs), params)


def sum_vectors_fast(V, params, rng):
    """Vectorized equivalent of sum_vectors for an (n, d) input stack."""
    V = np.asarray(V, dtype=float)
    cap = params.delta_cap
    if V.shape != (params.n, params.d):
        raise ValueError("input stack must be (n, d)")
    if np.max(np.abs(V)) > cap * (1 + 1e-12):
        raise ValueError("entry magnitude exceeds delta_cap")
    counts = _encode(V + cap, 2.0 * cap, params, rng).sum(axis=0)
    z = (2.0 * cap / params.g) * (counts - params.p * params.b * params.n)
    return z - params.n * cap


def sum_matrices_fast(mats, params, rng):
    """Vectorized equivalent of sum_matrices for an (n, d, d) input stack."""
    mats = np.asarray(mats, dtype=float)
    cap = params.delta_cap
    if mats.shape != (params.n, params.d, params.d):
        raise ValueError("input stack must be (n, d, d)")
    if np.max(np.abs(mats)) > cap * (1 + 1e-12):
        raise ValueError("entry magnitude exceeds delta_cap")
    iu, ju = np.triu_indices(params.d)
    counts = _encode(mats[:, iu, ju] + cap, 2.0 * cap, params, rng).sum(axis=0)
    z = (2.0 * cap / params.g) * (counts - params.p * params.b * params.n)
    flat = z - params.n * cap
    out = np.empty((params.d, params.d))
    out[iu, ju] = flat
    out[ju, iu] = flat
    return out


def dump_pooled_counts(pooled, path):
    """Write per-label pooled counts as JSON for protocol audits."""
    payload = {str(label): int(count) for label, count in sorted(pooled.items(), key=lambda kv: str(kv[0]))}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)

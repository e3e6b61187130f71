"""Batched shuffle-private GLM bandit for stochastic contexts.

The horizon splits into a kappa-dependent warm-up batch plus geometrically
growing batches. Within a batch the policy is frozen: arms surviving
confidence-interval elimination are rescaled by the estimated link slope,
a G-optimal design over the scaled arms picks actions, and at the batch
boundary the covariance and parameter estimates are refreshed through the
configured private summation and optimizer channels.
"""

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from . import shuffle
from .design import DesignMatrix, default_floor
from .gdesign import g_optimal
from .glm import mu_dot
from .optim import Ball, GlmRidgeLoss, PgdConfig, mle_exact, pgd_run
from .transcript import LedgerEntry, RegretTranscript


@dataclass
class BatchSchedule:
    M: int
    lengths: list
    alpha: float

    @property
    def total(self):
        return sum(self.lengths)


def batch_schedule(T, M, kappa, gamma, S, d):
    """Warm-up plus geometric batch lengths, truncated to the horizon."""
    if M < 3:
        raise ValueError("need at least 3 batches (M=2 degenerates to alpha=T)")
    alpha = T ** (1.0 / (2.0 * (1.0 - 2.0 ** (-M + 1))))
    b1 = math.ceil(
        (math.sqrt(kappa) * math.exp(3.0 * S) * d * d * gamma**2 / S * alpha)
        ** (2.0 / 3.0)
    )
    if b1 >= T:
        raise ValueError(
            f"infeasible schedule: warm-up length {b1} >= horizon {T}; "
            "reduce gamma or increase T"
        )
    raw = [b1, math.ceil(alpha)]
    for _ in range(3, M + 1):
        raw.append(math.ceil(alpha * math.sqrt(raw[-1])))
    lengths, used = [], 0
    for b in raw:
        take = min(b, T - used)
        lengths.append(take)
        used += take
    if used < T:
        lengths[-1] += T - used
    return BatchSchedule(M=M, lengths=lengths, alpha=alpha)


def beta_scaling(x, V, gamma, kappa, R, S):
    """Uncertainty penalty exp(R * min(2S, gamma sqrt(kappa) ||x||_V^-1))."""
    width = gamma * math.sqrt(kappa) * V.inv_norm(np.asarray(x, dtype=float))
    return math.exp(R * min(2.0 * S, width))


def scale_arms(link, arms, theta_hat_1, V, gamma, kappa, R, S):
    """Scaled arms sqrt(mu_dot/beta) x plus the raw per-arm weights."""
    arms = np.asarray(arms, dtype=float)
    slopes = np.asarray(mu_dot(link, arms @ theta_hat_1))
    widths = gamma * math.sqrt(kappa) * V.inv_norms(arms)
    betas = np.exp(R * np.minimum(2.0 * S, widths))
    weights = slopes / betas
    return np.sqrt(weights)[:, None] * arms, weights


def ucb_lcb(arms, theta_hat, Mk, gamma, kappa):
    """Confidence interval <x, theta> +/- gamma sqrt(kappa) ||x||_{M^-1}."""
    arms = np.asarray(arms, dtype=float)
    mid = arms @ theta_hat
    width = gamma * math.sqrt(kappa) * Mk.inv_norms(arms)
    return mid + width, mid - width


def eliminate(arms, history, gamma, kappa):
    """Indices of arms not dominated in any earlier batch; never empty."""
    arms = np.asarray(arms, dtype=float)
    keep = np.arange(len(arms))
    for theta_hat, Mk in history:
        sub = arms[keep]
        ucb, lcb = ucb_lcb(sub, theta_hat, Mk, gamma, kappa)
        mask = ucb >= lcb.max()
        if not np.any(mask):  # unreachable: the max-LCB arm survives itself
            mask = ucb == ucb.max()
        keep = keep[mask]
    return keep


@dataclass
class ShuffleGlmConfig:
    T: int
    M: int
    d: int
    K: int
    eps: float
    delta: float
    kappa_bound: float
    kappa_star_lb: float
    R: float = 1.0
    S: float = 1.0
    lam: float | None = None
    gamma: float | None = None
    sigma: float | None = None
    nu: float | None = None
    channel: str = "exact"
    c_b: float = 1.0
    opt_iterations: int | None = None
    opt_eta: float | None = None
    design_max_iters: int = 500
    seed: int = 0

    def __post_init__(self):
        if not (self.eps < 5.0 and self.delta < 0.5):
            raise ValueError("config requires eps < 5 and delta < 1/2")
        if self.sigma is None:
            self.sigma = (
                self.R
                * math.log(self.d**2 / self.delta)
                / (self.kappa_star_lb * self.eps)
            )
        if self.nu is None:
            self.nu = (
                self.R
                * self.S**2
                / self.eps
                * math.sqrt(self.d * math.log(self.T * self.d / self.delta) ** 3)
            )
        log_term = math.sqrt(math.log(2.0 * self.d * self.M * self.T / self.delta))
        if self.lam is None:
            self.lam = (
                20.0 * self.d * self.R * math.log(self.T)
                + 6.0 * self.sigma * log_term
            )
        if self.gamma is None:
            inner = self.d * self.R * math.log(self.T) + 12.0 * self.sigma * log_term
            self.gamma = 30.0 * self.R * self.S * math.sqrt(inner) + math.sqrt(
                4.0 * self.R * self.S * self.nu
            )

    @property
    def lam_spread(self):
        """Half-width of the [lambda_min, lambda_max] envelope."""
        return (
            8.0
            * self.R
            * math.log(self.d**2 / self.delta)
            / (self.kappa_star_lb * self.eps)
            * (
                math.sqrt(self.d)
                + 6.0 * math.sqrt(math.log(2.0 * self.M * self.T / self.delta))
            )
        )

    @property
    def lam_max(self):
        return self.lam + self.lam_spread

    @property
    def lam_min(self):
        return self.lam - self.lam_spread


def _sum_outer_products(cfg, rng, eps, delta, cap, outer):
    """Aggregate symmetric outer products through the configured channel."""
    exact = outer.sum(axis=0)
    if cfg.channel == "exact":
        return exact
    d = exact.shape[0]
    if cfg.channel == "gaussian":
        scale = cap * math.log(d * d / delta) / eps
        Z = rng.normal(0.0, scale, size=(d, d))
        iu, ju = np.triu_indices(d)
        noise = np.zeros((d, d))
        noise[iu, ju] = Z[iu, ju]
        noise[ju, iu] = Z[iu, ju]
        return exact + noise
    if cfg.channel == "shuffle":
        params = shuffle.derive_params(len(outer), d, eps, delta, c_b=cfg.c_b)
        params = shuffle.ProtocolParams(
            g=params.g, b=params.b, p=params.p, n=len(outer), delta_cap=cap, d=d
        )
        return shuffle.sum_matrices_fast(outer, params, rng)
    raise ValueError(f"unknown channel {cfg.channel!r}")


def _fit_theta(cfg, link, X, r, ridge_total, feasible, eps, delta, rng):
    if cfg.channel == "exact":
        return mle_exact(X, r, link, ridge_total, feasible)
    n = len(r)
    loss = GlmRidgeLoss(link, ridge_pp=ridge_total / n)
    L = loss.lipschitz(cfg.R, feasible.radius)
    pcfg = PgdConfig(
        eps=eps,
        delta=delta,
        lipschitz=L,
        iterations=cfg.opt_iterations,
        eta=cfg.opt_eta,
        channel=cfg.channel,
        c_b=cfg.c_b,
    )
    return pgd_run(X, r, loss, feasible, pcfg, rng)


def run_shuffle_glm(stream, cfg):
    """Run the batched algorithm against a stochastic context stream."""
    link = stream.model.link
    rng = np.random.default_rng((cfg.seed, 0x5D1))
    schedule = batch_schedule(cfg.T, cfg.M, cfg.kappa_bound, cfg.gamma, cfg.S, cfg.d)
    transcript = RegretTranscript(algorithm="shuffle_glm", seed=cfg.seed)
    transcript.config = {
        "T": cfg.T,
        "eps": cfg.eps,
        "delta": cfg.delta,
        "batch_lengths": list(schedule.lengths),
        "alpha": schedule.alpha,
        "lam": cfg.lam,
        "gamma": cfg.gamma,
        "channel": cfg.channel,
    }
    floor = default_floor(cfg.d, cfg.lam)
    channel_name = (
        "calibrated" if (cfg.channel == "shuffle" and cfg.c_b == 1.0) else cfg.channel
    )
    eps_half, delta_half = cfg.eps / 2.0, cfg.delta / 2.0

    history = []  # (theta_hat_j, matrix_j) pairs frozen at batch boundaries
    theta_1 = None
    V = None
    t = 0
    for k, length in enumerate(schedule.lengths, start=1):
        if length == 0:
            continue
        transcript.config[f"policy_hash_batch_{k}"] = _policy_hash(history)
        batch_X, batch_r, batch_w = [], [], []
        for i in range(length):
            t += 1
            arms = stream.next_context_set()
            if k == 1:
                design = g_optimal(arms, max_iters=cfg.design_max_iters)
                idx = design.sample_index(rng)
                w = None
            else:
                keep = eliminate(arms, history, cfg.gamma, cfg.kappa_bound)
                survivors = arms[keep]
                scaled, weights = scale_arms(
                    link, survivors, theta_1, V,
                    cfg.gamma, cfg.kappa_bound, cfg.R, cfg.S,
                )
                cap = 1.0 / cfg.kappa_star_lb
                over = weights > cap
                if np.any(over):
                    transcript.bump("sensitivity_clamps", int(over.sum()))
                    weights = np.minimum(weights, cap)
                    scaled = np.sqrt(weights)[:, None] * survivors
                design = g_optimal(scaled, max_iters=cfg.design_max_iters)
                sub_idx = design.sample_index(rng)
                idx = int(keep[sub_idx])
                w = float(weights[sub_idx])
            x = arms[idx]
            reward = stream.sample_reward(x)
            regret = stream.instant_regret(arms, idx)
            transcript.record_round(
                t, arms, idx, reward, regret, explore=(k == 1), switch=(i == 0)
            )
            batch_X.append(x)
            batch_r.append(reward)
            if w is not None:
                batch_w.append(w)

        X = np.asarray(batch_X)
        r = np.asarray(batch_r)
        outer = X[:, :, None] * X[:, None, :]
        if k == 1:
            cap = 1.0
        else:
            cap = 1.0 / cfg.kappa_star_lb
            outer = np.asarray(batch_w)[:, None, None] * outer
        agg = _sum_outer_products(cfg, rng, eps_half, delta_half, cap, outer)
        Mk = DesignMatrix(cfg.lam * np.eye(cfg.d), floor=floor)
        if Mk.add_symmetric_noise(0.5 * (agg + agg.T)):
            transcript.bump("psd_repairs")
        transcript.add_ledger(
            LedgerEntry(
                mechanism=f"covariance_batch_{k}",
                eps=eps_half,
                delta=delta_half,
                share_num=1,
                share_den=2,
                rounds=f"{t - length + 1}-{t}",
                channel=channel_name,
                detail=f"compose=parallel:covariance cap={cap}",
            )
        )
        theta_k = _fit_theta(
            cfg, link, X, r, cfg.lam_max, Ball(np.zeros(cfg.d), cfg.S),
            eps_half, delta_half, rng,
        )
        transcript.add_ledger(
            LedgerEntry(
                mechanism=f"optimizer_batch_{k}",
                eps=eps_half,
                delta=delta_half,
                share_num=1,
                share_den=2,
                rounds=f"{t - length + 1}-{t}",
                channel=channel_name,
                detail="compose=parallel:optimizer",
            )
        )
        if k == 1:
            V = Mk
            theta_1 = theta_k
        history.append((theta_k, Mk))

    transcript.set_counter("batches_run", sum(1 for b in schedule.lengths if b))
    transcript.set_counter(
        "tree_sensitivity_warnings", 0
    )  # schema parity with the adversarial-context runner
    return transcript


def _policy_hash(history):
    payload = b"".join(th.tobytes() + M.M.tobytes() for th, M in history)
    return hashlib.sha1(payload).hexdigest()[:12]

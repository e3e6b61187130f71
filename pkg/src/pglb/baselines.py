"""Non-private comparison algorithms.

GLM-UCB refits the exact regularized MLE on all history each round and
plays the optimistic arm with a width proportional to sqrt(kappa), which
is exactly the dependence the private algorithms are designed to avoid.
The rarely-switching baseline reuses the adversarial-context runner with
all noise channels disabled and the exact optimizer, so a shared seed
yields a transcript identical to the noise-off private run.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .glm import mu, mu_dot, link_integral
from .jdp import JdpConfig, run_jdp
from .transcript import RegretTranscript


@dataclass
class GlmUcbConfig:
    T: int
    d: int
    kappa: float
    width: float = 0.5
    ridge: float = 1.0
    warmup: int = 5
    newton_steps: int = 8
    seed: int = 0


def _newton_refit(theta, X, r, link, ridge, steps):
    """Warm-started damped Newton steps on the total regularized loss."""
    d = theta.shape[0]

    def value(th):
        z = X @ th
        return float(np.sum(-r * z + link_integral(link, z))) + 0.5 * ridge * float(th @ th)

    for _ in range(steps):
        z = X @ theta
        g = X.T @ (mu(link, z) - r) + ridge * theta
        gnorm = float(np.linalg.norm(g))
        if gnorm <= 1e-9:
            break
        w = np.maximum(mu_dot(link, z), 0.0)
        H = (X * w[:, None]).T @ X + ridge * np.eye(d)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            return theta, False
        t, base = 1.0, value(theta)
        for _ in range(40):
            cand = theta - t * step
            if value(cand) <= base:
                theta = cand
                break
            t *= 0.5
        else:
            return theta, False
    return theta, True


def run_glm_ucb(stream, cfg):
    """GLM-UCB with exact per-round MLE and sqrt(kappa)-scaled width."""
    link = stream.model.link
    rng = np.random.default_rng((cfg.seed, 0x6CB))
    d = cfg.d
    transcript = RegretTranscript(algorithm="glm_ucb", seed=cfg.seed)
    transcript.config = {"width": cfg.width, "ridge": cfg.ridge, "kappa": cfg.kappa}
    width = cfg.width * math.sqrt(cfg.kappa)

    Xs = np.zeros((cfg.T, d))
    rs = np.zeros(cfg.T)
    gram = cfg.ridge * np.eye(d)
    theta = np.zeros(d)
    for t in range(1, cfg.T + 1):
        arms = stream.next_context_set()
        if t <= cfg.warmup:
            idx = int(rng.integers(len(arms)))
        else:
            theta, ok = _newton_refit(
                theta, Xs[: t - 1], rs[: t - 1], link, cfg.ridge, cfg.newton_steps
            )
            if not ok:
                transcript.bump("mle_failures")
            gram_inv = np.linalg.inv(gram)
            lev = np.sqrt(np.maximum(np.sum((arms @ gram_inv) * arms, axis=1), 0.0))
            idx = int(np.argmax(arms @ theta + width * lev))
        x = arms[idx]
        reward = stream.sample_reward(x)
        transcript.record_round(
            t, arms, idx, reward, stream.instant_regret(arms, idx)
        )
        Xs[t - 1] = x
        rs[t - 1] = reward
        gram += np.outer(x, x)
    transcript.set_counter("tree_sensitivity_warnings", 0)
    return transcript


def noise_off(cfg):
    """A JdpConfig with every privacy channel disabled."""
    return replace(
        cfg,
        channel="exact",
        tree_sigma_scale=0.0,
        sigma_v=0.0,
        sigma_h=0.0,
    )


def run_rs_nonprivate(stream, cfg):
    """Rarely-switching GLM bandit: the noise-off reduction of the
    adversarial-context private algorithm."""
    if not isinstance(cfg, JdpConfig):
        raise TypeError("run_rs_nonprivate expects a JdpConfig")
    return run_jdp(stream, noise_off(cfg), algorithm_name="rs_nonprivate")

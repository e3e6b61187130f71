"""Link functions, GLM log-losses and instance non-linearity parameters.

Supported links: logistic (sigmoid), probit (standard normal CDF) and
linear (identity). Probit is handled through the integral form of the
log-loss with the closed-form antiderivative of the normal CDF; rewards
for logistic/probit are Bernoulli draws scaled by the reward bound R.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

_SQRT2PI = math.sqrt(2.0 * math.pi)
_PHI0 = 1.0 / _SQRT2PI  # standard normal pdf at 0

LINK_KINDS = ("logistic", "probit", "linear")


@dataclass(frozen=True)
class LinkSpec:
    """Mean function mu, its derivative and the integrated link B(z)."""

    kind: str

    def __post_init__(self):
        if self.kind not in LINK_KINDS:
            raise ValueError(f"unknown link kind {self.kind!r}")


def mu(link, z):
    """Mean function mu(z). Vectorized over z."""
    z = np.asarray(z, dtype=float)
    if link.kind == "logistic":
        return special.expit(z)
    if link.kind == "probit":
        return special.ndtr(z)
    return z + 0.0


def mu_dot(link, z):
    """Derivative of the mean function. Vectorized over z."""
    z = np.asarray(z, dtype=float)
    if link.kind == "logistic":
        s = special.expit(z)
        return s * (1.0 - s)
    if link.kind == "probit":
        return np.exp(-0.5 * z * z) / _SQRT2PI
    return np.ones_like(z)


def link_integral(link, z):
    """B(z) = integral of mu from 0 to z, normalized so B(0) = 0."""
    z = np.asarray(z, dtype=float)
    if link.kind == "logistic":
        # log(1 + e^z) - log 2, computed stably for large |z|
        return np.logaddexp(0.0, z) - math.log(2.0)
    if link.kind == "probit":
        pdf = np.exp(-0.5 * z * z) / _SQRT2PI
        return z * special.ndtr(z) + pdf - _PHI0
    return 0.5 * z * z


@dataclass(frozen=True)
class GlmModel:
    """Reward model: link, true parameter, reward bound R, norm bound S."""

    link: LinkSpec
    theta_star: np.ndarray
    R: float = 1.0
    S: float = 1.0

    def __post_init__(self):
        theta = np.asarray(self.theta_star, dtype=float)
        object.__setattr__(self, "theta_star", theta)
        if self.R <= 0:
            raise ValueError("reward bound R must be positive")
        if np.linalg.norm(theta) > self.S + 1e-9:
            raise ValueError("||theta_star|| exceeds the norm bound S")

    @property
    def dim(self):
        return self.theta_star.shape[0]

    def mean_reward(self, x):
        """Expected reward R * mu(<x, theta_star>) for one arm or a stack."""
        z = np.asarray(x, dtype=float) @ self.theta_star
        return self.R * mu(self.link, z)


@dataclass(frozen=True)
class InstanceParams:
    """Realized non-linearity parameters over a collection of arm sets.

    kappa is the worst-case inverse slope max 1/mu_dot, kappa_star_inv the
    best-case slope max mu_dot, and kappa_hat_inv the mean slope at each
    set's optimal arm (meaningful for stochastic contexts only).
    """

    kappa: float
    kappa_star_inv: float
    kappa_hat_inv: float | None = None


def pointwise_loss(link, theta, x, r):
    """GLM log-loss -r<x,theta> + B(<x,theta>) for a single observation."""
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    if theta.shape != x.shape:
        raise ValueError(f"dimension mismatch: {theta.shape} vs {x.shape}")
    z = float(x @ theta)
    return -r * z + float(link_integral(link, z))


def loss_gradient(link, theta, x, r):
    """Gradient (mu(<x,theta>) - r) * x of the pointwise log-loss."""
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    if theta.shape != x.shape:
        raise ValueError(f"dimension mismatch: {theta.shape} vs {x.shape}")
    z = float(x @ theta)
    return (float(mu(link, z)) - r) * x


def instance_params(model, arm_sets, include_kappa_hat=True):
    """Realized kappa, 1/kappa* and 1/kappa_hat over sampled arm sets."""
    sets = [np.asarray(a, dtype=float) for a in arm_sets]
    if not sets or any(a.shape[0] == 0 for a in sets):
        raise ValueError("instance_params needs nonempty arm sets")
    slopes_min = np.inf
    slopes_max = 0.0
    opt_slopes = []
    for arms in sets:
        z = arms @ model.theta_star
        md = mu_dot(model.link, z)
        slopes_min = min(slopes_min, float(md.min()))
        slopes_max = max(slopes_max, float(md.max()))
        if include_kappa_hat:
            opt_slopes.append(float(md[int(np.argmax(mu(model.link, z)))]))
    kappa_hat_inv = float(np.mean(opt_slopes)) if include_kappa_hat else None
    return InstanceParams(
        kappa=1.0 / slopes_min,
        kappa_star_inv=slopes_max,
        kappa_hat_inv=kappa_hat_inv,
    )


def sample_reward(model, x, rng):
    """Draw one reward for arm x. Bernoulli*R for logistic/probit links."""
    z = float(np.asarray(x, dtype=float) @ model.theta_star)
    if model.link.kind == "linear":
        r = z + 0.05 * model.R * rng.standard_normal()
        return float(np.clip(r, 0.0, model.R))
    p = float(mu(model.link, z))
    return model.R * float(rng.random() < p)

"""Private projected gradient descent, feasible-set projections and an
exact regularized-MLE oracle.

The optimizer mirrors the multi-round private SGD template: per step it
aggregates per-point loss gradients through a configurable summation
channel (exact, Gaussian-idealized, or the full shuffle protocol), takes
a projected step, and returns the average iterate. The exact MLE oracle
(damped Newton, projected gradient when constrained) backs noise-off
equivalence tests and the non-private baselines.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import shuffle
from .glm import link_integral, mu, mu_dot

CHANNELS = ("exact", "gaussian", "shuffle")


class Ball:
    """L2 ball {theta : ||theta - center|| <= radius}."""

    kind = "ball"

    def __init__(self, center, radius):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")

    @property
    def diameter(self):
        return 2.0 * self.radius

    def contains(self, theta, tol=1e-9):
        return np.linalg.norm(np.asarray(theta) - self.center) <= self.radius + tol

    def project(self, theta):
        theta = np.asarray(theta, dtype=float)
        diff = theta - self.center
        norm = np.linalg.norm(diff)
        if norm <= self.radius:
            return theta.copy()
        if self.radius == 0.0:
            return self.center.copy()
        return self.center + diff * (self.radius / norm)


class Ellipsoid:
    """Ellipsoid {theta : ||theta - center||_V <= radius} for PSD V."""

    kind = "ellipsoid"

    def __init__(self, center, V, radius):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        M = np.asarray(getattr(V, "M", V), dtype=float)
        vals, vecs = np.linalg.eigh(0.5 * (M + M.T))
        if vals[0] <= 0:
            raise ValueError("ellipsoid shape matrix must be positive definite")
        self._vals = vals
        self._vecs = vecs

    @property
    def diameter(self):
        return 2.0 * self.radius / math.sqrt(self._vals[0])

    def _quad(self, theta):
        w = self._vecs.T @ (np.asarray(theta, dtype=float) - self.center)
        return float(np.sum(self._vals * w * w))

    def contains(self, theta, tol=1e-9):
        return self._quad(theta) <= (self.radius + tol) ** 2

    def project(self, theta):
        theta = np.asarray(theta, dtype=float)
        r2 = self.radius**2
        if self._quad(theta) <= r2:
            return theta.copy()
        if self.radius == 0.0:
            return self.center.copy()
        w = self._vecs.T @ (theta - self.center)
        lam = self._vals

        # h is strictly decreasing in nu, so bisect on the multiplier
        def h(nu):
            q = w / (1.0 + nu * lam)
            return float(np.sum(lam * q * q)) - r2

        lo, hi = 0.0, 1.0
        while h(hi) > 0.0:
            hi *= 2.0
            if hi > 1e18:
                raise ValueError("ellipsoid projection failed to bracket")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if h(mid) > 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-12 * max(1.0, hi):
                break
        nu = 0.5 * (lo + hi)
        u = self._vecs @ (w / (1.0 + nu * lam))
        return self.center + u


class GlmRidgeLoss:
    """Pointwise GLM log-loss plus a per-point ridge term.

    Each observation contributes  -r <x,theta> + B(<x,theta>)
    + (ridge_pp / 2) ||theta||^2, so the mean over n points targets the
    total objective  sum_i loss_i + (n * ridge_pp / 2) ||theta||^2.
    """

    def __init__(self, link, ridge_pp=0.0):
        self.link = link
        self.ridge_pp = float(ridge_pp)

    def mean_value(self, theta, X, r):
        z = X @ theta
        base = float(np.mean(-r * z + link_integral(self.link, z)))
        return base + 0.5 * self.ridge_pp * float(theta @ theta)

    def mean_gradient(self, theta, X, r):
        z = X @ theta
        resid = mu(self.link, z) - r
        return X.T @ resid / X.shape[0] + self.ridge_pp * theta

    def point_gradients(self, theta, X, r):
        z = X @ theta
        resid = mu(self.link, z) - r
        return resid[:, None] * X + self.ridge_pp * theta

    def lipschitz(self, R, radius, x_norm=1.0):
        """Per-point gradient norm bound over a radius-bounded set."""
        return (R + 1.0) * x_norm + self.ridge_pp * radius


@dataclass
class PgdConfig:
    """Iteration schedule, step size and gradient channel for pgd_run."""

    eps: float = 1.0
    delta: float = 1e-2
    lipschitz: float = 1.0
    iterations: int | None = None
    eta: float | None = None
    channel: str = "exact"
    c_b: float = 1.0
    iteration_cap: int = 100_000
    trace_path: str | None = None

    def resolve_iterations(self, n, d):
        if self.iterations is not None:
            if self.iterations < 1:
                raise ValueError("iterations must be at least 1")
            return int(self.iterations)
        raw = self.eps**2 * n**2 / (d * math.log(n * d / self.delta) ** 3)
        return int(min(max(math.ceil(raw), 1), self.iteration_cap))

    def resolve_eta(self, diameter, steps):
        if self.eta is not None:
            return float(self.eta)
        return 2.0 * diameter / (self.lipschitz * math.sqrt(steps))


def per_step_budget(eps, delta, steps):
    """Budget of each gradient release inside a T-step optimizer run."""
    eps_step = eps / (2.0 * math.sqrt(2.0 * steps * math.log(1.0 / delta)))
    delta_step = delta / (steps + 1.0)
    return eps_step, delta_step


def _gradient_channel(loss, cfg, X, r, n, d, steps, rng):
    """Build a callable theta -> mean-gradient estimate for the channel."""
    if cfg.channel == "exact":
        return lambda theta: loss.mean_gradient(theta, X, r)
    eps_step, delta_step = per_step_budget(cfg.eps, cfg.delta, steps)
    L = cfg.lipschitz
    if cfg.channel == "gaussian":
        sigma = L * math.log(d * d / delta_step) / eps_step

        def gaussian(theta):
            g = loss.mean_gradient(theta, X, r)
            return g + rng.normal(0.0, sigma / n, size=d)

        return gaussian
    if cfg.channel == "shuffle":
        params = shuffle.derive_params(n, d, eps_step, delta_step, c_b=cfg.c_b)
        params = shuffle.ProtocolParams(
            g=params.g, b=params.b, p=params.p, n=n, delta_cap=L, d=d
        )

        def shuffled(theta):
            G = np.clip(loss.point_gradients(theta, X, r), -L, L)
            return shuffle.sum_vectors_fast(G, params, rng) / n

        return shuffled
    raise ValueError(f"unknown gradient channel {cfg.channel!r}")


def pgd_run(X, r, loss, feasible, cfg, rng=None):
    """Projected gradient descent with channelized gradients.

    Returns the average iterate over the run. The starting point is the
    feasible set's center for ellipsoids (the origin can fall outside)
    and the projected origin otherwise.
    """
    X = np.asarray(X, dtype=float)
    r = np.asarray(r, dtype=float)
    n, d = X.shape
    if n == 0:
        raise ValueError("pgd_run needs a nonempty dataset")
    if cfg.channel not in CHANNELS:
        raise ValueError(f"unknown gradient channel {cfg.channel!r}")
    if cfg.channel != "exact":
        if rng is None:
            raise ValueError("noisy channels need an rng")
        if cfg.eps <= 0 or not (0.0 < cfg.delta < 1.0):
            raise ValueError("noisy channels need a valid (eps, delta) budget")
    steps = cfg.resolve_iterations(n, d)
    eta = cfg.resolve_eta(feasible.diameter, steps)
    grad_fn = _gradient_channel(loss, cfg, X, r, n, d, steps, rng)

    if feasible.kind == "ellipsoid":
        theta = feasible.center.copy()
    else:
        theta = feasible.project(np.zeros(d))
    total = theta.copy()
    trace = [] if cfg.trace_path else None
    for step in range(1, steps):
        g = grad_fn(theta)
        theta = feasible.project(theta - eta * g)
        total += theta
        if trace is not None:
            trace.append(
                (step, loss.mean_value(theta, X, r), float(np.linalg.norm(g)))
            )
    theta_bar = total / steps
    if trace is not None:
        with open(cfg.trace_path, "w") as fh:
            fh.write("step,loss,gradient_norm\n")
            for step, val, gn in trace:
                fh.write(f"{step},{val!r},{gn!r}\n")
    return theta_bar


def mle_exact(X, r, link, ridge, feasible=None, max_iter=500):
    """Regularized MLE argmin sum_i loss_i + (ridge/2)||theta||^2.

    Unconstrained solves use damped Newton to gradient norm 1e-10; when a
    feasible set excludes the Newton solution, projected gradient descent
    refines to a projected-gradient norm of 1e-8.
    """
    X = np.asarray(X, dtype=float)
    r = np.asarray(r, dtype=float)
    n, d = X.shape
    if n == 0:
        raise ValueError("mle_exact needs a nonempty dataset")
    if ridge <= 0:
        raise ValueError("ridge must be positive for a well-posed MLE")

    def total_value(theta):
        z = X @ theta
        return float(np.sum(-r * z + link_integral(link, z))) + 0.5 * ridge * float(
            theta @ theta
        )

    def total_gradient(theta):
        z = X @ theta
        return X.T @ (mu(link, z) - r) + ridge * theta

    theta = np.zeros(d)
    eye = ridge * np.eye(d)
    for _ in range(max_iter):
        g = total_gradient(theta)
        gnorm = np.linalg.norm(g)
        if gnorm <= 1e-10:
            break
        z = X @ theta
        w = np.maximum(mu_dot(link, z), 0.0)
        H = (X * w[:, None]).T @ X + eye
        step = np.linalg.solve(H, g)
        # full Newton step whenever it shrinks the gradient (near the
        # optimum the objective decrease underflows, the gradient doesn't)
        cand = theta - step
        if np.linalg.norm(total_gradient(cand)) < gnorm:
            theta = cand
            continue
        t, base, moved = 1.0, total_value(theta), False
        for _ in range(60):
            cand = theta - t * step
            if total_value(cand) <= base - 1e-4 * t * float(g @ step):
                theta, moved = cand, True
                break
            t *= 0.5
        if not moved:
            break
    gnorm = float(np.linalg.norm(total_gradient(theta)))
    if gnorm > 1e-10:
        raise RuntimeError(f"mle_exact Newton failed to converge: |g|={gnorm:.3e}")

    if feasible is None or feasible.contains(theta):
        return theta

    # constrained case: projected gradient from the projected Newton point
    slope_cap = {"logistic": 0.25, "probit": 0.3989422804014327, "linear": 1.0}
    smooth = slope_cap[link.kind] * float(np.linalg.norm(X, 2) ** 2) + ridge
    eta = 1.0 / smooth
    theta = feasible.project(theta)
    for _ in range(200_000):
        g = total_gradient(theta)
        nxt = feasible.project(theta - eta * g)
        pg_norm = np.linalg.norm(theta - nxt) / eta
        theta = nxt
        if pg_norm <= 1e-8:
            return theta
    raise RuntimeError(
        f"mle_exact projected gradient failed: proj-grad norm {pg_norm:.3e}"
    )

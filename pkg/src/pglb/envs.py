"""Synthetic bandit environments: instance recipes and context streams.

An instance fixes the reward model (theta_star drawn uniformly from the
radius-S sphere) and a context law: fresh K arms uniform in the unit ball
each round (stochastic), or a generated-then-frozen script (adversarial).
The environment also owns the regret accounting: instantaneous regret is
measured against the best arm of the round's own context set.
"""

import json
from dataclasses import asdict, dataclass

import numpy as np

from .glm import GlmModel, LinkSpec, instance_params, mu, sample_reward


@dataclass(frozen=True)
class InstanceRecipe:
    d: int
    K: int
    S: float
    link_kind: str = "logistic"
    context_law: str = "stochastic"  # or "adversarial"
    R: float = 1.0
    seed: int = 0
    pilot_rounds: int = 400

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    @staticmethod
    def from_json(text):
        return InstanceRecipe(**json.loads(text))


def _sphere_point(d, radius, rng):
    v = rng.standard_normal(d)
    return v * (radius / np.linalg.norm(v))


def _unit_ball_arms(K, d, rng):
    v = rng.standard_normal((K, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    radii = rng.random(K) ** (1.0 / d)
    return v * radii[:, None]


class ContextStream:
    """Single-consumer stream of context sets plus the reward channel.

    Exactly one reward uniform is consumed per round regardless of the
    chosen arm, so runs that pick different arms still see aligned
    randomness and shared-seed replays are reproducible.
    """

    def __init__(self, model, recipe, horizon, script=None, run_seed=0):
        self.model = model
        self.recipe = recipe
        self.horizon = horizon
        self.script = script
        self._rng = np.random.default_rng((recipe.seed, run_seed, 0x5EED, horizon))
        self._t = 0

    def next_context_set(self):
        if self._t >= self.horizon:
            raise RuntimeError("context stream exhausted")
        if self.script is not None:
            arms = self.script[self._t]
        else:
            arms = _unit_ball_arms(self.recipe.K, self.recipe.d, self._rng)
        self._t += 1
        return arms

    def sample_reward(self, x):
        return sample_reward(self.model, x, self._rng)

    def instant_regret(self, arms, arm_index):
        means = mu(self.model.link, arms @ self.model.theta_star)
        return float(means.max() - means[arm_index])


class Instance:
    """A reward model plus replayable context-stream factory."""

    def __init__(self, recipe):
        self.recipe = recipe
        rng = np.random.default_rng((recipe.seed, 0x7743))
        theta = _sphere_point(recipe.d, recipe.S, rng)
        self.model = GlmModel(
            link=LinkSpec(recipe.link_kind),
            theta_star=theta,
            R=recipe.R,
            S=recipe.S,
        )
        pilot = [
            _unit_ball_arms(recipe.K, recipe.d, rng)
            for _ in range(recipe.pilot_rounds)
        ]
        self.params = instance_params(
            self.model, pilot, include_kappa_hat=(recipe.context_law == "stochastic")
        )

    def stream(self, horizon, run_seed=0):
        """Fresh replayable stream; theta_star stays fixed across run seeds."""
        script = None
        if self.recipe.context_law == "adversarial":
            rng = np.random.default_rng((self.recipe.seed, run_seed, 0xADA, horizon))
            script = [
                _unit_ball_arms(self.recipe.K, self.recipe.d, rng)
                for _ in range(horizon)
            ]
        return ContextStream(
            self.model, self.recipe, horizon, script=script, run_seed=run_seed
        )

    def scripted_stream(self, context_sets):
        """Adversarial stream over hand-written context sets."""
        sets = [np.asarray(a, dtype=float) for a in context_sets]
        return ContextStream(self.model, self.recipe, len(sets), script=sets)

    def to_json(self):
        return json.dumps(
            {
                "recipe": asdict(self.recipe),
                "theta_star": self.model.theta_star.tolist(),
                "kappa": self.params.kappa,
                "kappa_star_inv": self.params.kappa_star_inv,
                "kappa_hat_inv": self.params.kappa_hat_inv,
            },
            sort_keys=True,
        )


def make_instance(recipe):
    return Instance(recipe)


def seed_search(base_recipe, kappa_target, seeds=range(64), rel_tol=0.25):
    """First seed whose realized kappa lands within rel_tol of the target."""
    best = None
    for seed in seeds:
        recipe = InstanceRecipe(**{**asdict(base_recipe), "seed": seed})
        inst = Instance(recipe)
        err = abs(inst.params.kappa - kappa_target) / kappa_target
        if best is None or err < best[0]:
            best = (err, inst)
        if err <= rel_tol:
            return inst
    return best[1]

"""Private generalized linear contextual bandits.

Shuffle-DP (batched, stochastic contexts) and joint-DP (rarely-switching,
adversarial contexts) GLM bandit algorithms, the privacy primitives they
compose (multi-message shuffle summation, binary-tree continual release,
private projected gradient descent, G-optimal design), non-private
baselines and a benchmark harness.
"""

from .design import DesignMatrix, new_regularized
from .envs import Instance, InstanceRecipe, make_instance
from .gdesign import g_optimal
from .glm import GlmModel, LinkSpec, instance_params, mu, mu_dot
from .jdp import JdpConfig, run_jdp
from .optim import Ball, Ellipsoid, PgdConfig, mle_exact, pgd_run
from .shuffle_glm import ShuffleGlmConfig, run_shuffle_glm
from .transcript import RegretTranscript
from .tree import NoisyPrefixTree, sigma_from_budget

__all__ = [
    "Ball",
    "DesignMatrix",
    "Ellipsoid",
    "GlmModel",
    "Instance",
    "InstanceRecipe",
    "JdpConfig",
    "LinkSpec",
    "NoisyPrefixTree",
    "PgdConfig",
    "RegretTranscript",
    "ShuffleGlmConfig",
    "g_optimal",
    "instance_params",
    "make_instance",
    "mle_exact",
    "mu",
    "mu_dot",
    "new_regularized",
    "pgd_run",
    "run_jdp",
    "run_shuffle_glm",
    "sigma_from_budget",
]

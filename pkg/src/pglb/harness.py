"""Experiment runner: seeded multi-run execution, summaries and audits.

A config names one algorithm, one synthetic instance and a seed list.
Each seed produces a transcript CSV; the run emits a summary JSON with
regret statistics, counters, invariant-violation counts and the privacy
ledger audit. Invariant violations make the run fail loudly: a summary
only passes when every per-run check is clean.
"""

import dataclasses
import json
import math
import os
import re
from fractions import Fraction

import numpy as np

from . import tree
from .baselines import GlmUcbConfig, run_glm_ucb, run_rs_nonprivate
from .envs import Instance, InstanceRecipe
from .jdp import JdpConfig, run_jdp
from .shuffle_glm import ShuffleGlmConfig, run_shuffle_glm
from .transcript import read_rows_csv

ALGORITHMS = ("jdp_glm", "rs_nonprivate", "shuffle_glm", "glm_ucb")


@dataclasses.dataclass
class ExperimentConfig:
    name: str
    algorithm: str
    recipe: InstanceRecipe
    params: dict
    seeds: list
    out_dir: str | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if not self.seeds:
            raise ValueError("need at least one seed")


def _build_algorithm_config(cfg, instance, seed):
    params = dict(cfg.params)
    recipe = cfg.recipe
    T = int(params.pop("T"))
    if cfg.algorithm == "glm_ucb":
        params.setdefault("kappa", instance.params.kappa)
        return T, GlmUcbConfig(T=T, d=recipe.d, seed=seed, **params)
    params.setdefault("kappa_bound", instance.params.kappa)
    params.setdefault("kappa_star_lb", 1.0 / instance.params.kappa_star_inv)
    params.setdefault("R", recipe.R)
    params.setdefault("S", recipe.S)
    params.setdefault("link_kind", recipe.link_kind)
    if cfg.algorithm in ("jdp_glm", "rs_nonprivate"):
        return T, JdpConfig(T=T, d=recipe.d, seed=seed, **params)
    return T, ShuffleGlmConfig(T=T, d=recipe.d, K=recipe.K, seed=seed, **params)


def run_single(cfg, instance, seed):
    T, algo_cfg = _build_algorithm_config(cfg, instance, seed)
    stream = instance.stream(T, run_seed=seed)
    if cfg.algorithm == "glm_ucb":
        return run_glm_ucb(stream, algo_cfg)
    if cfg.algorithm == "rs_nonprivate":
        return run_rs_nonprivate(stream, algo_cfg)
    if cfg.algorithm == "jdp_glm":
        return run_jdp(stream, algo_cfg)
    return run_shuffle_glm(stream, algo_cfg)


def check_invariants(transcript):
    """Per-transcript structural checks; returns a violation dict."""
    violations = dict(transcript.violation_counters())
    total = 0.0
    for row in transcript.rows:
        total += row[4]
        if row[4] < 0:
            violations["negative_regret"] = violations.get("negative_regret", 0) + 1
        if row[5] != total:
            violations["cumsum_mismatch"] = violations.get("cumsum_mismatch", 0) + 1
    conf = transcript.config
    if "switch_count_bound" in conf:
        if transcript.counters.get("switch_count", 0) > conf["switch_count_bound"]:
            violations["switch_count_bound"] = 1
    if "explore_count_bound" in conf:
        if transcript.counters.get("explore_rounds", 0) > conf["explore_count_bound"]:
            violations["explore_count_bound"] = 1
    return violations


def run_experiment(cfg):
    """Execute all seeds; write transcripts and a summary JSON."""
    instance = Instance(cfg.recipe)
    finals, per_seed, all_violations = [], {}, {}
    ledger_reports = {}
    if cfg.out_dir:
        os.makedirs(cfg.out_dir, exist_ok=True)
    for seed in cfg.seeds:
        transcript = run_single(cfg, instance, seed)
        violations = check_invariants(transcript)
        finals.append(transcript.cumulative_regret)
        per_seed[str(seed)] = {
            "final_regret": transcript.cumulative_regret,
            "counters": transcript.counters,
        }
        if violations:
            all_violations[str(seed)] = violations
        if transcript.ledger:
            ledger_reports[str(seed)] = privacy_ledger_check(transcript)
        if cfg.out_dir:
            transcript.write_csv(
                os.path.join(cfg.out_dir, f"{cfg.name}_seed{seed}.csv")
            )
    finals = np.asarray(finals)
    summary = {
        "name": cfg.name,
        "algorithm": cfg.algorithm,
        "instance": json.loads(instance.to_json()),
        "params": cfg.params,
        "seeds": list(cfg.seeds),
        "mean_regret": float(finals.mean()),
        "std_regret": float(finals.std(ddof=1)) if len(finals) > 1 else 0.0,
        "per_seed": per_seed,
        "violations": all_violations,
        "passed": not all_violations,
        "ledger": next(iter(ledger_reports.values())) if ledger_reports else None,
    }
    if cfg.out_dir:
        with open(os.path.join(cfg.out_dir, f"{cfg.name}_summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
    return summary


def privacy_ledger_check(transcript):
    """Arithmetic audit of the transcript's privacy ledger.

    Parallel-composed groups (mechanisms over disjoint data) contribute
    the max share inside the group; everything else adds up. Shares are
    exact fractions, so the total-budget identity is checked exactly.
    Entries running on idealized or disabled channels are reported as
    NON-PRIVATE.
    """
    conf = transcript.config
    eps = conf.get("eps")
    delta = conf.get("delta")
    groups, sequential = {}, []
    non_private = []
    checks = {}
    for entry in transcript.ledger:
        share = Fraction(entry.share_num, entry.share_den)
        match = re.search(r"compose=parallel:(\S+)", entry.detail)
        if match:
            groups.setdefault(match.group(1), []).append(share)
        else:
            sequential.append(share)
        if not entry.private:
            non_private.append(f"{entry.mechanism} [{entry.channel}]")
        if entry.mechanism.startswith("tree_") and eps is not None:
            m_sigma = re.search(r"sigma=([0-9.eE+-]+)", entry.detail)
            m_sens = re.search(r"sensitivity=([0-9.eE+-]+)", entry.detail)
            m_T = re.search(r"T=(\d+)", entry.detail)
            if m_sigma and m_sens and m_T and float(m_sigma.group(1)) > 0:
                implied = (
                    6.0
                    * math.sqrt(tree.tree_levels(int(m_T.group(1))))
                    * math.log(32.0 / delta)
                    * float(m_sens.group(1))
                    / float(m_sigma.group(1))
                )
                checks[f"{entry.mechanism}_implied_eps"] = implied
                checks[f"{entry.mechanism}_within_budget"] = implied <= eps * (1 + 1e-9)
        m_cut = re.search(r"calls=(\d+) cutoff=(\d+)", entry.detail)
        if m_cut and entry.mechanism.startswith("optimizer_") and eps is not None:
            calls, cutoff = int(m_cut.group(1)), int(m_cut.group(2))
            checks[f"{entry.mechanism}_calls_within_cutoff"] = calls <= cutoff
            if delta is not None and "theta" in entry.mechanism:
                composed = entry.eps * 6.0 * math.sqrt(
                    2.0 * cutoff * math.log(4.0 / delta)
                )
                checks[f"{entry.mechanism}_composed_eps_matches"] = (
                    abs(composed - eps) <= 1e-9 * max(1.0, eps)
                )
    total_share = sum(
        (max(shares) for shares in groups.values()), Fraction(0)
    ) + sum(sequential, Fraction(0))
    report = {
        "eps_budget": eps,
        "delta_budget": delta,
        "total_share": f"{total_share}",
        "share_within_budget": total_share <= 1,
        "eps_total": float(total_share) * eps if eps is not None else None,
        "delta_total": float(total_share) * delta if delta is not None else None,
        "non_private_channels": sorted(set(non_private)),
        "checks": checks,
    }
    report["ok"] = bool(
        report["share_within_budget"]
        and all(v for k, v in checks.items() if k.endswith(("_within_budget", "_matches", "_within_cutoff")))
    )
    return report


def compare_report(summaries):
    """Algorithm-by-instance table of mean +/- std regret with trend flags."""
    if len(summaries) < 2:
        raise ValueError("compare_report needs at least 2 summaries")
    cells = {}
    for s in summaries:
        algo = s["algorithm"]
        label = s.get("instance_label") or s["name"]
        cells[(algo, label)] = (s["mean_regret"], s["std_regret"], s["instance"]["kappa"])
    algos = sorted({a for a, _ in cells})
    labels = sorted({l for _, l in cells}, key=lambda l: min(
        cells[(a, l)][2] for a in algos if (a, l) in cells
    ))
    lines = ["algorithm".ljust(18) + "".join(l.rjust(24) for l in labels)]
    for a in algos:
        row = [a.ljust(18)]
        for l in labels:
            if (a, l) in cells:
                m, sd, _ = cells[(a, l)]
                row.append(f"{m:.2f} +/- {sd:.2f}".rjust(24))
            else:
                row.append("-".rjust(24))
        lines.append("".join(row))
    flags = {}
    for a in algos:
        vals = [cells[(a, l)][0] for l in labels if (a, l) in cells]
        if len(vals) >= 2:
            flags[f"{a}_regret_nondecreasing_in_kappa"] = all(
                b >= a_ * 0.9 for a_, b in zip(vals, vals[1:])
            )
            spread = (max(vals) - min(vals)) / max(max(vals), 1e-12)
            flags[f"{a}_kappa_spread"] = spread
    return {"table": "\n".join(lines), "cells": {f"{a}|{l}": cells[(a, l)] for a, l in cells}, "flags": flags}


def replay_summary(csv_path):
    """Recompute summary statistics from a written transcript CSV."""
    rows = read_rows_csv(csv_path)
    total = 0.0
    for row in rows:
        total += row[4]
        if abs(row[5] - total) > 1e-9 * max(1.0, abs(total)):
            raise ValueError(f"cumulative regret mismatch at round {row[0]}")
    return {
        "rounds": len(rows),
        "final_regret": rows[-1][5] if rows else 0.0,
        "explore_rounds": sum(r[6] for r in rows),
        "switch_rounds": sum(r[7] for r in rows),
    }

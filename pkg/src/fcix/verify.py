"""Self-check of the closed-form identities of consistent comparison matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rpcm

# (alpha, beta, gamma) triplets and their reference condition numbers at lambda = 3
CONDITION_EXAMPLE = [
    ((1.001, 0.995, 1.005), 1.000),
    ((1.002, 0.980, 1.015), 1.000),
    ((0.950, 0.775, 1.015), 1.015),
    ((1.875, 0.205, 0.580), 2.030),
    ((5.225, 3.170, 0.001), 417.709),
]
CONDITION_RTOL = 0.005


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def random_consistent(rng: np.random.Generator, n: int) -> rpcm.ComparisonMatrix:
    return rpcm.from_weights(np.exp(rng.uniform(-2.0, 2.0, n)))


def perturb_pair(a: rpcm.ComparisonMatrix, i: int, j: int, c: float) -> rpcm.ComparisonMatrix:
    e = np.array(a.entries)
    e[i, j] *= c
    e[j, i] /= c
    return rpcm.ComparisonMatrix(e)


def identity_suite(n_cases: int = 200, seed: int = 0, inject_perturbation: bool = False) -> list[Check]:
    """Run every identity on ``n_cases`` random consistent matrices of order 2..8.

    ``inject_perturbation`` multiplies one off-diagonal pair by (1.5, 1/1.5) in
    every matrix; the identity checks are then expected to fail.
    """
    rng = np.random.default_rng(seed)
    worst = {k: 0.0 for k in ("rank", "lambda", "power", "sinh", "trace", "perm", "charpoly", "cdeg")}
    for _ in range(n_cases):
        n = int(rng.integers(2, 9))
        a = random_consistent(rng, n)
        if inject_perturbation:
            a = perturb_pair(a, 0, 1, 1.5)
        e = a.entries
        s = np.linalg.svd(e, compute_uv=False)
        worst["rank"] = max(worst["rank"], s[1] / s[0])
        worst["lambda"] = max(worst["lambda"], abs(rpcm.perron_eigenvalue(a).lambda_max - n))
        res = rpcm.identity_residuals(a, 2)
        worst["power"] = max(worst["power"], np.linalg.norm(e @ e - n * e) / np.linalg.norm(e))
        worst["sinh"] = max(worst["sinh"], res["sinh_residual"])
        worst["trace"] = max(worst["trace"], res["trace_residual_rel"])
        worst["perm"] = max(worst["perm"], abs(rpcm.permanent(a) / math.factorial(n) - 1))
        worst["charpoly"] = max(worst["charpoly"], max(res["charpoly_residuals"], default=0.0))
        worst["cdeg"] = max(worst["cdeg"], 1.0 - rpcm.consistency_degree(a))

    def row(name, key, tol):
        return Check(name, worst[key] <= tol, f"max deviation {worst[key]:.3e} (tol {tol:g})")

    checks = [
        row("rank property: sigma2/sigma1", "rank", 1e-10),
        row("Perron-Frobenius eigenvalue = N", "lambda", 1e-8),
        row("scaled self-similarity: A^2 = N A", "power", 1e-8),
        row("fractal property: sinh(A) = sinh(N)/N A", "sinh", 1e-8),
        row("trace of sinh(A) = sinh(N)", "trace", 1e-6),
        row("matrix permanent = N!", "perm", 1e-8),
        row("characteristic polynomial lambda^N - N lambda^(N-1)", "charpoly", 1e-8),
        row("consistency degree = 1", "cdeg", 0.0),
    ]

    increases = 0
    for _ in range(100):
        n = int(rng.integers(3, 9))
        a = random_consistent(rng, n)
        i, j = rng.choice(n, size=2, replace=False)
        c = float(np.exp(rng.choice([-1.0, 1.0]) * rng.uniform(0.05, 1.0)))
        lam = rpcm.perron_eigenvalue(perturb_pair(a, i, j, c)).lambda_max
        increases += lam > n and rpcm.inconsistency(lam, n) > 0
    checks.append(Check("perturbation raises lambda_max above N", increases == 100, f"{increases}/100"))

    for triplet, expected in CONDITION_EXAMPLE:
        got = rpcm.condition_number(rpcm.triplet_matrix(*triplet), 3.0)
        ok = abs(got - expected) <= CONDITION_RTOL * expected
        checks.append(Check(f"condition number {triplet}", ok, f"{got:.4f} vs {expected:.3f}"))
    return checks


def format_table(checks: list[Check]) -> str:
    width = max(len(c.name) for c in checks)
    lines = [f"{'check':<{width}}  result  detail"]
    for c in checks:
        lines.append(f"{c.name:<{width}}  {'PASS' if c.passed else 'FAIL':<6}  {c.detail}")
    return "\n".join(lines)

"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line (visible in ``pytest -v``
output and when this file is run as a script) and then asserts.
"""

import itertools
import math
import sys
import tempfile
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

from fcix import cli, dynamics, entropy, fracts, rpcm, rpct, segment, verify
from fcix.config import build_config

REFERENCE_PARAMS = dynamics.SystemParams(alpha=0.005, beta=0.022, gamma=0.678, delta=1.671, theta=0.160)


def report(number: int, title: str, passed: bool, detail: str, capsys=None) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {title} | {detail}"
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)
    assert passed, line


def criterion_1():
    t0 = time.perf_counter()
    checks = verify.identity_suite(n_cases=200, seed=1)
    elapsed = time.perf_counter() - t0
    wanted = ("rank property", "Perron-Frobenius", "scaled self-similarity", "trace of sinh",
              "matrix permanent", "consistency degree")
    rows = [c for c in checks if c.name.startswith(wanted)]
    ok = len(rows) == len(wanted) and all(c.passed for c in rows) and elapsed < 10
    failed = [c.name for c in rows if not c.passed]
    return ok, f"{len(rows)} identities over 200 matrices, failed={failed}, {elapsed:.2f}s (limit 10s)"


def criterion_2():
    got = []
    ok = True
    for triplet, expected in verify.CONDITION_EXAMPLE:
        k = rpcm.condition_number(rpcm.triplet_matrix(*triplet), 3.0)
        got.append(f"{k:.4f}")
        ok &= abs(k - expected) <= 0.005 * expected
    return ok, "K = " + ", ".join(got) + " (targets 1.000, 1.000, 1.015, 2.030, 417.709; +-0.5%)"


def criterion_3():
    rng = np.random.default_rng(3)
    good = 0
    for _ in range(100):
        n = int(rng.integers(3, 9))
        a = verify.random_consistent(rng, n)
        i, j = rng.choice(n, size=2, replace=False)
        c = float(np.exp(rng.choice([-1.0, 1.0]) * rng.uniform(0.05, 1.0)))
        lam = rpcm.perron_eigenvalue(verify.perturb_pair(a, i, j, c)).lambda_max
        good += lam > n and rpcm.inconsistency(lam, n) > 0
    return good == 100, f"{good}/100 perturbations raise lambda_max above N with psi > 0"


def criterion_4():
    rng = np.random.default_rng(4)
    worst_err = worst_eig = 0.0
    monotone = True
    for _ in range(20):
        n, t = int(rng.integers(2, 11)), int(rng.integers(1, 51))
        x, y = rng.uniform(0.2, 3.0, n), rng.uniform(0.2, 3.0, n)
        z = rng.uniform(0.1, 5.0, t)
        tensor = rpct.ComparisonTensor(z[:, None, None] * np.outer(x, y)[None])
        f = rpct.consensus_decompose(tensor, seed=int(rng.integers(1 << 30)))
        worst_err = max(worst_err, f.rel_error)
        hist = np.asarray(f.objective_history)
        monotone &= bool(np.all(np.diff(hist) <= 1e-12 * max(hist[0], 1e-300)))
        for k in range(t):
            analytic = f.z[k] * float(f.y @ f.x)
            power = rpcm.perron_eigenvalue(f.z[k] * np.outer(f.x, f.y)).lambda_max
            worst_eig = max(worst_eig, abs(analytic - power) / max(1.0, analytic))
    # also on noisy tensors, where the objective path is nontrivial
    for s in range(5):
        returns = np.exp(np.random.default_rng(40 + s).normal(0, 0.05, (40, 8)))
        tensor = rpct.build_rpct(rpct.ReturnsPanel(1, [str(i) for i in range(40)],
                                                   [str(i) for i in range(8)], returns))
        hist = np.asarray(rpct.consensus_decompose(tensor).objective_history)
        monotone &= bool(np.all(np.diff(hist) <= 1e-12 * hist[0]))
    ok = worst_err <= 1e-8 and monotone and worst_eig <= 1e-10
    return ok, (f"max rel_error {worst_err:.2e} (<=1e-8), objective monotone={monotone}, "
                f"max eigenvalue gap {worst_eig:.2e} (<=1e-10)")


def _direct_cost(x, a, b, gamma):
    seg = x[a:b]
    d = seg[:, None] - seg[None, :]
    return (b - a) - float(np.exp(-gamma * d * d).sum()) / (b - a)


def _exhaustive(x, k, gamma, min_size):
    n = len(x)
    cache = {}

    def cost(a, b):
        if (a, b) not in cache:
            cache[a, b] = _direct_cost(x, a, b, gamma)
        return cache[a, b]

    best = None
    for cps in itertools.combinations(range(1, n), k):
        bounds = (0, *cps, n)
        if min(e - s for s, e in zip(bounds, bounds[1:])) < min_size:
            continue
        total = sum(cost(s, e) for s, e in zip(bounds, bounds[1:]))
        if best is None or total < best[0] - 1e-12:
            best = (total, cps)
    return best


def criterion_5():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    matches = 0
    for _ in range(100):
        n, k = int(rng.integers(8, 31)), int(rng.integers(1, 4))
        x = rng.normal(size=n) + np.repeat(rng.normal(0, 2, 4), -(-n // 4))[:n]
        gamma = segment.median_bandwidth(x)
        res = segment.detect_changepoints(x, k, gamma)
        matches += res.changepoints == _exhaustive(x, k, gamma, 2)[1]
    recovered = 0
    for s in range(20):
        g = np.random.default_rng(500 + s)
        shift = int(g.integers(40, 160))
        x = np.r_[g.normal(0, 1, shift), g.normal(3, 1, 200 - shift)]
        recovered += abs(segment.detect_changepoints(x, 1).changepoints[0] - shift) <= 2
    elapsed = time.perf_counter() - t0
    ok = matches == 100 and recovered == 20 and elapsed < 60
    return ok, (f"DP = exhaustive on {matches}/100 series, two-regime shift within +-2 "
                f"in {recovered}/20, {elapsed:.1f}s (limit 60s)")


def criterion_6():
    rng = np.random.default_rng(6)
    const = entropy.apen_relative(np.full(300, 2.5))
    x = rng.normal(size=400)
    invariance = max(abs(entropy.apen_relative(a * x + b) - entropy.apen_relative(x))
                     for a, b in ((3.0, 1.0), (0.01, -50.0), (250.0, 7.0)))
    copy = np.zeros((2, 2, 2))
    for zp in range(2):
        for vp in range(2):
            copy[vp, zp, vp] = 0.25
    te_copy = entropy.transfer_entropy_pmf(copy)
    prod = np.einsum("i,j,k->ijk", rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3)),
                     rng.dirichlet(np.ones(3)))
    te_prod = entropy.transfer_entropy_pmf(prod)
    wins = 0
    for s in range(50):
        g = np.random.default_rng(600 + s)
        v = np.zeros(2000)
        e = g.normal(size=2000)
        for t in range(1, 2000):
            v[t] = 0.5 * v[t - 1] + e[t]
        z = np.r_[0.0, 0.7 * v[:-1]] + g.normal(0, 0.5, 2000)
        wins += entropy.transfer_entropy(v, z) > entropy.transfer_entropy(z, v)
    ok = (const == 0 and invariance <= 1e-12 and abs(te_copy - math.log(2)) <= 1e-9
          and abs(te_prod) <= 1e-12 and wins >= 48)
    return ok, (f"ApEn(const)={const}, invariance gap {invariance:.1e}, TE(copy)-log2="
                f"{te_copy - math.log(2):.1e}, TE(product)={te_prod:.1e}, direction {wins}/50")


def criterion_7():
    t0 = time.perf_counter()
    parts = []
    ok = True
    for d, tol in ((0.0, 0.1), (0.4, 0.1), (1.0, 0.15)):
        est = []
        for s in range(50):
            rng = np.random.default_rng(7000 + s)
            if d == 1.0:
                x = np.cumsum(rng.standard_normal(4096))
            else:
                x = fracts.simulate_fractional_noise(d, 4096, rng)
            est.append(fracts.local_whittle(x))
        med = float(np.median([e.d_hat for e in est]))
        ok &= abs(med - d) <= tol
        if d == 1.0:
            ok &= all(e.differenced for e in est)
        parts.append(f"d={d}: median {med:.3f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 120
    return ok, ", ".join(parts) + f", {elapsed:.1f}s (limit 120s)"


def criterion_8():
    rng = np.random.default_rng(8)
    worst = 0.0
    exact0 = True
    for _ in range(10):
        a = rng.uniform(-0.5, 0.5, (2, 2))
        a *= 0.9 / max(1.0, np.max(np.abs(np.linalg.eigvals(a))))
        l = np.tril(rng.uniform(0.2, 1.0, (2, 2)))
        model = fracts.var_from_params(a, l @ l.T)
        irf = fracts.orth_irf(model, 20)
        exact0 &= bool(np.array_equal(irf.responses[0], model.chol))
        for h in range(21):
            worst = max(worst, float(np.max(np.abs(irf.responses[h] - np.linalg.matrix_power(a, h) @ model.chol))))
    return worst <= 1e-10 and exact0, f"max |Theta_h - A^h P| = {worst:.1e} (<=1e-10), Theta_0 == P: {exact0}"


def criterion_9():
    pts = dynamics.critical_points(REFERENCE_PARAMS)
    interior = pts[0]
    f_ok = round(interior.F, 3) == 0.006
    # the reference V of 75.954 is 75.9545... cut, not rounded, to three decimals
    v_ok = math.floor(interior.V * 1000) / 1000 == 75.954
    residual = max(float(np.max(np.abs(dynamics.rhs(REFERENCE_PARAMS, (p.F, p.V))))) for p in pts)
    rng = np.random.default_rng(9)
    fd_gap = 0.0
    h = 1e-6
    for _ in range(20):
        pt = rng.uniform(-100, 100, 2)
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            col = (dynamics.rhs(REFERENCE_PARAMS, pt + e) - dynamics.rhs(REFERENCE_PARAMS, pt - e)) / (2 * h)
            fd_gap = max(fd_gap, float(np.max(np.abs(col - dynamics.jacobian(REFERENCE_PARAMS, pt)[:, j]))))
    ok = f_ok and v_ok and interior.dim_unstable == 2 and residual <= 1e-12 and fd_gap <= 1e-6
    return ok, (f"interior ({interior.F:.6f}, {interior.V:.6f}), dim_unstable={interior.dim_unstable}, "
                f"max |rhs| {residual:.1e}, finite-difference gap {fd_gap:.1e}")


def criterion_10():
    with tempfile.TemporaryDirectory() as tmp:
        outs = []
        t0 = time.perf_counter()
        for name in ("a", "b"):
            config = build_config({"input": str(cli.fixture_path()), "output": str(Path(tmp) / name)})
            manifest = cli.cmd_fcix(config)
            outs.append({a["file"]: (Path(tmp) / name / a["file"]).read_bytes() for a in manifest["artifacts"]})
        elapsed = (time.perf_counter() - t0) / 2
        identical = outs[0] == outs[1] and len(outs[0]) > 0
    ok = identical and elapsed < 30
    return ok, f"{len(outs[0])} artifacts byte-identical={identical}, {elapsed:.2f}s per run (limit 30s)"


CRITERIA = [
    (1, "comparison-matrix identity suite", criterion_1),
    (2, "condition-number example values", criterion_2),
    (3, "perturbation monotonicity", criterion_3),
    (4, "consensus decomposition", criterion_4),
    (5, "segmentation oracle", criterion_5),
    (6, "entropy suite", criterion_6),
    (7, "local Whittle recovery", criterion_7),
    (8, "impulse-response oracle", criterion_8),
    (9, "information-flow dynamics", criterion_9),
    (10, "pipeline determinism", criterion_10),
]


@pytest.mark.parametrize("number,title,check", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(number, title, check, capsys):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        passed, detail = check()
    report(number, title, passed, detail, capsys)


if __name__ == "__main__":
    failed = 0
    for number, title, check in CRITERIA:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                report(number, title, *check())
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)

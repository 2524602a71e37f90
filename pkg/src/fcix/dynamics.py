"""Critical points and stability of the coupled information-flow system

    dF/dt = (gamma + theta) F^2 - alpha F
    dV/dt = beta V^2 - delta V

where alpha, beta are the cross transfer entropies, gamma, delta the self
entropies and theta the approximate entropy of the cross impulse response.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import Blowup, DegenerateParameters

CENTER_TOL = 1e-12
BLOWUP_LIMIT = 1e12


@dataclass(frozen=True)
class SystemParams:
    alpha: float  # transfer F -> V
    beta: float  # transfer V -> F
    gamma: float  # self entropy of F
    delta: float  # self entropy of V
    theta: float  # ApEn of the F response to a V impulse

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta", "theta"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise DegenerateParameters(f"{name} must be a finite nonnegative number, got {v}")
        if self.beta == 0 or self.gamma + self.theta == 0:
            raise DegenerateParameters("beta and gamma + theta must be nonzero")


@dataclass(frozen=True)
class CriticalPoint:
    F: float
    V: float
    jacobian_eigenvalues: tuple[complex, complex]
    dim_stable: int
    dim_unstable: int
    dim_center: int
    classification: str
    practical: bool = True

    def to_dict(self) -> dict:
        d = asdict(self)
        d["jacobian_eigenvalues"] = [[z.real, z.imag] for z in self.jacobian_eigenvalues]
        return d


def rhs(p: SystemParams, state) -> NDArray[np.float64]:
    f, v = state
    return np.array([(p.gamma + p.theta) * f * f - p.alpha * f, p.beta * v * v - p.delta * v])


def jacobian(p: SystemParams, at, *, form: str = "exact") -> NDArray[np.float64]:
    """Jacobian of the right-hand side at ``at = (F, V)``.

    ``form="exact"`` gives the true (diagonal) derivative. ``form="printed"``
    adds ``theta`` to both off-diagonal entries. That variant is kept only for
    comparison and is not the derivative of the system.
    """
    f, v = at
    jac = np.array([[2 * (p.gamma + p.theta) * f - p.alpha, 0.0], [0.0, 2 * p.beta * v - p.delta]])
    if form == "printed":
        jac[0, 1] = jac[1, 0] = p.theta
    elif form != "exact":
        raise ValueError(f"unknown Jacobian form {form!r}")
    return jac


def eigenvalues_2x2(jac) -> tuple[complex, complex]:
    (a, b), (c, d) = jac
    tr, det = a + d, a * d - b * c
    disc = tr * tr / 4 - det
    if b == 0 or c == 0:
        # triangular: read the diagonal exactly
        return complex(a), complex(d)
    root = math.sqrt(disc) if disc >= 0 else 1j * math.sqrt(-disc)
    return complex(tr / 2 + root), complex(tr / 2 - root)


def classify(point, jac, *, practical: bool = True) -> CriticalPoint:
    eig = eigenvalues_2x2(jac)
    re = [z.real for z in eig]
    stable = sum(r < -CENTER_TOL for r in re)
    unstable = sum(r > CENTER_TOL for r in re)
    center = 2 - stable - unstable
    if center == 0:
        label = "source" if unstable == 2 else "sink" if stable == 2 else "saddle"
    elif center == 2 and all(abs(z.imag) > CENTER_TOL for z in eig):
        label = "center"
    else:
        label = "degenerate"
    return CriticalPoint(float(point[0]), float(point[1]), eig, stable, unstable, center, label, practical)


def critical_points(p: SystemParams, *, form: str = "exact") -> list[CriticalPoint]:
    """Interior point first, then (0, 0), (F1, 0), (0, V1).

    Points with a zero coordinate are classified too but flagged as not practical.
    """
    f1 = p.alpha / (p.gamma + p.theta)
    v1 = p.delta / p.beta
    out = []
    for pt in [(f1, v1), (0.0, 0.0), (f1, 0.0), (0.0, v1)]:
        practical = pt[0] != 0 and pt[1] != 0
        out.append(classify(pt, jacobian(p, pt, form=form), practical=practical))
    return out


def trajectory(p: SystemParams, start, dt: float, steps: int) -> NDArray[np.float64]:
    """Classical RK4 path of ``steps + 1`` states.

    Raises :class:`Blowup` (carrying the partial path) once any coordinate
    exceeds 1e12 in magnitude.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    path = np.empty((steps + 1, 2))
    s = np.asarray(start, dtype=float)
    path[0] = s
    for i in range(1, steps + 1):
        k1 = rhs(p, s)
        k2 = rhs(p, s + 0.5 * dt * k1)
        k3 = rhs(p, s + 0.5 * dt * k2)
        k4 = rhs(p, s + dt * k3)
        s = s + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(s)) or np.max(np.abs(s)) > BLOWUP_LIMIT:
            raise Blowup(f"trajectory left |state| <= {BLOWUP_LIMIT:g} at step {i}", path[:i])
        path[i] = s
    return path


def flow_edges(p: SystemParams, first: str = "FCIX", second: str = "VIX") -> list[dict]:
    """Labeled edges of the information-flow diagram."""
    return [
        {"from": first, "to": second, "label": "alpha", "value": p.alpha},
        {"from": second, "to": first, "label": "beta", "value": p.beta},
        {"from": first, "to": first, "label": "gamma", "value": p.gamma},
        {"from": second, "to": second, "label": "delta", "value": p.delta},
        {"from": "IRF", "to": first, "label": "theta", "value": p.theta},
    ]

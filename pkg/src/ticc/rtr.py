"""Riemannian trust-region minimization over products of U(4) manifolds.

The trust-region subproblem is solved with truncated conjugate gradients;
Hessian-vector products default to finite differences of the Riemannian
gradient; the retraction is polar (SVD-based). Termination follows the
loss-variance rule: stop once the variance of the trailing accepted losses
falls below the configured threshold.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_FD_STEP = 1e-5


def skew(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a - a.conj().T)


def project(gates: list[np.ndarray], ambient: list[np.ndarray]) -> list[np.ndarray]:
    """Tangent projection at V: V * skew(V^dag G)."""
    return [v @ skew(v.conj().T @ g) for v, g in zip(gates, ambient)]


def retract(gates: list[np.ndarray], tangent: list[np.ndarray]) -> list[np.ndarray]:
    """Polar retraction: the unitary factor of V + xi."""
    out = []
    for v, x in zip(gates, tangent):
        u, _, vh = np.linalg.svd(v + x)
        out.append(u @ vh)
    return out


def inner(a: list[np.ndarray], b: list[np.ndarray]) -> float:
    return float(sum(np.real(np.vdot(x, y)) for x, y in zip(a, b)))


def tangent_norm(a: list[np.ndarray]) -> float:
    return float(np.sqrt(max(inner(a, a), 0.0)))


def random_tangent(gates: list[np.ndarray], rng: np.random.Generator) -> list[np.ndarray]:
    ambient = [rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)) for _ in gates]
    return project(gates, ambient)


@dataclass
class RtrConfig:
    rho_accept: float = 0.125
    delta0: float = 0.01
    delta_max: float = 0.1
    convergence_threshold: float = 0.001  # variance of trailing accepted losses
    convergence_window: int = 5
    max_iters: int = 300
    grad_tol: float = 1e-9
    target_epsilon: float | None = None   # optional early stop on spectral distance
    epsilon_check_every: int = 10
    max_inner: int = 40

    def __post_init__(self):
        if not 0 < self.delta0 <= self.delta_max:
            raise ValueError("need 0 < delta0 <= delta_max")
        if not 0 < self.rho_accept < 1:
            raise ValueError("rho_accept must be in (0, 1)")


@dataclass
class CostReport:
    losses: list[float] = field(default_factory=list)
    grad_norms: list[float] = field(default_factory=list)
    accepted: int = 0
    rejected: int = 0
    converged: bool = False
    reason: str = ""
    epsilon: float | None = None
    branch_epsilons: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "final_loss": self.losses[-1] if self.losses else None,
            "iterations": self.accepted + self.rejected,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "converged": self.converged,
            "reason": self.reason,
            "epsilon": self.epsilon,
            "branch_epsilons": dict(self.branch_epsilons),
        }


def riemannian_gradient(cost, gates: list[np.ndarray]) -> list[np.ndarray]:
    """Projected environment-contraction gradient of a TraceCost."""
    return project(gates, cost.euclidean_gradients(gates))


def make_fd_hvp(grad_fn, base_grad_cache=None):
    """Hessian-vector operator from finite differences of the gradient."""

    def hvp(gates, xi, base_grad):
        norm = tangent_norm(xi)
        if norm < 1e-300:
            return [np.zeros_like(x) for x in xi]
        step = _FD_STEP
        unit = [x / norm for x in xi]
        moved = retract(gates, [step * u for u in unit])
        grad_moved = grad_fn(moved)
        pulled = project(gates, grad_moved)
        return [(gm - g0) * (norm / step) for gm, g0 in zip(pulled, base_grad)]

    return hvp


def _truncated_cg(gates, grad, hvp_fn, delta, max_inner, base_grad,
                  kappa=0.1, theta=1.0):
    """Steihaug-Toint truncated CG for the trust-region subproblem."""
    eta = [np.zeros_like(g) for g in grad]
    r = [g.copy() for g in grad]
    p = [-g for g in grad]
    r_norm0 = tangent_norm(r)
    if r_norm0 == 0:
        return eta, 0.0, False
    tol = r_norm0 * min(kappa, r_norm0 ** theta)
    model_value = 0.0
    hit_boundary = False
    for _ in range(max_inner):
        hp = hvp_fn(gates, p, base_grad)
        curv = inner(p, hp)
        p_norm2 = inner(p, p)
        eta_norm2 = inner(eta, eta)
        eta_dot_p = inner(eta, p)
        if curv <= 0:
            # negative curvature: follow p to the boundary
            a = p_norm2
            b = 2 * eta_dot_p
            c = eta_norm2 - delta ** 2
            tau = (-b + np.sqrt(max(b * b - 4 * a * c, 0.0))) / (2 * a)
            eta = [e + tau * q for e, q in zip(eta, p)]
            hit_boundary = True
            break
        alpha = inner(r, r) / curv
        new_norm2 = eta_norm2 + 2 * alpha * eta_dot_p + alpha ** 2 * p_norm2
        if new_norm2 >= delta ** 2:
            a = p_norm2
            b = 2 * eta_dot_p
            c = eta_norm2 - delta ** 2
            tau = (-b + np.sqrt(max(b * b - 4 * a * c, 0.0))) / (2 * a)
            eta = [e + tau * q for e, q in zip(eta, p)]
            hit_boundary = True
            break
        eta = [e + alpha * q for e, q in zip(eta, p)]
        r_new = [x + alpha * y for x, y in zip(r, hp)]
        if tangent_norm(r_new) <= tol:
            r = r_new
            break
        beta = inner(r_new, r_new) / inner(r, r)
        p = [-x + beta * q for x, q in zip(r_new, p)]
        r = r_new
    h_eta = hvp_fn(gates, eta, base_grad)
    predicted = -(inner(grad, eta) + 0.5 * inner(eta, h_eta))
    return eta, predicted, hit_boundary


def rtr_minimize(cost_fn, grad_fn, hvp_fn, init_gates: list[np.ndarray],
                 config: RtrConfig | None = None, epsilon_fn=None) -> tuple[list[np.ndarray], CostReport]:
    """Trust-region minimization; returns optimized gates and the run report.

    ``cost_fn(gates) -> float``; ``grad_fn(gates) -> tangent``;
    ``hvp_fn(gates, xi, base_grad) -> tangent`` or None for the default
    finite-difference operator; ``epsilon_fn(gates) -> float | dict`` is
    consulted for target-epsilon stopping and the final report.
    """
    config = config or RtrConfig()
    if hvp_fn is None:
        hvp_fn = make_fd_hvp(grad_fn)
    gates = [np.array(g, dtype=complex) for g in init_gates]
    report = CostReport()
    delta = config.delta0
    f = cost_fn(gates)
    if not np.isfinite(f):
        raise ValueError("non-finite initial loss")
    report.losses.append(f)

    def finish(reason):
        report.reason = reason
        if epsilon_fn is not None:
            eps = epsilon_fn(gates)
            if isinstance(eps, dict):
                report.branch_epsilons = eps
                report.epsilon = max(eps.values())
            else:
                report.epsilon = float(eps)
        return gates, report

    for iteration in range(config.max_iters):
        grad = grad_fn(gates)
        gnorm = tangent_norm(grad)
        report.grad_norms.append(gnorm)
        if gnorm <= config.grad_tol:
            report.converged = True
            return finish("gradient norm below tolerance")
        eta, predicted, hit_boundary = _truncated_cg(
            gates, grad, hvp_fn, delta, config.max_inner, grad
        )
        if predicted <= 1e-15 * max(1.0, abs(f)):
            report.converged = True
            return finish("no further model decrease (stationary)")
        candidate = retract(gates, eta)
        f_new = cost_fn(candidate)
        if not np.isfinite(f_new):
            raise ValueError("non-finite loss during optimization")
        rho = (f - f_new) / predicted
        if rho < 0.25:
            delta = delta / 4
        elif rho > 0.75 and hit_boundary:
            delta = min(2 * delta, config.delta_max)
        if rho > config.rho_accept and f_new < f:
            gates = candidate
            f = f_new
            report.accepted += 1
            report.losses.append(f)
            window = report.losses[-config.convergence_window:]
            if len(window) == config.convergence_window and np.var(window) < config.convergence_threshold:
                report.converged = True
                return finish("loss variance below threshold")
            if (config.target_epsilon is not None and epsilon_fn is not None
                    and report.accepted % config.epsilon_check_every == 0):
                eps = epsilon_fn(gates)
                eps_val = max(eps.values()) if isinstance(eps, dict) else float(eps)
                if eps_val <= config.target_epsilon:
                    report.converged = True
                    return finish("target epsilon reached")
        else:
            report.rejected += 1
        if delta < 1e-13:
            return finish("trust region collapsed")
    return finish("max iterations reached")

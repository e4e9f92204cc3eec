"""Projected gradient solver for box plus slab constrained convex QPs.

Minimizes ``f(theta) = theta' P theta - q' theta`` subject to
``0 <= theta <= B`` and ``1 - eps <= xi' theta <= 1 + eps``. The feasible set
has a cheap exact Euclidean projection, so the workhorse is projected gradient
with a Lipschitz step (optionally accelerated), finished by an active-set
refinement on the face it identifies.
"""
from __future__ import annotations

import csv
import enum
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import GkmmProblem, Solution, Status
from .errors import DimensionMismatch, InfeasibleProblem

logger = logging.getLogger(__name__)

RIDGE_FACTOR = 1e-8


class StepRule(str, enum.Enum):
    FIXED_LIPSCHITZ = "FixedLipschitz"
    BACKTRACKING = "BacktrackingLineSearch"


@dataclass(frozen=True)
class SolverSettings:
    max_iterations: int = 20000
    tol_primal: float = 1e-7
    tol_dual: float = 1e-7
    step_rule: StepRule = StepRule.FIXED_LIPSCHITZ
    accelerate: bool = True
    refine: bool = True
    trace: bool = False

    def __post_init__(self):
        object.__setattr__(self, "step_rule", StepRule(self.step_rule))
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not (self.tol_primal > 0 and self.tol_dual > 0):
            raise ValueError("tolerances must be positive")


class FeasibleSet:
    """Intersection of the box ``[0, B]^b`` with the slab ``lo <= xi' theta <= hi``."""

    def __init__(self, xi, bound, eps):
        self.xi = np.asarray(xi, dtype=float)
        self.upper = float(bound)
        self.lo = 1.0 - float(eps)
        self.hi = 1.0 + float(eps)
        if not self.upper > 0:
            raise ValueError(f"bound must be positive, got {bound}")
        # range of xi' theta over the box
        top = self.upper * np.clip(self.xi, 0, None).sum()
        bottom = self.upper * np.clip(self.xi, None, 0).sum()
        if top < self.lo or bottom > self.hi or self.lo > self.hi:
            raise InfeasibleProblem(
                f"slab [{self.lo:.6g}, {self.hi:.6g}] does not meet the box image [{bottom:.6g}, {top:.6g}]")

    def _clip(self, theta):
        return np.clip(theta, 0.0, self.upper)

    def contains(self, theta, tol=0.0) -> bool:
        s = self.xi @ theta
        return bool(np.all(theta >= -tol) and np.all(theta <= self.upper + tol)
                    and self.lo - tol <= s <= self.hi + tol)

    def project(self, theta) -> np.ndarray:
        """Exact Euclidean projection.

        The projection is ``clip(theta - mu * xi)`` for the slab multiplier
        ``mu``; ``mu -> xi' clip(theta - mu xi)`` is non-increasing and
        piecewise linear, so ``mu`` is found by bisection over its sorted
        breakpoints followed by linear interpolation on the bracketing piece.
        """
        theta = np.asarray(theta, dtype=float)
        z = self._clip(theta)
        s = self.xi @ z
        if self.lo <= s <= self.hi:
            return z
        target = self.hi if s > self.hi else self.lo
        nz = self.xi != 0
        if not np.any(nz):
            raise InfeasibleProblem("slab normal is zero")
        xn, tn = self.xi[nz], theta[nz]
        bps = np.unique(np.concatenate([tn / xn, (tn - self.upper) / xn]))

        def g(mu):
            return self.xi @ self._clip(theta - mu * self.xi)

        # g(bps[lo_i]) >= target >= g(bps[hi_i])
        lo_i, hi_i = 0, bps.size - 1
        g_lo, g_hi = g(bps[lo_i]), g(bps[hi_i])
        if target >= g_lo:
            return self._clip(theta - bps[lo_i] * self.xi)
        if target <= g_hi:
            return self._clip(theta - bps[hi_i] * self.xi)
        while hi_i - lo_i > 1:
            mid = (lo_i + hi_i) // 2
            g_mid = g(bps[mid])
            if g_mid >= target:
                lo_i, g_lo = mid, g_mid
            else:
                hi_i, g_hi = mid, g_mid
        a, c = bps[lo_i], bps[hi_i]
        mu = a if g_lo == g_hi else a + (g_lo - target) / (g_lo - g_hi) * (c - a)
        return self._clip(theta - mu * self.xi)


def project(theta, feasible: FeasibleSet) -> np.ndarray:
    return feasible.project(theta)


def lipschitz_estimate(M, iterations=1000, rtol=1e-10) -> float:
    """Largest eigenvalue of a PSD matrix by power iteration, inflated by 1%."""
    n = M.shape[0]
    v = np.full(n, 1.0 / np.sqrt(n))
    lam = 0.0
    for _ in range(iterations):
        w = M @ v
        new = float(v @ w)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(new - lam) <= rtol * abs(new):
            lam = new
            break
        lam = new
    return 1.01 * lam


def ridge_of(P) -> float:
    b = P.shape[0]
    return RIDGE_FACTOR * max(float(np.trace(P)), 0.0) / b


REFINE_AFTER = 3


def _active_signature(theta, feasible: FeasibleSet) -> bytes:
    state = np.zeros(theta.shape[0], dtype=np.int8)
    state[theta == 0.0] = 1
    state[theta == feasible.upper] = 2
    return state.tobytes() + bytes([_slab_state(theta, feasible)])


def _slab_state(theta, feasible: FeasibleSet) -> int:
    """0 when the slab is slack, 1 on its lower face, 2 on its upper face."""
    s = feasible.xi @ theta
    tol = 1e-10 * max(1.0, abs(feasible.hi))
    if abs(s - feasible.hi) <= tol:
        return 2
    if abs(s - feasible.lo) <= tol:
        return 1
    return 0


def _face_minimizer(Pr, q, feasible: FeasibleSet, free, at_hi, slab):
    """Minimizer of ``f`` on the affine hull of a face and the slab multiplier.

    Returns ``(None, 0)`` when the reduced KKT system is singular.
    """
    z = np.where(at_hi, feasible.upper, 0.0)
    rhs = q[free] - 2.0 * feasible.upper * Pr[np.ix_(free, at_hi)].sum(axis=1)
    M = 2.0 * Pr[np.ix_(free, free)]
    nu = 0.0
    try:
        if slab:
            target = feasible.hi if slab == 2 else feasible.lo
            xf = feasible.xi[free]
            K = np.block([[M, xf[:, None]], [xf[None, :], np.zeros((1, 1))]])
            r = np.append(rhs, target - feasible.upper * feasible.xi[at_hi].sum())
            sol = scipy.linalg.solve(K, r, assume_a="sym")
            z[free], nu = sol[:-1], float(sol[-1])
        else:
            z[free] = scipy.linalg.solve(M, rhs, assume_a="pos")
    except (np.linalg.LinAlgError, ValueError):
        return None, 0.0
    if not (np.all(np.isfinite(z)) and np.isfinite(nu)):
        return None, 0.0
    return z, nu


def _refine(Pr, q, feasible: FeasibleSet, theta, max_steps, tol):
    """Primal active-set iterations warm-started at ``theta``.

    Moves towards the minimizer of the current face, adding the first
    blocking constraint; at a face minimizer the multiplier signs are checked
    and the worst violated bound is released. ``f`` never increases and every
    point stays feasible.

    Returns ``(theta, violation)``; ``violation`` is the largest multiplier
    sign violation at the final face minimizer, or ``None`` when the walk
    ended elsewhere.
    """
    theta = theta.copy()
    B = feasible.upper
    state = np.zeros(theta.shape[0], dtype=np.int8)
    state[theta == 0.0] = 1
    state[theta == B] = 2
    slab = _slab_state(theta, feasible)
    xi_scale = float(np.max(np.abs(feasible.xi)))
    for _ in range(max_steps):
        free = state == 0
        at_hi = state == 2
        if slab and not np.any(feasible.xi[free] != 0):
            slab = 0
        z, nu = _face_minimizer(Pr, q, feasible, free, at_hi, slab)
        if z is None:
            return theta, None
        d = z - theta
        step, kind, block = 1.0, None, None
        idx = np.flatnonzero(free)
        df, tf = d[idx], theta[idx]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(df < 0, -tf / df, np.where(df > 0, (B - tf) / df, np.inf))
        if ratio.size and ratio.min() < 1.0:
            k = int(np.argmin(ratio))
            step, kind, block = max(float(ratio[k]), 0.0), ("lo" if df[k] < 0 else "hi"), idx[k]
        if not slab:
            s, ds = feasible.xi @ theta, feasible.xi @ d
            if ds > 0 and (feasible.hi - s) / ds < step:
                step, kind = max((feasible.hi - s) / ds, 0.0), "slab_hi"
            elif ds < 0 and (feasible.lo - s) / ds < step:
                step, kind = max((feasible.lo - s) / ds, 0.0), "slab_lo"
        if kind is not None:
            theta = np.clip(theta + step * d, 0.0, B)
            if kind == "lo":
                theta[block], state[block] = 0.0, 1
            elif kind == "hi":
                theta[block], state[block] = B, 2
            else:
                slab = 2 if kind == "slab_hi" else 1
            continue

        theta = np.clip(z, 0.0, B)
        g = 2.0 * (Pr @ theta) - q + nu * feasible.xi
        viol = np.zeros(theta.shape[0])
        viol[state == 1] = -g[state == 1]
        viol[state == 2] = g[state == 2]
        k = int(np.argmax(viol))
        worst = float(viol[k])
        slab_viol = 0.0
        if slab == 2:
            slab_viol = -nu * xi_scale
        elif slab == 1:
            slab_viol = nu * xi_scale
        if max(worst, slab_viol) <= tol:
            return theta, max(worst, slab_viol, 0.0)
        if worst >= slab_viol:
            state[k] = 0
        else:
            slab = 0
    return theta, None


def solve_qp(P, q, xi, bound, eps, settings: SolverSettings | None = None) -> Solution:
    """Minimize ``theta' P theta - q' theta`` over box ``[0, bound]`` and the ``eps`` slab.

    ``P`` must be symmetric PSD; a ridge ``1e-8 * trace(P) / b`` is added
    before iterating. The reported objective uses ``P`` without the ridge.

    The main loop takes projected gradient steps with step ``1/L`` (with
    optional momentum, restarted whenever a step fails to decrease ``f``).
    Kernel problems are badly conditioned, so once the set of active bounds
    has settled the iterate is handed to a warm-started active-set refinement
    that lands on the exact face minimizer and checks the multipliers.

    ``primal_residual`` is the last step length and ``dual_residual`` the
    projected-gradient measure: the projected-gradient step length, or after
    a successful refinement the largest multiplier sign violation relative to
    ``max|q|``. Both are invariant under rescaling ``(P, q)``. Runs are
    deterministic given the inputs.
    """
    settings = settings or SolverSettings()
    P = np.asarray(P, dtype=float)
    q = np.asarray(q, dtype=float)
    b = q.shape[0]
    if P.shape != (b, b) or np.shape(xi) != (b,):
        raise DimensionMismatch(f"P {P.shape}, q {q.shape}, xi {np.shape(xi)} are inconsistent")
    feasible = FeasibleSet(xi, bound, eps)

    Pr = P + ridge_of(P) * np.eye(b)
    L = lipschitz_estimate(2.0 * Pr)
    if not L > 0:
        L = 1.0
    backtrack = settings.step_rule is StepRule.BACKTRACKING
    q_scale = float(np.max(np.abs(q))) if np.any(q) else 1.0
    kkt_tol = settings.tol_dual * q_scale

    diag = np.diag(Pr)
    start = np.where(diag > 0, np.clip(q, 0, None) / (2.0 * np.where(diag > 0, diag, 1.0)), 0.0)
    theta = feasible.project(start)
    P_theta = Pr @ theta
    f_theta = float(theta @ P_theta - q @ theta)
    y, P_y = theta, P_theta
    t = 1.0
    trace = []
    status = Status.MAX_ITER
    primal = dual = np.inf
    signature, stable = None, 0

    def pg_step(th, P_th):
        return float(np.max(np.abs(th - feasible.project(th - (2.0 * P_th - q) / L))))

    def log(it):
        # the traced objective includes the ridge: it is the function being descended
        if settings.trace:
            trace.append((it, f_theta, primal, dual))

    it = 0
    while it < settings.max_iterations:
        it += 1
        grad_y = 2.0 * P_y - q
        cand = feasible.project(y - grad_y / L)
        P_cand = Pr @ cand
        f_cand = float(cand @ P_cand - q @ cand)
        # rounding allowance on f, relative to the size of its two terms
        slack = 1e-12 * (abs(theta @ P_theta) + abs(q @ theta))
        if backtrack:
            f_y = float(y @ P_y - q @ y)
            d = cand - y
            if f_cand > f_y + grad_y @ d + 0.5 * L * (d @ d) + slack:
                L *= 2.0
                continue
        if f_cand > f_theta + slack:
            if y is not theta:
                # momentum overshoot: restart from the last accepted iterate
                y, P_y, t = theta, P_theta, 1.0
            else:
                L *= 2.0
            continue

        step = cand - theta
        primal = float(np.max(np.abs(step)))
        if settings.accelerate:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            beta = (t - 1.0) / t_next
            y = cand + beta * step
            P_y = P_cand + beta * (P_cand - P_theta)
            t = t_next
        theta, P_theta, f_theta = cand, P_cand, f_cand
        if not settings.accelerate:
            y, P_y = theta, P_theta
        if backtrack:
            L *= 0.9

        pg_done = primal <= settings.tol_primal and pg_step(theta, P_theta) <= settings.tol_dual
        dual = pg_step(theta, P_theta) if (settings.trace or pg_done) else dual
        log(it)

        sig = _active_signature(theta, feasible)
        stable = stable + 1 if sig == signature else 0
        signature = sig
        if settings.refine and (stable == REFINE_AFTER or pg_done):
            z, violation = _refine(Pr, q, feasible, theta, 2 * b + 10, kkt_tol)
            P_z = Pr @ z
            f_z = float(z @ P_z - q @ z)
            if f_z <= f_theta + slack:
                theta, P_theta, f_theta = z, P_z, f_z
                y, P_y, t = theta, P_theta, 1.0
                primal = pg_step(theta, P_theta)
                if violation is not None:
                    dual = violation / q_scale
                    status = Status.OPTIMAL
                    log(it)
                    break
        if pg_done:
            status = Status.OPTIMAL
            break

    if status is Status.MAX_ITER:
        dual = pg_step(theta, P_theta)
        logger.warning("solver stopped after %d iterations (step %.3g, projected gradient %.3g)",
                       it, primal, dual)
    else:
        logger.debug("solver converged in %d iterations", it)
    objective = float(theta @ (P @ theta) - q @ theta)
    return Solution(theta=theta, objective=objective, status=status, iterations=it,
                    primal_residual=primal, dual_residual=dual, trace=trace)


def solve(problem: GkmmProblem, settings: SolverSettings | None = None) -> Solution:
    return solve_qp(problem.P, problem.q, problem.xi, problem.bound_B, problem.eps, settings)


def write_trace(solution: Solution, path) -> None:
    """Dump the iterate trace (needs ``SolverSettings(trace=True)``) as CSV."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "objective", "primal_residual", "dual_residual"])
        for it, obj, pr, du in solution.trace:
            w.writerow([it, f"{obj:.17g}", f"{pr:.17g}", f"{du:.17g}"])

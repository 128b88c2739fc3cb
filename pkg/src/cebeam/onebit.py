"""One-bit beamformer design: every transmit entry is +/-1/sqrt(N_t).

The binary constraint is swapped for an exact-penalty continuous problem on
the box [-1/sqrt(N_t), 1/sqrt(N_t)]^(N_t*N_rf): an auxiliary ball-constrained
vector couples to t through t^T v = N_rf, the coupling moves into the
objective with weight rho, and the auxiliary maximizer has the closed form
v = sqrt(N_rf) t / ||t||.  The remaining smooth box-constrained problem is
solved with a Nesterov-style projected gradient and backtracking line search;
growing rho drives |t_i| to the box walls, and the final iterate is rounded
to exact signs.

Vectors use column-major (Fortran) layout: entry (j-1)*N_t + i is T[i, j].
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .model import ModelError, steering_matrix
from .power_alloc import PowerProfile


class DegenerateIterateError(ModelError):
    """The iterate collapsed to zero, leaving the update direction undefined."""


class LineSearchStallError(ModelError):
    """Backtracking could not find a decreasing step."""


@dataclass
class OneBitParams:
    penalty_orth_init: float = 0.01
    penalty_orth_growth: float = 1.5
    penalty_bin_init: float = 0.02
    penalty_bin_growth: float = 1.3
    orth_period: int = 50
    bin_period: int = 50
    max_iters: int = 1500
    tol: float = 1e-4            # on the gradient norm
    seed: int = 0

    def __post_init__(self):
        if min(self.penalty_orth_init, self.penalty_bin_init) <= 0:
            raise ModelError("penalties must start > 0")
        if min(self.penalty_orth_growth, self.penalty_bin_growth) <= 1:
            raise ModelError("penalty growth factors must exceed 1")
        if min(self.orth_period, self.bin_period, self.max_iters) < 1 or self.tol <= 0:
            raise ModelError("periods, max_iters >= 1 and tol > 0 required")


@dataclass
class EpmTrace:
    objective: np.ndarray
    grad_norm: np.ndarray
    binary_gap: np.ndarray       # N_rf - sqrt(N_rf) * ||t||
    penalty_orth: np.ndarray
    penalty_bin: np.ndarray
    iterations: int = 0
    converged: bool = False
    momentum_resets: int = 0
    wall_time_s: float = 0.0


def box_project(t: np.ndarray, n_tx: int) -> np.ndarray:
    """Componentwise clamp onto [-1/sqrt(n_tx), 1/sqrt(n_tx)]."""
    bound = 1.0 / np.sqrt(n_tx)
    return np.clip(t, -bound, bound)


def v_update(t: np.ndarray, n_rf: int) -> np.ndarray:
    """Maximizer of t^T v over the ball ||v||^2 <= n_rf: v = sqrt(n_rf) t/||t||."""
    norm = np.linalg.norm(t)
    if norm == 0.0:
        raise DegenerateIterateError("t = 0 has no preferred direction; restart with a fresh t")
    return np.sqrt(n_rf) * t / norm


def _pattern_terms(t: np.ndarray, A: np.ndarray, n_tx: int, n_rf: int):
    T = t.reshape((n_tx, n_rf), order="F")
    Z = A.T @ T                      # per-angle, per-column complex responses
    achieved = np.sum(np.abs(Z) ** 2, axis=1)
    return T, Z, achieved


def epm_objective(t: np.ndarray, profile: PowerProfile, n_tx: int, n_rf: int,
                  penalty_orth: float, penalty_bin: float) -> float:
    """Pattern-matching cost + binary-gap penalty + orthogonality penalty."""
    t = np.asarray(t, float).reshape(-1)
    A = steering_matrix(profile.all_angles(), n_tx)
    T, _, achieved = _pattern_terms(t, A, n_tx, n_rf)
    mse = float(np.sum((achieved - profile.all_levels()) ** 2))
    gap = n_rf - np.sqrt(n_rf) * np.linalg.norm(t)
    gram = T.T @ T - np.eye(n_rf)
    return mse + penalty_bin * gap + penalty_orth * float(np.sum(gram ** 2))


def epm_gradient(t: np.ndarray, profile: PowerProfile, n_tx: int, n_rf: int,
                 penalty_orth: float, penalty_bin: float) -> np.ndarray:
    """Exact gradient of ``epm_objective`` (column-major layout).

    The quartic pattern term differentiates to sum_p 4(q_p - level_p) Phi_p t
    with symmetric per-angle quadratic forms Phi_p, evaluated through the
    rank-one a_p structure so the Kronecker matrices are never materialized.
    """
    t = np.asarray(t, float).reshape(-1)
    norm = np.linalg.norm(t)
    if norm == 0.0:
        raise DegenerateIterateError("gradient undefined at t = 0")
    A = steering_matrix(profile.all_angles(), n_tx)
    T, Z, achieved = _pattern_terms(t, A, n_tx, n_rf)

    coeff = 4.0 * (achieved - profile.all_levels())
    g_pattern = np.real(A.conj() @ (coeff[:, None] * Z))

    g_bin = -penalty_bin * np.sqrt(n_rf) / norm * T
    g_orth = 4.0 * penalty_orth * T @ (T.T @ T - np.eye(n_rf))
    return (g_pattern + g_bin + g_orth).reshape(-1, order="F")


def round_to_signs(t: np.ndarray, n_tx: int, n_rf: int) -> np.ndarray:
    """Nearest one-bit beamformer; zeros round up."""
    T = np.asarray(t, float).reshape((n_tx, n_rf), order="F")
    return np.where(T >= 0.0, 1.0, -1.0) / np.sqrt(n_tx)


def onebit_objective(T: np.ndarray, profile: PowerProfile, penalty_orth: float) -> float:
    """Pattern MSE plus orthogonality penalty of a (real) one-bit beamformer."""
    A = steering_matrix(profile.all_angles(), T.shape[0])
    achieved = np.sum(np.abs(A.T @ T) ** 2, axis=1)
    mse = float(np.sum((achieved - profile.all_levels()) ** 2))
    gram = T.T @ T - np.eye(T.shape[1])
    return mse + penalty_orth * float(np.sum(gram ** 2))


def nesterov_epm(t0: np.ndarray, profile: PowerProfile, n_tx: int, n_rf: int,
                 params: OneBitParams) -> tuple[np.ndarray, EpmTrace]:
    """Accelerated projected-gradient minimization of the exact-penalty cost.

    Momentum follows tau' = (1 + sqrt(1 + 4 tau^2))/2 with extrapolation
    weight (tau - 1)/tau'; each step backtracks from unit stepsize with an
    Armijo test, and any step that fails to decrease the objective from the
    current iterate is retried without momentum (tau resets to 1).  Returns
    the sign-rounded one-bit beamformer and the iteration trace.
    """
    t = box_project(np.asarray(t0, float).reshape(-1).copy(), n_tx)
    if np.linalg.norm(t) == 0.0:
        raise DegenerateIterateError("starting point must be nonzero")
    if t.size != n_tx * n_rf:
        raise ModelError(f"t0 has {t.size} entries, expected {n_tx * n_rf}")

    pen_o = params.penalty_orth_init
    pen_b = params.penalty_bin_init
    obj = lambda x: epm_objective(x, profile, n_tx, n_rf, pen_o, pen_b)
    grad = lambda x: epm_gradient(x, profile, n_tx, n_rf, pen_o, pen_b)

    tau = 1.0
    t_prev = t.copy()
    f_cur = obj(t)
    hist_f, hist_g, hist_gap, hist_po, hist_pb = [], [], [], [], []
    resets = 0
    converged = False
    started = time.perf_counter()

    def backtrack(base: np.ndarray, f_base: float, g_base: np.ndarray):
        mu = 1.0
        for _ in range(50):
            cand = box_project(base - mu * g_base, n_tx)
            delta = cand - base
            if not np.any(delta):
                return cand, f_base, True       # projection fixed point
            f_cand = obj(cand)
            if f_cand <= f_base + 1e-4 * float(g_base @ delta):
                return cand, f_cand, False
            mu *= 0.5
        raise LineSearchStallError(
            f"no decreasing step after 50 halvings (|g|={np.linalg.norm(g_base):.3e}, "
            f"f={f_base:.6e}, pen_orth={pen_o:.3g}, pen_bin={pen_b:.3g})")

    for it in range(1, params.max_iters + 1):
        tau_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tau * tau))
        w = t + (tau - 1.0) / tau_next * (t - t_prev)
        w = box_project(w, n_tx)
        if np.linalg.norm(w) == 0.0:
            w = t
        g_w = grad(w)
        t_new, f_new, fixed = backtrack(w, obj(w), g_w)

        if f_new > f_cur:
            # extrapolation overshoots: plain step from the incumbent
            g_t = grad(t)
            t_new, f_new, fixed = backtrack(t, f_cur, g_t)
            tau_next = 1.0
            resets += 1

        t_prev, t = t, t_new
        f_cur = min(f_new, f_cur) if fixed else f_new
        tau = tau_next

        g_now = grad(t)
        gnorm = float(np.linalg.norm(g_now))
        hist_f.append(f_cur)
        hist_g.append(gnorm)
        hist_gap.append(n_rf - np.sqrt(n_rf) * float(np.linalg.norm(t)))
        hist_po.append(pen_o)
        hist_pb.append(pen_b)

        if gnorm <= params.tol:
            converged = True
            break
        if fixed and not np.any(t - t_prev):
            converged = True                     # locked on a box vertex set
            break
        bumped = False
        if it % params.orth_period == 0:
            pen_o *= params.penalty_orth_growth
            bumped = True
        if it % params.bin_period == 0:
            pen_b *= params.penalty_bin_growth
            bumped = True
        if bumped:
            f_cur = obj(t)

    trace = EpmTrace(
        objective=np.asarray(hist_f), grad_norm=np.asarray(hist_g),
        binary_gap=np.asarray(hist_gap), penalty_orth=np.asarray(hist_po),
        penalty_bin=np.asarray(hist_pb), iterations=len(hist_f),
        converged=converged, momentum_resets=resets,
        wall_time_s=time.perf_counter() - started)
    return round_to_signs(t, n_tx, n_rf), trace


MAX_EXHAUSTIVE_ENTRIES = 20


def exhaustive_onebit(profile: PowerProfile, n_tx: int, n_rf: int,
                      penalty_orth: float) -> tuple[np.ndarray, float]:
    """Globally optimal one-bit beamformer by sign enumeration.

    Only feasible for n_tx*n_rf <= 20 (2^20 candidates); ties break toward
    the lexicographically smallest sign pattern, bit b of the pattern index
    being entry b in column-major order.
    """
    n = n_tx * n_rf
    if n > MAX_EXHAUSTIVE_ENTRIES:
        raise ModelError(f"{n} one-bit entries means 2^{n} candidates; refusing beyond "
                         f"2^{MAX_EXHAUSTIVE_ENTRIES}")
    angles = profile.all_angles()
    levels = profile.all_levels()
    A = steering_matrix(angles, n_tx)
    scale = 1.0 / np.sqrt(n_tx)

    best_val = np.inf
    best_idx = -1
    chunk = 1 << 14
    total = 1 << n
    bit_id = np.arange(n, dtype=np.int64)
    eye = np.eye(n_rf)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        signs = (((idx[:, None] >> bit_id[None, :]) & 1) * 2 - 1).astype(np.float64)
        Tb = signs.reshape(-1, n_rf, n_tx).transpose(0, 2, 1) * scale   # column-major bits
        Z = np.einsum("np,bnr->bpr", A, Tb.astype(complex))
        achieved = np.sum(np.abs(Z) ** 2, axis=2)
        mse = np.sum((achieved - levels[None, :]) ** 2, axis=1)
        gram = np.einsum("bnr,bns->brs", Tb, Tb) - eye[None]
        vals = mse + penalty_orth * np.sum(gram ** 2, axis=(1, 2))
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val = float(vals[k])
            best_idx = int(idx[k])

    signs = (((best_idx >> bit_id) & 1) * 2 - 1).astype(np.float64)
    T = signs.reshape((n_tx, n_rf), order="F") * scale
    return T, best_val

"""Convex-roof estimation of output entropy over pure-state decompositions.

A decomposition of rho with r positive eigenvalues is parametrized by an
m x r matrix with orthonormal columns: row i mixes the scaled eigenvectors
of rho into the (unnormalized) member v_i, so every parameter point is a
valid ensemble with barycenter rho.  Multi-restart projected gradient
descent over that manifold yields certified *upper* bounds on the roof;
reported optima are never lower bounds.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .channels import Channel, output_entropy
from .core import DensityMatrix, PureState, SubsystemShape, hermitian_eig, rng_for
from .entropy import relative_entropy, spectrum_entropy
from .errors import DimensionError, ParameterError, ValidityError

SUPPORT_CUT = 1e-12
WEIGHT_DROP = 1e-14
LOG_FLOOR = 1e-12
ARMIJO = 1e-4
TIE_TOL = 1e-12
SIZE_CAP = 64


@dataclass(frozen=True)
class RoofOptions:
    """Optimizer controls; ensemble_size defaults to rank(rho)^2 capped at 64."""

    restarts: int = 24
    max_iterations: int = 500
    grad_tol: float = 1e-7
    ensemble_size: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1 or self.max_iterations < 1:
            raise ParameterError("restarts and max_iterations must be positive")
        if not self.grad_tol > 0.0:
            raise ParameterError("gradient tolerance must be positive")
        if self.ensemble_size is not None and self.ensemble_size < 1:
            raise ParameterError("ensemble size must be positive")

    def refined(self) -> "RoofOptions":
        """Same schedule extended to twice as many restarts."""
        return replace(self, restarts=2 * self.restarts)


class Ensemble:
    """Finite ensemble of pure states with positive weights summing to one."""

    __slots__ = ("weights", "states")

    def __init__(self, weights, states):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or w.shape[0] == 0 or w.shape[0] != len(states):
            raise ParameterError("need one positive weight per state")
        if float(w.min()) <= 0.0:
            raise ValidityError("ensemble weights must be strictly positive")
        if abs(float(w.sum()) - 1.0) > 1e-10:
            raise ValidityError(f"weights sum to {w.sum()!r}, not 1 within 1e-10")
        dims = {s.dim for s in states}
        if len(dims) != 1:
            raise DimensionError("ensemble members live on different spaces")
        w = w.copy()
        w.setflags(write=False)
        self.weights = w
        self.states = tuple(states)

    def __len__(self) -> int:
        return len(self.states)

    def barycenter(self) -> DensityMatrix:
        mix = np.zeros((self.states[0].dim,) * 2, dtype=complex)
        for w, s in zip(self.weights, self.states):
            mix += w * s.projector()
        return DensityMatrix(mix)


def _support_factor(rho: DensityMatrix) -> tuple[np.ndarray, int]:
    """Columns sqrt(lambda_j) e_j over the eigenvalues above 1e-12."""
    vals, vecs = hermitian_eig(rho.entries)
    r = int((vals > SUPPORT_CUT).sum())
    return vecs[:, :r] * np.sqrt(vals[:r]), r


def ensemble_from_mixing(rho: DensityMatrix, mixing) -> Ensemble:
    """Decomposition of rho induced by a tall matrix with orthonormal columns.

    Member i is the normalization of sum_j M_ij sqrt(lambda_j) e_j; members
    with weight at or below 1e-14 are dropped.  Column orthonormality is
    required within 1e-6.
    """
    m_arr = np.asarray(mixing, dtype=complex)
    if m_arr.ndim != 2:
        raise ParameterError(f"mixing matrix must be 2-d, got shape {m_arr.shape}")
    g, r = _support_factor(rho)
    if m_arr.shape[1] != r or m_arr.shape[0] < r:
        raise ParameterError(
            f"mixing matrix must be m x {r} with m >= {r}, got {m_arr.shape}"
        )
    dev = float(np.max(np.abs(m_arr.conj().T @ m_arr - np.eye(r))))
    if dev > 1e-6:
        raise ParameterError(f"columns not orthonormal: deviation {dev:.3e}")
    v = g @ m_arr.T
    w = np.linalg.norm(v, axis=0) ** 2
    keep = np.nonzero(w > WEIGHT_DROP)[0]
    weights = w[keep] / w[keep].sum()
    states = [PureState(v[:, i] / math.sqrt(w[i])) for i in keep]
    return Ensemble(weights, states)


def average_output_entropy(channel: Channel, ensemble: Ensemble) -> float:
    """Mean output entropy of the ensemble members."""
    return float(
        sum(
            w * output_entropy(channel, s.density())
            for w, s in zip(ensemble.weights, ensemble.states)
        )
    )


# --- optimizer internals ----------------------------------------------------


def _member_outputs(kstack: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-member channel outputs of the unnormalized columns of v."""
    w = kstack @ v                                     # (env, out, m)
    return np.einsum("kom,kpm->mop", w, w.conj()), w


def _roof_value(kstack: np.ndarray, g: np.ndarray, m_mat: np.ndarray) -> float:
    a, _ = _member_outputs(kstack, g @ m_mat.T)
    vals = np.clip(np.linalg.eigvalsh(a), 0.0, None)   # (m, out)
    t = vals.sum(axis=1)
    ent = -(vals * np.log(np.where(vals > 0.0, vals, 1.0))).sum(axis=1)
    tln = np.where(t > 0.0, t, 1.0)
    return float(ent.sum() + (t * np.log(tln)).sum())


def _roof_value_grad(
    kstack: np.ndarray, g: np.ndarray, m_mat: np.ndarray
) -> tuple[float, np.ndarray]:
    v = g @ m_mat.T
    a, w = _member_outputs(kstack, v)
    lam, u = np.linalg.eigh(a)                         # (m, out), (m, out, out)
    lam = np.clip(lam, 0.0, None)
    t = lam.sum(axis=1)
    ent = -(lam * np.log(np.where(lam > 0.0, lam, 1.0))).sum(axis=1)
    value = float(ent.sum() + (t * np.log(np.where(t > 0.0, t, 1.0))).sum())
    # dH/dA in the output eigenbasis is -log(lambda) + log(trace); the floor
    # keeps the off-support limit finite without changing the descent sign
    gvals = -np.log(np.maximum(lam, LOG_FLOOR)) + np.log(np.maximum(t, LOG_FLOOR))[:, None]
    d = np.einsum("mop,mp,mqp->moq", u, gvals, u.conj())
    dw = np.einsum("moq,kqm->kom", d, w)
    grad_v = np.einsum("koa,kom->am", kstack.conj(), dw)
    return value, grad_v.T @ g.conj()


def _polar(x: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(x, full_matrices=False)
    return u @ vh


def _tangent(m_mat: np.ndarray, grad: np.ndarray) -> np.ndarray:
    sym = m_mat.conj().T @ grad
    return grad - m_mat @ (sym + sym.conj().T) / 2.0


@dataclass
class _RunStats:
    m_mat: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    converged: bool


def _stiefel_minimize(value_fn, grad_fn, m0: np.ndarray, options: RoofOptions) -> _RunStats:
    """Projected gradient descent with backtracking and polar retraction."""
    m_mat = m0
    step = 1.0
    value, grad = grad_fn(m_mat)
    iterations = 0
    grad_norm = math.inf
    for iterations in range(1, options.max_iterations + 1):
        xi = _tangent(m_mat, grad)
        grad_norm = float(np.linalg.norm(xi))
        if grad_norm < options.grad_tol:
            return _RunStats(m_mat, value, grad_norm, iterations, True)
        t = min(2.0 * step, 1.0)
        accepted = False
        while t > 1e-14:
            cand = _polar(m_mat - t * xi)
            cand_val = value_fn(cand)
            if cand_val <= value - ARMIJO * t * grad_norm**2:
                accepted = True
                break
            t /= 2.0
        if not accepted:
            break
        m_mat, step = cand, t
        value, grad = grad_fn(m_mat)
    return _RunStats(m_mat, value, grad_norm, iterations, grad_norm < options.grad_tol)


def _resolve_size(options: RoofOptions, rank: int) -> int:
    size = options.ensemble_size
    if size is None:
        size = min(rank * rank, SIZE_CAP)
    size = max(size, 1)
    if size < rank:
        raise ParameterError(f"ensemble size {size} is below the state rank {rank}")
    return size


def _random_start(rng: np.random.Generator, size: int, rank: int) -> np.ndarray:
    g = rng.normal(size=(size, rank)) + 1j * rng.normal(size=(size, rank))
    return _polar(g)


def _multistart(value_fn, grad_fn, size: int, rank: int, options: RoofOptions) -> tuple[_RunStats, int]:
    best: _RunStats | None = None
    best_idx = 0
    for idx in range(options.restarts):
        start = _random_start(rng_for(options.seed, idx), size, rank)
        run = _stiefel_minimize(value_fn, grad_fn, start, options)
        if best is None or run.value < best.value - TIE_TOL:
            best, best_idx = run, idx
    return best, best_idx


@dataclass
class RoofResult:
    """Upper-bound estimate of a convex roof with its achieving decomposition."""

    value: float
    ensemble: Ensemble
    restarts_used: int
    best_restart: int
    gradient_norm: float
    iterations: int
    converged: bool


def ccooe(channel: Channel, rho: DensityMatrix, options: RoofOptions | None = None) -> RoofResult:
    """Upper bound on the convex closure of the output entropy at rho.

    Minimizes the mean output entropy over pure decompositions of rho; the
    reported value is recomputed from the returned ensemble, so it always
    bounds the roof from above and never exceeds S(channel(rho)).
    """
    options = options or RoofOptions()
    if rho.dim != channel.in_dim:
        raise DimensionError(f"state dimension {rho.dim} != channel input {channel.in_dim}")
    g, rank = _support_factor(rho)
    size = _resolve_size(options, rank)
    kstack = channel.kraus_stack()

    def value_fn(m_mat):
        return _roof_value(kstack, g, m_mat)

    def grad_fn(m_mat):
        return _roof_value_grad(kstack, g, m_mat)

    best, best_idx = _multistart(value_fn, grad_fn, size, rank, options)
    ensemble = ensemble_from_mixing(rho, best.m_mat)
    value = average_output_entropy(channel, ensemble)
    return RoofResult(
        value=value,
        ensemble=ensemble,
        restarts_used=options.restarts,
        best_restart=best_idx,
        gradient_norm=best.grad_norm,
        iterations=best.iterations,
        converged=best.converged,
    )


def eof(omega: DensityMatrix, shape: SubsystemShape, options: RoofOptions | None = None) -> RoofResult:
    """Entanglement of formation across a bipartite cut, in nats.

    Equals the output-entropy roof of the channel tracing out the second
    factor; swapping the kept factor changes nothing because pure members
    have isospectral marginals.
    """
    if shape.factors != 2:
        raise ParameterError(f"need exactly two factors, got {shape.factor_dims}")
    shape.require_total(omega.dim)
    from .channels import partial_trace_channel

    return ccooe(partial_trace_channel(shape, (0,)), omega, options)


def chi_from_roof(channel: Channel, rho: DensityMatrix, options: RoofOptions | None = None) -> float:
    """Constrained Holevo quantity at rho via S(channel(rho)) minus the roof."""
    return output_entropy(channel, rho) - ccooe(channel, rho, options).value


def chi_direct(
    channel: Channel,
    rho: DensityMatrix,
    options: RoofOptions | None = None,
    group_size: int = 1,
) -> float:
    """Lower bound on the constrained Holevo quantity from its definition.

    Maximizes the mean relative entropy of member outputs to channel(rho)
    over ensembles with barycenter rho.  Consecutive parametrized members are
    merged into mixed members in blocks of `group_size`; the default keeps
    all members pure.  Members whose relative entropy is infinite (possible
    only when channel(rho) is rank deficient) are discarded with a warning.
    """
    options = options or RoofOptions()
    if group_size < 1:
        raise ParameterError(f"group size must be positive, got {group_size}")
    if rho.dim != channel.in_dim:
        raise DimensionError(f"state dimension {rho.dim} != channel input {channel.in_dim}")
    g, rank = _support_factor(rho)
    size = _resolve_size(options, rank)
    kstack = channel.kraus_stack()
    out_state = channel.apply_raw(rho.entries)
    bvals, bvecs = hermitian_eig(out_state)
    log_b = (bvecs * np.log(np.maximum(bvals, LOG_FLOOR))) @ bvecs.conj().T
    groups = [list(range(b, min(b + group_size, size))) for b in range(0, size, group_size)]

    def group_outputs(m_mat):
        a, _ = _member_outputs(kstack, g @ m_mat.T)
        return np.stack([a[idx].sum(axis=0) for idx in groups])

    def value_fn(m_mat):
        return -_holevo_terms(group_outputs(m_mat), log_b).sum()

    def grad_fn(m_mat):
        v = g @ m_mat.T
        a, w = _member_outputs(kstack, v)
        ga = np.stack([a[idx].sum(axis=0) for idx in groups])
        lam, u = np.linalg.eigh(ga)
        lam = np.clip(lam, 0.0, None)
        t = np.maximum(lam.sum(axis=1), LOG_FLOOR)
        value = -float(_holevo_terms(ga, log_b).sum())
        gvals = np.log(np.maximum(lam, LOG_FLOOR)) - np.log(t)[:, None]
        d = np.einsum("bop,bp,bqp->boq", u, gvals, u.conj()) - log_b[None, :, :]
        member_d = np.empty((size,) + log_b.shape, dtype=complex)
        for b, idx in enumerate(groups):
            member_d[idx] = d[b]
        dw = np.einsum("moq,kqm->kom", member_d, w)
        grad_v = np.einsum("koa,kom->am", kstack.conj(), dw)
        return value, -(grad_v.T @ g.conj())

    best, _ = _multistart(value_fn, grad_fn, size, rank, options)
    return _holevo_report(channel, rho, g, best.m_mat, groups)


def _holevo_terms(group_states: np.ndarray, log_b: np.ndarray) -> np.ndarray:
    """Per-group Tr A log A - Tr A log t - Tr A log B for unnormalized outputs."""
    lam = np.clip(np.linalg.eigvalsh(group_states), 0.0, None)
    t = lam.sum(axis=1)
    pos = lam > 0.0
    alog = (lam * np.log(np.where(pos, lam, 1.0))).sum(axis=1)
    tlog = np.where(t > 0.0, t * np.log(np.where(t > 0.0, t, 1.0)), 0.0)
    cross = np.einsum("bop,po->b", group_states, log_b).real
    return alog - tlog - cross


def _holevo_report(channel, rho, g, m_mat, groups) -> float:
    """Final value through the public relative-entropy path."""
    v = g @ m_mat.T
    reference = DensityMatrix(channel.apply_raw(rho.entries))
    total, dropped = 0.0, 0
    for idx in groups:
        block = v[:, idx]
        t_b = block @ block.conj().T
        weight = float(t_b.trace().real)
        if weight <= WEIGHT_DROP:
            continue
        term = relative_entropy(
            DensityMatrix(channel.apply_raw(t_b / weight)), reference
        )
        if math.isinf(term):
            dropped += 1
            continue
        total += weight * term
    if dropped:
        warnings.warn(
            f"discarded {dropped} ensemble member(s) with infinite relative entropy",
            RuntimeWarning,
            stacklevel=3,
        )
    return total


def min_output_entropy(
    channel: Channel, options: RoofOptions | None = None
) -> tuple[float, PureState]:
    """Upper bound on the minimal output entropy over pure inputs.

    Multi-restart projected gradient descent on the unit sphere with the
    same backtracking scheme as the roof optimizer; returns the value and
    the achieving input.
    """
    options = options or RoofOptions()
    kstack = channel.kraus_stack()

    def value_fn(psi):
        a, _ = _member_outputs(kstack, psi.reshape(-1, 1))
        return spectrum_entropy(np.clip(np.linalg.eigvalsh(a[0]), 0.0, None))

    def grad_fn(psi):
        a, w = _member_outputs(kstack, psi.reshape(-1, 1))
        lam, u = np.linalg.eigh(a[0])
        lam = np.clip(lam, 0.0, None)
        value = spectrum_entropy(lam)
        d = (u * -np.log(np.maximum(lam, LOG_FLOOR))) @ u.conj().T
        kd = np.einsum("oq,kq->ko", d, w[:, :, 0])
        return value, np.einsum("koa,ko->a", kstack.conj(), kd)

    best_val, best_psi = math.inf, None
    for idx in range(options.restarts):
        rng = rng_for(options.seed, idx)
        psi = rng.normal(size=channel.in_dim) + 1j * rng.normal(size=channel.in_dim)
        psi /= np.linalg.norm(psi)
        value, grad = grad_fn(psi)
        step = 1.0
        for _ in range(options.max_iterations):
            xi = grad - (psi.conj() @ grad) * psi
            gn = float(np.linalg.norm(xi))
            if gn < options.grad_tol:
                break
            t = min(2.0 * step, 1.0)
            accepted = False
            while t > 1e-14:
                cand = psi - t * xi
                cand /= np.linalg.norm(cand)
                cand_val = value_fn(cand)
                if cand_val <= value - ARMIJO * t * gn**2:
                    accepted = True
                    break
                t /= 2.0
            if not accepted:
                break
            psi, step = cand, t
            value, grad = grad_fn(psi)
        if value < best_val - TIE_TOL:
            best_val, best_psi = value, psi
    state = PureState(best_psi / np.linalg.norm(best_psi))
    return output_entropy(channel, state.density()), state

"""
Desk-scale resource allocation.

SISO: joint transmit power ``p`` and reflection efficiency ``alpha`` per
fading state, maximizing an ergodic weighted sum rate under a peak or an
average power constraint. Exhaustive grids and a Lagrange-multiplier
bisection stand in for a convex solver so that every
answer can be checked against brute force.

MISO: minimum-power transmit beamformer meeting primary and secondary
rate targets, searched over directions in the span of the two channels.

In both problems the primary and secondary receivers are co-located, so
one :class:`ChannelState` per fading state carries ``f1 = direct`` and
``f2 = alpha * stx_in * stx_out``.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .core import InfeasibleError
from .modem import build_constellation
from .rates import CIRCULAR, primary_lower, primary_upper, secondary_rate

BISECTION_MAX_ITER = 60
BISECTION_GAP = 0.01
MIN_GRID = 32


@dataclass(frozen=True)
class ConstraintSet:
    peak_power: float = None
    avg_power: float = None
    power_budget: float = None
    min_primary_rate: float = None
    min_secondary_rate: float = None
    alpha_bounds: tuple = (0.0, 1.0)

    def __post_init__(self):
        powers = {"peak_power": self.peak_power, "avg_power": self.avg_power,
                  "power_budget": self.power_budget}
        if all(v is None for v in powers.values()):
            raise ValueError("at least one power constraint is required")
        for name, value in powers.items():
            if value is not None and not value > 0:
                raise InfeasibleError(f"{name} must be positive, got {value}", binding=name)
        for name in ("min_primary_rate", "min_secondary_rate"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be non-negative")
        lo, hi = self.alpha_bounds
        if not 0 <= lo <= hi <= 1:
            raise ValueError("alpha_bounds must lie inside [0, 1]")


@dataclass
class AllocationSolution:
    """Result of an allocation; arrays are per fading state."""

    power: np.ndarray
    alpha: np.ndarray = None
    beamformer: np.ndarray = None
    objective: float = np.nan
    rates: dict = field(default_factory=dict)
    slacks: dict = field(default_factory=dict)
    multiplier: float = None

    @property
    def avg_power(self):
        return float(np.mean(self.power))


def _state_arrays(states):
    f1 = np.array([s.direct for s in states])
    link = np.array([s.stx_in * s.stx_out for s in states])
    if np.any((np.abs(f1).sum(axis=1) == 0) & (np.abs(link).sum(axis=1) == 0)):
        warnings.warn("a fading state has all-zero channels", RuntimeWarning, stacklevel=3)
    return f1, link


def _siso_rates(f1, f2, p, sigma2, A_s, A_c, primary_rate, K):
    if primary_rate == "upper":
        rs = primary_upper(f1, f2, p, sigma2, A_c)
    elif primary_rate == "lower":
        rs = primary_lower(f1, f2, p, sigma2, A_c)
    else:
        raise ValueError("primary_rate must be 'upper' or 'lower'")
    return rs, secondary_rate(f2, p, sigma2, K, A_s)


def utility_table(states, weights, p_grid, alpha_grid, sigma2=1.0, A_s="bpsk",
                  A_c=CIRCULAR, primary_rate="upper", K=1):
    """
    Weighted sum rate of every state on a (power, alpha) grid.

    Returns ``(U, Rs, Rc)``, each of shape (n_states, len(p_grid), len(alpha_grid)).
    """
    w_s, w_c = weights
    f1, link = _state_arrays(states)
    f2 = alpha_grid[None, :, None] * link[:, None, :]
    f1b = np.broadcast_to(f1[:, None, :], f2.shape)
    Rs = np.empty((len(f1), len(p_grid), len(alpha_grid)))
    Rc = np.empty_like(Rs)
    for j, p in enumerate(p_grid):
        Rs[:, j], Rc[:, j] = _siso_rates(f1b, f2, p, sigma2, A_s, A_c, primary_rate, K)
    return w_s * Rs + w_c * Rc, Rs, Rc


def _check_weights(weights):
    w_s, w_c = weights
    if w_s < 0 or w_c < 0 or (w_s == 0 and w_c == 0):
        raise ValueError("weights must be non-negative and not both zero")


def allocate_siso(states, weights, constraints, grid=64, sigma2=1.0, A_s="bpsk",
                  A_c=CIRCULAR, primary_rate="upper", K=1):
    """
    Per-state ``(p, alpha)`` maximizing the ergodic weighted sum rate.

    Parameters
    ----------
    states : sequence of ChannelState
        Equiprobable fading states.
    weights : (w_s, w_c)
    constraints : ConstraintSet
        ``peak_power`` bounds every state; ``avg_power`` bounds the mean
        over states. With only an average constraint a single state may
        use up to ``len(states) * avg_power``.
    grid : int
        Points per axis, at least 32.
    primary_rate : {"upper", "lower"}
        Which primary-rate expression enters the objective.

    Notes
    -----
    Under the average constraint the multiplier ``lambda`` on the mean
    power is bisected; for each trial value every state independently
    maximizes ``U(p, alpha) - lambda p`` on the grid. Iteration stops once
    the unused budget is below 1% or after 60 steps, always on the feasible
    side.
    """
    _check_weights(weights)
    if int(grid) < MIN_GRID:
        raise ValueError(f"grid resolution must be at least {MIN_GRID}")
    states = list(states)
    P_pk, P_av = constraints.peak_power, constraints.avg_power
    p_max = P_pk if P_pk is not None else len(states) * P_av
    p_grid = np.linspace(0.0, p_max, int(grid))
    alpha_grid = np.linspace(*constraints.alpha_bounds, int(grid))
    U, Rs, Rc = utility_table(states, weights, p_grid, alpha_grid, sigma2, A_s, A_c, primary_rate, K)

    def pick(lam):
        L = U - lam * p_grid[None, :, None]
        flat = L.reshape(len(states), -1).argmax(axis=1)
        return np.unravel_index(flat, L.shape[1:])

    lam = 0.0
    ip, ia = pick(0.0)
    if P_av is not None and p_grid[ip].mean() > P_av:
        lo, hi = 0.0, 1.0
        while p_grid[pick(hi)[0]].mean() > P_av:
            lo, hi = hi, 2 * hi
        ip, ia = pick(hi)
        for _ in range(BISECTION_MAX_ITER):
            if (P_av - p_grid[ip].mean()) / P_av < BISECTION_GAP:
                break
            mid = 0.5 * (lo + hi)
            cand = pick(mid)
            if p_grid[cand[0]].mean() <= P_av:
                hi, (ip, ia) = mid, cand
            else:
                lo = mid
        lam = hi

    idx = np.arange(len(states))
    power, alpha = p_grid[ip], alpha_grid[ia]
    rs, rc = Rs[idx, ip, ia], Rc[idx, ip, ia]
    slacks = {}
    if P_pk is not None:
        slacks["peak_power"] = float(P_pk - power.max())
    if P_av is not None:
        slacks["avg_power"] = float(P_av - power.mean())
    return AllocationSolution(
        power=power, alpha=alpha, objective=float(U[idx, ip, ia].mean()),
        rates={"primary": rs, "secondary": rc}, slacks=slacks, multiplier=lam,
    )


def brute_force_siso(states, weights, constraints, grid=128, sigma2=1.0, A_s="bpsk",
                     A_c=CIRCULAR, primary_rate="upper", K=1):
    """
    Exhaustive joint search over every state's power on one grid.

    Reference solver for a handful of states: it enumerates all power
    tuples meeting the constraints directly, with no multiplier. Alpha is
    optimized per state and power, since it does not enter the budget.
    """
    _check_weights(weights)
    states = list(states)
    P_pk, P_av = constraints.peak_power, constraints.avg_power
    p_max = P_pk if P_pk is not None else len(states) * P_av
    p_grid = np.linspace(0.0, p_max, int(grid))
    alpha_grid = np.linspace(*constraints.alpha_bounds, int(grid))
    U, _, _ = utility_table(states, weights, p_grid, alpha_grid, sigma2, A_s, A_c, primary_rate, K)
    best_alpha = U.argmax(axis=2)
    Ubest = U.max(axis=2)
    budget = np.inf if P_av is None else P_av * len(states) * (1 + 1e-12)
    # every power tuple at once: axis i indexes the power of state i
    total, spent = np.zeros(()), np.zeros(())
    for i in range(len(states)):
        shape = (1,) * i + (len(p_grid),)
        total = total[..., None] + Ubest[i].reshape(shape)
        spent = spent[..., None] + p_grid.reshape(shape)
    total = np.where(spent <= budget, total, -np.inf)
    flat = int(np.argmax(total))
    best = (float(total.flat[flat]), np.unravel_index(flat, total.shape))
    combo = np.array(best[1])
    idx = np.arange(len(states))
    return AllocationSolution(power=p_grid[combo], alpha=alpha_grid[best_alpha[idx, combo]],
                              objective=best[0] / len(states))


# MISO power minimization
def miso_rates(v, h_direct, h_comp, sigma2, A_s="bpsk", A_c="bpsk"):
    """
    Conservative primary rate and K = 1 secondary rate for beamformer `v`.

    The receive signal is ``(h_d^H v) s + (h_c^H v) s c + n``; the
    secondary path counts as interference for the primary rate.
    """
    a2 = np.abs(np.vdot(h_direct, v)) ** 2
    b2 = np.abs(np.vdot(h_comp, v)) ** 2
    ec2 = 1.0 if (isinstance(A_c, str) and A_c == CIRCULAR) else build_constellation(A_c).mean_energy
    s2 = np.abs(build_constellation(A_s).points) ** 2
    rs = np.log2(1 + a2 / (ec2 * b2 + sigma2))
    rc = float(np.mean(np.log2(1 + b2 * s2 / sigma2)))
    return float(rs), rc


def _secondary_threshold(rc_min, sigma2, s2):
    """Smallest ``q |h_c^H w|^2`` meeting the secondary target."""
    if rc_min == 0:
        return 0.0
    if np.allclose(s2, s2[0]):
        return (2.0**rc_min - 1) * sigma2 / s2[0]

    def f(x):
        return np.mean(np.log2(1 + x * s2 / sigma2)) - rc_min

    hi = sigma2
    while f(hi) < 0:
        hi *= 2
    return brentq(f, 0.0, hi, xtol=1e-14 * hi, rtol=1e-13)


def _span_basis(h_direct, h_comp):
    """Orthonormal basis of span{h_d, h_c}, first vector along h_d when possible."""
    nd = np.linalg.norm(h_direct)
    if nd == 0:
        return [h_comp / np.linalg.norm(h_comp)]
    e1 = h_direct / nd
    rest = h_comp - np.vdot(e1, h_comp) * e1
    nr = np.linalg.norm(rest)
    if nr <= 1e-12 * max(np.linalg.norm(h_comp), 1e-300):
        return [e1]
    return [e1, rest / nr]


def _power_vs_theta(theta, d, c1, c2, gamma_s, x_c, ec2, sigma2):
    """
    Minimum power along the best direction with angle `theta`.

    ``w = cos(theta) e1 + sin(theta) exp(j phi) e2``. The direct gain
    ``a = d^2 cos^2`` is fixed by theta; phi sweeps the composite gain
    ``b`` over ``[(|c1| cos - |c2| sin)^2, (|c1| cos + |c2| sin)^2]``. The
    primary requirement grows with b and the secondary one shrinks, so
    the best b is their crossing clipped to that interval.

    Returns (q, b) arrays.
    """
    ct, st = np.cos(theta), np.sin(theta)
    a = (d * ct) ** 2
    lo = (np.abs(c1) * ct - np.abs(c2) * st) ** 2
    hi = (np.abs(c1) * ct + np.abs(c2) * st) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        if gamma_s == 0:
            b = hi
        elif x_c == 0:
            b = lo
        else:
            b = np.clip(x_c * a / (gamma_s * sigma2 + x_c * gamma_s * ec2), lo, hi)
        den = a - gamma_s * ec2 * b
        q_s = np.where(gamma_s == 0, 0.0, np.where(den > 0, gamma_s * sigma2 / den, np.inf))
        q_c = np.where(x_c == 0, 0.0, np.where(b > 0, x_c / b, np.inf))
    return np.maximum(q_s, q_c), b, q_s, q_c


def beamform_power_min(h_direct, h_comp, constraints, sigma2=1.0, A_s="bpsk", A_c="bpsk", grid=721):
    """
    Minimum-power beamformer meeting both rate targets.

    Only the gains ``|h_d^H w|^2`` and ``|h_c^H w|^2`` matter, so the
    optimal direction lies in span{h_d, h_c}. It is parametrized by an
    angle theta and a relative phase; the phase is solved in closed form
    for each theta and theta is found by a grid plus a bounded scalar
    refinement around the best cell.

    Raises
    ------
    InfeasibleError
        If no direction reaches both targets within ``power_budget``;
        ``binding`` names the limiting rate constraint.
    """
    h_direct = np.atleast_1d(np.asarray(h_direct, dtype=complex))
    h_comp = np.atleast_1d(np.asarray(h_comp, dtype=complex))
    P_t = constraints.power_budget
    if P_t is None:
        raise ValueError("beamforming needs power_budget")
    rs_min = constraints.min_primary_rate or 0.0
    rc_min = constraints.min_secondary_rate or 0.0
    ec2 = 1.0 if (isinstance(A_c, str) and A_c == CIRCULAR) else build_constellation(A_c).mean_energy
    s2 = np.abs(build_constellation(A_s).points) ** 2
    gamma_s = 2.0**rs_min - 1
    x_c = _secondary_threshold(rc_min, sigma2, s2)

    if np.linalg.norm(h_direct) == 0 and np.linalg.norm(h_comp) == 0:
        if gamma_s == 0 and x_c == 0:
            return _miso_solution(np.zeros_like(h_direct), h_direct, h_comp, sigma2, A_s, A_c, constraints, 0.0)
        raise InfeasibleError("both channels are zero", binding="min_primary_rate" if gamma_s else "min_secondary_rate")
    if np.linalg.norm(h_direct) == 0 and gamma_s > 0:
        raise InfeasibleError("primary target needs a non-zero direct channel", binding="min_primary_rate")

    basis = _span_basis(h_direct, h_comp)
    e1 = basis[0]
    e2 = basis[1] if len(basis) > 1 else np.zeros_like(e1)
    d = abs(np.vdot(e1, h_direct))
    c1, c2 = np.vdot(h_comp, e1), np.vdot(h_comp, e2)

    def cost(theta):
        return float(_power_vs_theta(theta, d, c1, c2, gamma_s, x_c, ec2, sigma2)[0])

    top = np.pi / 2 if len(basis) > 1 else 0.0
    thetas = np.linspace(0.0, top, int(grid))
    costs = _power_vs_theta(thetas, d, c1, c2, gamma_s, x_c, ec2, sigma2)[0]
    i = int(np.argmin(costs))
    theta, q = float(thetas[i]), float(costs[i])
    if np.isfinite(q) and top > 0:
        lo, hi = thetas[max(i - 1, 0)], thetas[min(i + 1, len(thetas) - 1)]
        res = minimize_scalar(cost, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        if res.fun < q:
            theta, q = float(res.x), float(res.fun)

    _, b, q_s, q_c = (float(v) for v in _power_vs_theta(theta, d, c1, c2, gamma_s, x_c, ec2, sigma2))
    if not q <= P_t * (1 + 1e-12):
        binding = "min_primary_rate" if q_s >= q_c else "min_secondary_rate"
        raise InfeasibleError(f"rate targets need power {q:.4g} > budget {P_t:.4g}", binding=binding)

    # relative phase giving composite gain b: |A + B e^{j phi}|^2 = b
    A, B = np.cos(theta) * c1, np.sin(theta) * c2
    if abs(A) * abs(B) > 0:
        cos_psi = np.clip((b - abs(A) ** 2 - abs(B) ** 2) / (2 * abs(A) * abs(B)), -1.0, 1.0)
        phi = np.arccos(cos_psi) + np.angle(A) - np.angle(B)
    else:
        phi = 0.0
    w = np.cos(theta) * e1 + np.sin(theta) * np.exp(1j * phi) * e2
    return _miso_solution(np.sqrt(q) * w, h_direct, h_comp, sigma2, A_s, A_c, constraints, theta)


def _miso_solution(v, h_direct, h_comp, sigma2, A_s, A_c, constraints, theta):
    rs, rc = miso_rates(v, h_direct, h_comp, sigma2, A_s, A_c)
    q = float(np.vdot(v, v).real)
    rs_min = constraints.min_primary_rate or 0.0
    rc_min = constraints.min_secondary_rate or 0.0
    return AllocationSolution(
        power=np.array([q]), beamformer=v, objective=q,
        rates={"primary": rs, "secondary": rc},
        slacks={"power_budget": constraints.power_budget - q, "min_primary_rate": rs - rs_min,
                "min_secondary_rate": rc - rc_min},
        multiplier=theta,
    )

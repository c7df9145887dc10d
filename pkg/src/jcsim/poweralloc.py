"""Max-min fairness power allocation under a radar SIR constraint.

At a fixed SINR target t every constraint is linear in the power vector,
so the max-min problem is solved by bisecting on t and answering a linear
feasibility question at each step.  The inner question goes to a linear
programming solver (HiGHS via scipy); rows are nondimensionalized first so
the solver tolerances are meaningful at physical power and noise scales.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .array import ArrayGeometry, Direction, steering_vector
from .beamform import BeamformerSet
from .rate import RateCoefficients, sinr

__all__ = [
    "PowerAllocation",
    "RadarSirCoefficients",
    "AllocationInfeasibleError",
    "SolverError",
    "feasibility",
    "max_min_allocate",
    "uniform_allocate",
]

BUDGET_SLACK = 1e-9
VERIFY_TOL = 1e-7
DEFAULT_REL_TOL = 1e-6


class AllocationInfeasibleError(RuntimeError):
    """No positive SINR target is feasible under the given constraints."""


class SolverError(RuntimeError):
    """The LP solver failed for a reason other than proven infeasibility."""


@dataclass(frozen=True)
class PowerAllocation:
    """Per-grid-symbol powers: one per user plus the radar stream."""

    eta_users: np.ndarray
    eta_radar: float
    budget: float
    achieved_t: float | None = None

    def __post_init__(self):
        eta = np.asarray(self.eta_users, dtype=float)
        object.__setattr__(self, "eta_users", eta)
        if np.any(eta < 0) or self.eta_radar < 0:
            raise ValueError("powers must be nonnegative")
        total = eta.sum() + self.eta_radar
        if total > self.budget * (1.0 + BUDGET_SLACK):
            raise ValueError(f"total power {total} exceeds budget {self.budget}")

    @property
    def total(self) -> float:
        return float(self.eta_users.sum() + self.eta_radar)


@dataclass(frozen=True)
class RadarSirCoefficients:
    """Beam gains entering the radar SIR constraint.

    ``radar_gain`` is ||a a^H w_R||^2 toward the surveillance direction;
    ``user_gains`` the analogous leakage of each user beam.  Both equal
    N_A |a^H w|^2.
    """

    radar_gain: float
    user_gains: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        gains = np.asarray(self.user_gains, dtype=float)
        object.__setattr__(self, "user_gains", gains)
        if self.radar_gain < 0 or np.any(gains < 0):
            raise ValueError("SIR gains must be nonnegative")

    @classmethod
    def from_beams(cls, geom: ArrayGeometry, direction: Direction, beams: BeamformerSet):
        a = steering_vector(geom, direction)
        n_a = geom.n_elements
        radar_gain = n_a * abs(a.conj() @ beams.radar_beam) ** 2
        user_gains = n_a * np.abs(beams.user_beams @ a.conj()) ** 2
        return cls(radar_gain=float(radar_gain), user_gains=user_gains)


def _lp_rows(coeffs, sir_coeffs, budget, rho_star, t):
    """Nondimensionalized constraint rows in x = eta / budget.

    Variable order is [x_R, x_1, ..., x_K].  Returns inequality rows
    (A_ub x <= b_ub: per-user SINR >= t and the radar SIR) plus the budget
    as an equality (sum x = 1).  Saturating the budget is without loss of
    generality -- every SINR grows under uniform upscaling -- and pinning
    the solution away from the origin keeps the LP well-scaled when the
    noise term is negligible against interference, where x = 0 would
    otherwise sit within solver tolerance of feasibility.
    """
    k = coeffs.n_users
    rows, rhs = [], []
    for i in range(k):
        row = np.zeros(k + 1)
        row[0] = t * coeffs.radar_leakage[i]
        row[1:] = t * coeffs.interference[i]
        row[1 + i] -= coeffs.signal_gain[i]
        rows.append(row)
        rhs.append(-t * coeffs.noise_var / budget)
    sir_row = np.zeros(k + 1)
    sir_row[0] = -sir_coeffs.radar_gain
    sir_row[1:] = rho_star * sir_coeffs.user_gains
    rows.append(sir_row)
    rhs.append(0.0)

    a_ub = np.array(rows)
    b_ub = np.array(rhs)
    norms = np.maximum(np.abs(a_ub).max(axis=1), np.abs(b_ub))
    norms[norms == 0] = 1.0
    a_eq = np.ones((1, k + 1))
    b_eq = np.ones(1)
    return a_ub / norms[:, None], b_ub / norms, a_eq, b_eq


def feasibility(
    coeffs: RateCoefficients,
    sir_coeffs: RadarSirCoefficients,
    budget: float,
    rho_star: float,
    t: float,
) -> np.ndarray | None:
    """Find powers meeting SINR target t, the budget, and the radar SIR.

    Returns the power vector [eta_R, eta_1, ..., eta_K], or None when the
    solver proves infeasibility.  Solver failures raise SolverError.
    """
    if t < 0 or rho_star < 0:
        raise ValueError("t and rho_star must be nonnegative")
    if budget <= 0:
        raise ValueError("budget must be positive")
    if t == 0:
        return np.zeros(coeffs.n_users + 1)

    a_ub, b_ub, a_eq, b_eq = _lp_rows(coeffs, sir_coeffs, budget, rho_star, t)
    # Minimizing the radar power (rather than a zero objective) keeps the
    # LP well-posed for the solver; any feasible point serves the
    # bisection.  Near the feasibility boundary the dual simplex can leave
    # the status undecided; disabling presolve or switching to the
    # interior-point method reaches a definitive verdict.
    cost = np.zeros(coeffs.n_users + 1)
    cost[0] = 1.0
    attempts = (
        {"method": "highs"},
        {"method": "highs", "options": {"presolve": False}},
        {"method": "highs-ipm"},
    )
    for attempt in attempts:
        res = linprog(
            c=cost,
            A_ub=a_ub,
            b_ub=b_ub,
            A_eq=a_eq,
            b_eq=b_eq,
            bounds=(0, None),
            **attempt,
        )
        if res.status != 4:
            break
    if res.status == 2:
        return None
    if res.status != 0:
        raise SolverError(f"linprog status {res.status}: {res.message}")
    x = np.clip(res.x, 0.0, None)
    violation = max(
        (a_ub @ x - b_ub).max(), np.abs(a_eq @ x - b_eq).max()
    )
    if violation > VERIFY_TOL:
        raise SolverError(f"feasible point violates constraints by {violation:.3e}")
    return x * budget


def max_min_allocate(
    coeffs: RateCoefficients,
    sir_coeffs: RadarSirCoefficients,
    budget: float,
    rho_star: float = 0.0,
    t_min: float = 0.0,
    t_max: float | None = None,
    tol_eps: float | None = None,
) -> PowerAllocation:
    """Bisection on the common SINR target over linear feasibility checks.

    ``t_max`` defaults to max_k g_k * budget / sigma_z^2, an upper bound on
    any single-user SINR (the true optimum can be orders of magnitude below
    it when interference dominates noise, so convergence is judged relative
    to the certified feasible target, not the initial bracket).  The last
    feasible point is rescaled to saturate the budget (scaling every power
    up keeps the SIR ratio and only raises SINRs) and returned with the
    certified minimum SINR.  ``tol_eps``, if given, is an absolute gap at
    which bisection stops instead.
    """
    if t_max is None:
        t_max = float(np.max(coeffs.signal_gain) * budget / coeffs.noise_var)
    if tol_eps is not None and tol_eps <= 0:
        raise ValueError("tol_eps must be positive")
    # Absolute floor so a truly infeasible problem still terminates.
    t_floor = 1e-12 * t_max

    # Guarantee the bracket: t_max must be infeasible.
    for _ in range(8):
        if feasibility(coeffs, sir_coeffs, budget, rho_star, t_max) is None:
            break
        t_max *= 2.0
    else:
        raise SolverError("could not bracket the max-min SINR from above")

    best = feasibility(coeffs, sir_coeffs, budget, rho_star, t_min)
    if best is None:
        raise AllocationInfeasibleError(f"infeasible already at t = {t_min}")

    def converged(lo, hi):
        if tol_eps is not None:
            return hi - lo <= tol_eps
        return hi - lo <= DEFAULT_REL_TOL * max(lo, t_floor)

    while not converged(t_min, t_max):
        t = 0.5 * (t_max + t_min)
        point = feasibility(coeffs, sir_coeffs, budget, rho_star, t)
        if point is not None:
            t_min, best = t, point
        else:
            t_max = t

    if t_min == 0.0 and best.max() == 0.0:
        raise AllocationInfeasibleError(
            "no strictly positive SINR target is feasible (radar SIR constraint "
            "incompatible with the budget)"
        )

    eta_radar, eta_users = float(best[0]), best[1:]
    total = eta_users.sum() + eta_radar
    if total > 0:
        scale = budget / total
        eta_users = eta_users * scale
        eta_radar = eta_radar * scale
    achieved = float(np.min(sinr(coeffs, (eta_users, eta_radar))))
    # A certified target far above the point's true min-SINR means the LP
    # accepted a spurious near-origin point whose violation (proportional
    # to t) fell below the solver tolerance; the problem is infeasible.
    if achieved < 0.5 * t_min:
        raise AllocationInfeasibleError(
            "no strictly positive SINR target is feasible (radar SIR constraint "
            "incompatible with the budget)"
        )
    return PowerAllocation(
        eta_users=eta_users, eta_radar=eta_radar, budget=budget, achieved_t=achieved
    )


def uniform_allocate(
    p_dl: float, rcr: float, n_users: int, n_subcarriers: int, n_symbols: int
) -> PowerAllocation:
    """Even split: P_DL/(K M N) per user, RCR * P_DL/(M N) for the radar."""
    if p_dl <= 0:
        raise ValueError("downlink power budget must be positive")
    if rcr < 0:
        raise ValueError("radar-communication ratio must be nonnegative")
    grid = n_subcarriers * n_symbols
    eta_users = np.full(n_users, p_dl / (n_users * grid))
    eta_radar = rcr * p_dl / grid
    return PowerAllocation(
        eta_users=eta_users,
        eta_radar=eta_radar,
        budget=(1.0 + rcr) * p_dl / grid,
    )

"""Multi-strain SEIR dynamics with reinfection and a shared mitigation control.

The population is tracked as a total ``P`` together with per-strain exposed,
infected and removed compartments.  Susceptibles are algebraic,

    S_j = P - E_j - I_j - R_j,

so every strain sees its own susceptible pool.  Strains interact only through
deaths (which drain ``P``) and through the mitigation factor ``u`` in
``[0, 1]`` that scales every transmission term by ``1 - u``.

Units are persons and days throughout.  The mitigation value is a plain float;
operations validate it on entry.  All types are immutable and every function
is pure, so the module can be used freely from concurrent callers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateControlError, DomainError, StateConsistencyError

# Negative values within this fraction of the reference population are treated
# as integrator round-off; anything below is a hard error.
NEGATIVE_TOLERANCE = 1e-9


def check_control(u: float) -> float:
    if not 0.0 <= u <= 1.0:
        raise DomainError(f"mitigation value must lie in [0, 1], got {u!r}")
    return float(u)


@dataclass(frozen=True)
class StrainParams:
    """Per-strain rates (1/day) and the day the strain enters the system.

    ``beta`` is the transmission rate per person per day, ``sigma`` the
    inverse latency, ``gamma`` the recovery rate, ``delta`` the rate of
    immunity loss and ``mu`` the disease death rate.  ``mu = 0`` is accepted
    for exploratory runs; closed-form equilibrium analysis additionally
    requires ``mu > 0`` (see :meth:`require_positive_mu`).
    """

    beta: float
    sigma: float
    gamma: float
    delta: float
    mu: float
    activation_time: float = 0.0

    def __post_init__(self):
        for name in ("beta", "sigma", "gamma", "delta"):
            value = getattr(self, name)
            if not value > 0.0:
                raise DomainError(f"strain parameter {name} must be > 0, got {value!r}")
        if not self.mu >= 0.0:
            raise DomainError(f"strain parameter mu must be >= 0, got {self.mu!r}")
        if not self.activation_time >= 0.0:
            raise DomainError(
                f"activation_time must be >= 0, got {self.activation_time!r}"
            )

    def require_positive_mu(self) -> None:
        """Strict validation mode for analysis that divides by ``mu``."""
        if not self.mu > 0.0:
            raise DomainError(
                "equilibrium analysis requires mu > 0 for every strain"
            )


def _strain_vector(values, name: str, n: int | None = None) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim == 0 and n is not None:
        arr = np.full(n, float(arr))
    if arr.ndim != 1:
        raise DomainError(f"{name} must be a one-dimensional sequence")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class EpidemicState:
    """Population snapshot: time, total population and per-strain E, I, R."""

    t: float
    P: float
    E: np.ndarray
    I: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        for name in ("E", "I", "R"):
            object.__setattr__(self, name, _strain_vector(getattr(self, name), name))
        if not (len(self.E) == len(self.I) == len(self.R)):
            raise DomainError("E, I and R must have one entry per strain")

    @property
    def n_strains(self) -> int:
        return len(self.E)

    def susceptible_all(self) -> np.ndarray:
        """Algebraic susceptible pool of every strain."""
        return self.P - self.E - self.I - self.R

    def validate(self, reference_population: float | None = None) -> None:
        """Check non-negativity of P, compartments and susceptible pools.

        Values within ``NEGATIVE_TOLERANCE`` times the reference population of
        zero are accepted as round-off.
        """
        ref = self.P if reference_population is None else reference_population
        tol = NEGATIVE_TOLERANCE * max(ref, 1.0)
        if not self.P >= -tol or not math.isfinite(self.P):
            raise StateConsistencyError(f"total population invalid: P={self.P!r}")
        for name in ("E", "I", "R"):
            arr = getattr(self, name)
            if not np.all(np.isfinite(arr)):
                raise StateConsistencyError(f"non-finite values in {name}")
            if np.any(arr < -tol):
                raise StateConsistencyError(
                    f"negative compartment in {name}: min={arr.min()!r}"
                )
        s = self.susceptible_all()
        if np.any(s < -tol):
            raise StateConsistencyError(
                f"susceptible pool negative: min={s.min()!r}"
            )

    def clamped(self, reference_population: float | None = None) -> "EpidemicState":
        """Copy with round-off negatives (within tolerance) set to zero."""
        ref = self.P if reference_population is None else reference_population
        tol = NEGATIVE_TOLERANCE * max(ref, 1.0)

        def clamp_arr(arr):
            out = np.array(arr, dtype=float)
            mask = (out < 0.0) & (out >= -tol)
            out[mask] = 0.0
            return out

        p = 0.0 if -tol <= self.P < 0.0 else self.P
        return EpidemicState(
            t=self.t, P=p, E=clamp_arr(self.E), I=clamp_arr(self.I), R=clamp_arr(self.R)
        )


@dataclass(frozen=True)
class StateDerivative:
    """Time derivative of an :class:`EpidemicState` (same shape, per day)."""

    dP: float
    dE: np.ndarray
    dI: np.ndarray
    dR: np.ndarray

    def __post_init__(self):
        for name in ("dE", "dI", "dR"):
            object.__setattr__(self, name, _strain_vector(getattr(self, name), name))


def _check_strains(state: EpidemicState, params: Sequence[StrainParams]) -> None:
    if len(params) == 0:
        raise DomainError("at least one strain is required")
    if len(params) != state.n_strains:
        raise DomainError(
            f"state has {state.n_strains} strain(s) but {len(params)} parameter sets given"
        )


def _check_inactive_blank(state: EpidemicState, params: Sequence[StrainParams]) -> None:
    tol = NEGATIVE_TOLERANCE * max(state.P, 1.0)
    for j, p in enumerate(params):
        if state.t < p.activation_time:
            if abs(state.E[j]) > tol or abs(state.I[j]) > tol or abs(state.R[j]) > tol:
                raise StateConsistencyError(
                    f"strain {j} activates at day {p.activation_time} but has "
                    f"non-zero compartments at t={state.t}"
                )


def rhs_lists(t, P, E, I, R, beta, sigma, gamma, delta, mu, activation, u):
    """Core right-hand side on plain Python lists.

    This is the single implementation of the compartment flows; the public
    wrappers and the integrator both call it.  Strains not yet activated
    contribute nothing and receive a zero derivative.  Returns
    ``(dP, dE, dI, dR)`` with lists for the per-strain parts.
    """
    n = len(beta)
    dE = [0.0] * n
    dI = [0.0] * n
    dR = [0.0] * n
    deaths = 0.0
    w = 1.0 - u
    for j in range(n):
        if t < activation[j]:
            continue
        e = E[j]
        i = I[j]
        r = R[j]
        s = P - e - i - r
        newly_exposed = w * beta[j] * s * i
        dE[j] = newly_exposed - sigma[j] * e
        dI[j] = sigma[j] * e - (mu[j] + gamma[j]) * i
        dR[j] = gamma[j] * i - delta[j] * r
        deaths += mu[j] * i
    return -deaths, dE, dI, dR


def param_lists(params: Sequence[StrainParams]):
    """Unpack strain parameters into parallel lists for the hot loops."""
    return (
        [p.beta for p in params],
        [p.sigma for p in params],
        [p.gamma for p in params],
        [p.delta for p in params],
        [p.mu for p in params],
        [p.activation_time for p in params],
    )


def derivatives(
    state: EpidemicState, params: Sequence[StrainParams], u: float
) -> StateDerivative:
    """Time derivative of the epidemic state under mitigation ``u``.

    dP/dt   = -sum_j mu_j I_j
    dE_j/dt = (1-u) beta_j S_j I_j - sigma_j E_j
    dI_j/dt = sigma_j E_j - (mu_j + gamma_j) I_j
    dR_j/dt = gamma_j I_j - delta_j R_j

    with the susceptible pool taken algebraically.  Strains whose activation
    day lies in the future must hold zero compartments and get a zero
    derivative.
    """
    _check_strains(state, params)
    check_control(u)
    state.validate()
    _check_inactive_blank(state, params)
    beta, sigma, gamma, delta, mu, act = param_lists(params)
    dP, dE, dI, dR = rhs_lists(
        state.t, state.P, state.E.tolist(), state.I.tolist(), state.R.tolist(),
        beta, sigma, gamma, delta, mu, act, u,
    )
    return StateDerivative(dP=dP, dE=np.array(dE), dI=np.array(dI), dR=np.array(dR))


def susceptible(state: EpidemicState, j: int) -> float:
    """Susceptible pool of strain ``j``: P - E_j - I_j - R_j."""
    if not 0 <= j < state.n_strains:
        raise DomainError(f"strain index {j} out of range")
    s = state.P - state.E[j] - state.I[j] - state.R[j]
    if s < -NEGATIVE_TOLERANCE * max(state.P, 1.0):
        raise StateConsistencyError(
            f"susceptible pool of strain {j} is negative ({s!r}); "
            "state is inconsistent or integration has blown up"
        )
    return float(s)


def susceptible_derivative(
    state: EpidemicState, params: Sequence[StrainParams], u: float, j: int
) -> float:
    """Differential form of the susceptible pool of strain ``j``.

    dS_j/dt = -(1-u) beta_j S_j I_j + delta_j R_j - sum_{i != j} mu_i I_i

    Kept as a consistency oracle against the algebraic form used everywhere
    else: it must equal d/dt (P - E_j - I_j - R_j) assembled from
    :func:`derivatives`.
    """
    _check_strains(state, params)
    check_control(u)
    if not 0 <= j < state.n_strains:
        raise DomainError(f"strain index {j} out of range")
    state.validate()
    p = params[j]
    s_j = state.P - state.E[j] - state.I[j] - state.R[j]
    transmission = (1.0 - u) * p.beta * s_j * state.I[j]
    other_deaths = 0.0
    for i, q in enumerate(params):
        if i != j and state.t >= q.activation_time:
            other_deaths += q.mu * state.I[i]
    return -transmission + p.delta * state.R[j] - other_deaths


def full_system_rhs(
    P: float,
    S: np.ndarray,
    E: np.ndarray,
    I: np.ndarray,
    R: np.ndarray,
    params: Sequence[StrainParams],
    u: float,
    t: float | None = None,
):
    """Right-hand side of the full (4n+1)-dimensional differential system.

    Here ``S`` is an independent coordinate vector rather than the algebraic
    pool, which is the form the adjoint equations and the stability Jacobian
    are written against.  ``t=None`` treats every strain as active.
    Returns ``(dP, dS, dE, dI, dR)`` as floats/arrays.
    """
    n = len(params)
    check_control(u)
    S = np.asarray(S, dtype=float)
    E = np.asarray(E, dtype=float)
    I = np.asarray(I, dtype=float)
    R = np.asarray(R, dtype=float)
    if not (len(S) == len(E) == len(I) == len(R) == n):
        raise DomainError("coordinate vectors must have one entry per strain")
    active = np.array(
        [t is None or t >= p.activation_time for p in params], dtype=bool
    )
    beta = np.array([p.beta for p in params])
    sigma = np.array([p.sigma for p in params])
    gamma = np.array([p.gamma for p in params])
    delta = np.array([p.delta for p in params])
    mu = np.array([p.mu for p in params])
    w = 1.0 - u

    transmission = np.where(active, w * beta * S * I, 0.0)
    death_terms = np.where(active, mu * I, 0.0)
    total_deaths = death_terms.sum()
    dP = -total_deaths
    dS = np.where(active, -transmission + delta * R - (total_deaths - death_terms), 0.0)
    dE = np.where(active, transmission - sigma * E, 0.0)
    dI = np.where(active, sigma * E - (mu + gamma) * I, 0.0)
    dR = np.where(active, gamma * I - delta * R, 0.0)
    return dP, dS, dE, dI, dR


@dataclass(frozen=True)
class ReproductionNumber:
    """Reproduction number with its per-strain terms and the binding strain."""

    value: float
    per_strain: np.ndarray
    argmax_strain: int

    def __post_init__(self):
        object.__setattr__(
            self, "per_strain", _strain_vector(self.per_strain, "per_strain")
        )


def reproduction_number(
    params: Sequence[StrainParams], S_bar, u: float
) -> ReproductionNumber:
    """R0 = max_j (1-u) beta_j S_bar_j / (mu_j + gamma_j).

    ``S_bar`` may be a scalar (shared by all strains) or one value per strain.
    The infection-free state is locally asymptotically stable when the
    returned value is below one.
    """
    if len(params) == 0:
        raise DomainError("reproduction number needs at least one strain")
    check_control(u)
    s_bar = _strain_vector(S_bar, "S_bar", n=len(params))
    if len(s_bar) != len(params):
        raise DomainError("S_bar must provide one value per strain")
    if np.any(s_bar < 0):
        raise DomainError("S_bar values must be >= 0")
    beta = np.array([p.beta for p in params])
    mu = np.array([p.mu for p in params])
    gamma = np.array([p.gamma for p in params])
    terms = (1.0 - u) * beta * s_bar / (mu + gamma)
    k = int(np.argmax(terms))
    return ReproductionNumber(value=float(terms[k]), per_strain=terms, argmax_strain=k)


def min_stabilizing_control(params: Sequence[StrainParams], S_bar) -> float:
    """Smallest constant mitigation that brings the reproduction number to one.

    u_min = max(0, 1 - min_j (mu_j + gamma_j) / (beta_j S_bar_j)); only the
    most transmissible strain binds.  Any u strictly above the returned value
    gives R0 < 1.
    """
    if len(params) == 0:
        raise DomainError("min_stabilizing_control needs at least one strain")
    s_bar = _strain_vector(S_bar, "S_bar", n=len(params))
    if np.any(s_bar <= 0):
        raise DomainError("S_bar values must be > 0")
    beta = np.array([p.beta for p in params])
    mu = np.array([p.mu for p in params])
    gamma = np.array([p.gamma for p in params])
    u_min = 1.0 - float(np.min((mu + gamma) / (beta * s_bar)))
    return max(0.0, u_min)


@dataclass(frozen=True)
class EquilibriumPoint:
    """Fixed point of the per-strain compartments; ``kind`` is trivial or not.

    ``feasible`` is False whenever any compartment is negative, which makes
    the point biologically meaningless.
    """

    kind: str
    S: np.ndarray
    E: np.ndarray
    I: np.ndarray
    R: np.ndarray
    feasible: bool

    def __post_init__(self):
        for name in ("S", "E", "I", "R"):
            object.__setattr__(self, name, _strain_vector(getattr(self, name), name))


def nontrivial_equilibrium(
    params: Sequence[StrainParams], u: float, I_bar_ref: float
) -> EquilibriumPoint:
    """Closed-form two-strain equilibrium parameterised by the free I_bar_2.

    The balance equations force

        S_bar_j = (mu_j + gamma_j) / ((1-u) beta_j)
        I_bar_1 = -(mu_2 / mu_1) I_bar_2

    so any positive choice of I_bar_2 drives I_bar_1 negative and the point is
    flagged infeasible.  ``I_bar_ref = 0`` collapses to the infection-free
    point.  Requires ``mu > 0`` for both strains and ``u < 1``.
    """
    if len(params) != 2:
        raise DomainError("closed-form equilibrium is defined for exactly two strains")
    check_control(u)
    for p in params:
        p.require_positive_mu()
    if u == 1.0:
        raise DegenerateControlError(
            "u = 1 removes all transmission; the equilibrium susceptible pool "
            "S_bar = (mu + gamma) / ((1-u) beta) is undefined"
        )
    p1, p2 = params
    w = 1.0 - u
    i2 = float(I_bar_ref)
    s1 = (p1.mu + p1.gamma) / (w * p1.beta)
    s2 = (p2.mu + p2.gamma) / (w * p2.beta)
    i1 = -(p2.mu / p1.mu) * i2
    e1 = -((p1.mu + p1.gamma) * p2.mu * i2) / (p1.mu * p1.sigma)
    e2 = (p2.mu + p2.gamma) * i2 / p2.sigma
    r1 = -(p1.gamma * p2.mu * i2) / (p1.mu * p1.delta)
    r2 = p2.gamma * i2 / p2.delta
    point = EquilibriumPoint(
        kind="trivial" if i2 == 0.0 else "non-trivial",
        S=[s1, s2],
        E=[e1, e2],
        I=[i1, i2],
        R=[r1, r2],
        feasible=not (
            i1 < 0 or i2 < 0 or e1 < 0 or e2 < 0 or r1 < 0 or r2 < 0 or s1 < 0 or s2 < 0
        ),
    )
    return point


def equilibrium_residuals(
    point: EquilibriumPoint, params: Sequence[StrainParams], u: float
) -> np.ndarray:
    """Relative residuals of the balance equations at an equilibrium point.

    Each equation's residual is normalised by the largest magnitude among its
    constituent flow terms (zero-flow equations report zero).  Ordering
    matches the Jacobian coordinates: P, then S_j, E_j, I_j, R_j per strain.
    """
    n = len(params)
    if not (len(point.S) == n):
        raise DomainError("equilibrium point and parameter list disagree on strains")
    check_control(u)
    beta = np.array([p.beta for p in params])
    sigma = np.array([p.sigma for p in params])
    gamma = np.array([p.gamma for p in params])
    delta = np.array([p.delta for p in params])
    mu = np.array([p.mu for p in params])
    w = 1.0 - u
    S, E, I, R = point.S, point.E, point.I, point.R

    def rel(residual, *terms):
        scale = max(abs(t) for t in terms) if terms else 0.0
        if scale == 0.0:
            return abs(residual)
        return abs(residual) / scale

    death_terms = mu * I
    out = np.empty(4 * n + 1)
    out[0] = rel(death_terms.sum(), *death_terms)
    transmission = w * beta * S * I
    for j in range(n):
        other = death_terms.sum() - death_terms[j]
        out[1 + j] = rel(
            -transmission[j] + delta[j] * R[j] - other,
            transmission[j], delta[j] * R[j], other,
        )
        out[1 + n + j] = rel(
            transmission[j] - sigma[j] * E[j], transmission[j], sigma[j] * E[j]
        )
        out[1 + 2 * n + j] = rel(
            sigma[j] * E[j] - (mu[j] + gamma[j]) * I[j],
            sigma[j] * E[j], (mu[j] + gamma[j]) * I[j],
        )
        out[1 + 3 * n + j] = rel(
            gamma[j] * I[j] - delta[j] * R[j], gamma[j] * I[j], delta[j] * R[j]
        )
    return out


def analytic_eigenvalues(
    params: Sequence[StrainParams], S_bar, u: float
) -> np.ndarray:
    """Eigenvalues of the linearisation at the infection-free point.

    Deterministic ordering of the 4n+1 values: first n+1 zeros (the neutral
    P and S_j directions), then -delta_j per strain, then per strain the
    plus and minus roots

        -(mu+gamma+sigma)/2 +- sqrt(4 (1-u) beta sigma S_bar + (mu+gamma-sigma)^2)/2.

    Returned as complex numbers; for admissible inputs the discriminant is
    non-negative so all values are real.
    """
    if len(params) == 0:
        raise DomainError("analytic_eigenvalues needs at least one strain")
    check_control(u)
    n = len(params)
    s_bar = _strain_vector(S_bar, "S_bar", n=n)
    if np.any(s_bar < 0):
        raise DomainError("S_bar values must be >= 0")
    out = np.zeros(4 * n + 1, dtype=complex)
    for j, p in enumerate(params):
        out[n + 1 + j] = -p.delta
    for j, p in enumerate(params):
        half_trace = -0.5 * (p.mu + p.gamma + p.sigma)
        disc = 4.0 * (1.0 - u) * p.beta * p.sigma * s_bar[j] + (
            p.mu + p.gamma - p.sigma
        ) ** 2
        half_root = 0.5 * np.sqrt(complex(disc))
        out[2 * n + 1 + 2 * j] = half_trace + half_root
        out[2 * n + 1 + 2 * j + 1] = half_trace - half_root
    out.setflags(write=False)
    return out

"""Rearrangement-invariant and oscillation-based function space norms.

Everything here reduces a sampled field to scalar summaries:

* decreasing rearrangement f* as an exact step function over cell measures,
* Lorentz–Zygmund quasi-norms  ‖ s^{1/q−1/ϱ}(1 + log(|Ω|/s))^β f*(s) ‖_{L^ϱ(0,|Ω|)}
  with exact piecewise integration over the rearrangement steps,
* Orlicz (Luxemburg) norms  inf{λ : ∫ A(|f|/λ) ≤ 1}  by bisection,
* the Young-function transforms that govern the Orlicz-target regularity of
  the p-Laplace system, together with a balance report that decides whether
  F(E(t)/γ) ≤ γ A(t)/t is satisfiable for some finite γ,
* Campanato/Morrey sup-type seminorms over a deterministic ball sample, and
* weight transforms (Dini integral, Spanne-type ϖ, and the decay weight μ)
  used by the continuity criteria.

Young and weight functions constructed from the built-in families carry a
symbolic tag; transforms and balance checks use closed forms and exact
exponent arithmetic when the tag allows and deterministic quadrature
otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import (
    FinitenessFailure,
    InadmissibleParams,
    NoAdmissibleBalls,
    PRangeError,
    QuadratureFailure,
    SearchRangeExhausted,
)
from .field_grid import Ball, GridField, ball_cells, ball_oscillation

__all__ = [
    "Rearrangement",
    "rearrange",
    "LorentzParams",
    "lorentz_zygmund_norm",
    "YoungFunction",
    "young_power",
    "young_zygmund",
    "young_exp",
    "young_dexp",
    "young_linf",
    "young_table",
    "luxemburg_norm",
    "TransformPair",
    "BalanceReport",
    "young_transforms",
    "potential_young_transforms",
    "balance_report",
    "WeightFunction",
    "weight_power",
    "weight_one",
    "WeightTransforms",
    "weight_transforms",
    "SupScanResult",
    "campanato_seminorm",
    "morrey_norm",
    "EnvelopeReport",
    "monotone_envelope",
]


# ---------------------------------------------------------------------------
# decreasing rearrangement


@dataclass(frozen=True)
class Rearrangement:
    """Step representation of f*: ``values`` nonincreasing, one step of width
    ``cell_measure`` per cell, over the measure interval (0, |Ω|]."""

    values: np.ndarray
    cell_measure: float
    total_measure: float

    @property
    def breakpoints(self) -> np.ndarray:
        return (np.arange(1, self.values.size + 1)) * self.cell_measure

    def __call__(self, s) -> np.ndarray:
        """Evaluate f*(s) (right-continuous; zero beyond |Ω|)."""
        s = np.asarray(s, dtype=float)
        idx = np.minimum(
            np.searchsorted(self.breakpoints, s, side="left"), self.values.size - 1
        )
        out = self.values[idx]
        return np.where(s > self.total_measure, 0.0, out)

    def integral(self) -> float:
        """∫₀^{|Ω|} f* ds = ∫_Ω |f| (equimeasurability of the magnitude)."""
        return float(self.values.sum() * self.cell_measure)


def rearrange(f: GridField) -> Rearrangement:
    """Decreasing rearrangement of the cell magnitudes of ``f``."""
    mag = f.magnitude().values[0].ravel()
    values = np.sort(mag)[::-1].copy()
    values.flags.writeable = False
    meas = f.geometry.cell_measure
    return Rearrangement(values, meas, meas * values.size)


# ---------------------------------------------------------------------------
# Lorentz–Zygmund quasi-norms


@dataclass(frozen=True)
class LorentzParams:
    """Indices (q, ϱ, β); ``math.inf`` is allowed for q and ϱ.

    Admissible: q ∈ (1, ∞], ϱ ∈ (0, ∞], β ∈ ℝ — or the degenerate corner
    q = 1, ϱ ∈ (0, 1], β ≥ 0.  Anything else does not define a (quasi-)normed
    function space and is rejected.
    """

    q: float
    rho: float
    beta: float = 0.0

    def __post_init__(self):
        q, rho, beta = self.q, self.rho, self.beta
        if not (rho > 0):
            raise InadmissibleParams(f"need rho > 0, got {rho}")
        if q > 1:
            return
        if q == 1:
            if rho <= 1 and beta >= 0:
                return
            raise InadmissibleParams(
                f"q = 1 requires rho in (0,1] and beta >= 0, got rho={rho}, beta={beta}"
            )
        raise InadmissibleParams(f"need q > 1 (or the q = 1 corner), got q={q}")


def _lz_piece_integral(s0: float, s1: float, a: float, b: float, M: float) -> float:
    """∫_{s0}^{s1} s^{a−1} (1 + log(M/s))^b ds, exactly where a power law or a
    pure log power makes it elementary, by adaptive quadrature otherwise."""
    if s1 <= s0:
        return 0.0
    if b == 0.0:
        if a == 0.0:
            return math.log(s1 / s0) if s0 > 0 else math.inf
        return (s1**a - (s0**a if s0 > 0 else 0.0)) / a
    if a == 0.0:
        # substitute u = 1 + log(M/s): du = -ds/s, pure power in u
        u1 = 1.0 + math.log(M / s1)
        if s0 <= 0:
            # u0 = inf: the integral converges exactly when b < -1
            if b >= -1:
                return math.inf
            return -(u1 ** (b + 1.0)) / (b + 1.0)
        u0 = 1.0 + math.log(M / s0)
        if b == -1.0:
            return math.log(u0 / u1)
        return (u0 ** (b + 1.0) - u1 ** (b + 1.0)) / (b + 1.0)
    if a < 0 and s0 <= 0:
        return math.inf

    def fn(s):
        return s ** (a - 1.0) * (1.0 + math.log(M / s)) ** b

    val, err = integrate.quad(fn, s0, s1, limit=200, epsabs=1e-12, epsrel=1e-10)
    if not math.isfinite(val) or err > 1e-6 * max(abs(val), 1e-8):
        raise QuadratureFailure(
            f"step integral on ({s0:g}, {s1:g}) reached error {err:g}"
        )
    return val


def _lz_weight_sup(s0: float, s1: float, c: float, beta: float, M: float) -> float:
    """sup of s^c (1 + log(M/s))^β over [s0, s1] (s0 may be 0)."""

    def w(s: float) -> float:
        return s**c * (1.0 + math.log(M / s)) ** beta

    cands = [w(s1)]
    if s0 > 0:
        cands.append(w(s0))
    else:
        if c > 0:
            cands.append(0.0)
        elif c == 0:
            cands.append(math.inf if beta > 0 else (1.0 if beta == 0 else 0.0))
        else:
            cands.append(math.inf)
    if c != 0 and beta != 0 and beta / c > 0:
        s_star = M * math.exp(1.0 - beta / c)
        if (s0 if s0 > 0 else 0.0) < s_star < s1:
            cands.append(w(s_star))
    return max(cands)


def lorentz_zygmund_norm(f: GridField | Rearrangement, params: LorentzParams) -> float:
    """Lorentz–Zygmund quasi-norm of ``f`` over its domain.

    For ϱ < ∞ the integral is a finite sum over rearrangement steps, each
    step contributing its value times an exact (or adaptively quadratured)
    weight integral; for ϱ = ∞ the sup is resolved per step including the
    interior critical point of the weight.  With (q, q, 0) this reproduces
    the Lebesgue norm exactly, since the weight integrates to step widths.
    """
    r = f if isinstance(f, Rearrangement) else rearrange(f)
    q, rho, beta = params.q, params.rho, params.beta
    M = r.total_measure
    values = r.values
    bp = r.breakpoints
    inv_q = 0.0 if math.isinf(q) else 1.0 / q

    if math.isinf(rho):
        best = 0.0
        s_prev = 0.0
        for v, s_next in zip(values, bp):
            if v > 0:
                best = max(best, v * _lz_weight_sup(s_prev, s_next, inv_q, beta, M))
            s_prev = s_next
        return best

    a = rho * inv_q
    b = rho * beta
    total = 0.0
    s_prev = 0.0
    for v, s_next in zip(values, bp):
        if v > 0:
            piece = _lz_piece_integral(s_prev, s_next, a, b, M)
            if math.isinf(piece):
                return math.inf
            total += v**rho * piece
        s_prev = s_next
    return total ** (1.0 / rho)


# ---------------------------------------------------------------------------
# Young functions and the Luxemburg norm


@dataclass(frozen=True)
class YoungFunction:
    """Young function A with a vectorized evaluator and an optional symbolic
    tag.  Tags ``power``/``zygmund`` carry exact exponents (t-power ``sigma``
    and log-power ``logexp``) used by closed-form transforms and the balance
    report; untagged functions fall back to deterministic quadrature.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    tag: str = "custom"
    sigma: float | None = None
    logexp: float = 0.0
    coeff: float = 1.0
    label: str = "A"

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        with np.errstate(over="ignore"):
            return self.fn(t)

    def inverse(self, y: float, hi: float = 1e12) -> float:
        """Generalized inverse by bisection on the monotone evaluator."""
        lo = 0.0
        if not (self(hi) >= y):
            raise SearchRangeExhausted(
                f"A({hi:g}) < {y:g}; inverse out of range", bracket=(lo, hi)
            )
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self(mid) >= y:
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)

    def check_convexity(self, t_lo: float = 1e-4, t_hi: float = 1e4,
                        points: int = 200) -> bool:
        """Discrete convexity of A on a log-spaced table (finite part only)."""
        t = np.geomspace(t_lo, t_hi, points)
        y = self(t)
        ok = np.isfinite(y)
        t, y = t[ok], y[ok]
        if t.size < 3:
            return True
        slopes = np.diff(y) / np.diff(t)
        return bool(np.all(np.diff(slopes) >= -1e-9 * np.abs(slopes[1:]) - 1e-300))


def young_power(q: float, coeff: float = 1.0) -> YoungFunction:
    """A(t) = c·t^q (q ≥ 1)."""
    if q < 1:
        raise InadmissibleParams(f"power Young functions need q >= 1, got {q}")
    return YoungFunction(lambda t: coeff * t**q, "power", sigma=q, coeff=coeff,
                         label=f"{coeff:g}*t^{q:g}" if coeff != 1 else f"t^{q:g}")


def young_zygmund(q: float, beta: float, coeff: float = 1.0) -> YoungFunction:
    """A(t) = c·t^q·log(e+t)^β."""
    if q < 1:
        raise InadmissibleParams(f"Zygmund Young functions need q >= 1, got {q}")
    return YoungFunction(
        lambda t: coeff * t**q * np.log(np.e + t) ** beta,
        "zygmund", sigma=q, logexp=beta, coeff=coeff,
        label=f"t^{q:g}*log^{beta:g}",
    )


def young_exp(beta: float = 1.0) -> YoungFunction:
    """A(t) = exp(t^β) − 1."""
    if beta <= 0:
        raise InadmissibleParams(f"exponential Young functions need beta > 0")
    return YoungFunction(lambda t: np.expm1(t**beta), "exp", label=f"exp(t^{beta:g})-1")


def young_dexp() -> YoungFunction:
    """A(t) = exp(exp(t)) − e."""
    return YoungFunction(lambda t: np.exp(np.exp(t)) - np.e, "dexp", label="exp(exp t)-e")


def young_linf() -> YoungFunction:
    """The L^∞ marker: 0 on [0, 1], ∞ beyond (Luxemburg norm = sup norm)."""
    return YoungFunction(
        lambda t: np.where(t <= 1.0, 0.0, np.inf), "linf", label="linf"
    )


def young_table(t: Sequence[float], A: Sequence[float], label: str = "table") -> YoungFunction:
    """Young function from a monotone table, power-interpolated in log-log
    coordinates and power-extrapolated beyond the table range."""
    t = np.asarray(t, dtype=float)
    A = np.asarray(A, dtype=float)
    if t.ndim != 1 or t.shape != A.shape or t.size < 2:
        raise InadmissibleParams("table needs matching 1-d abscissae and values")
    if np.any(np.diff(t) <= 0) or np.any(np.diff(A) < 0) or np.any(t <= 0) or np.any(A < 0):
        raise InadmissibleParams("table must be increasing in t with A >= 0")
    pos = A > 0
    if pos.sum() < 2:
        raise InadmissibleParams("table needs at least two positive values")
    lt, lA = np.log(t[pos]), np.log(A[pos])

    def fn(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        nz = x > 0
        out[nz] = np.exp(np.interp(np.log(x[nz]), lt, lA,
                                   left=None, right=None))
        # power extrapolation using the end slopes
        lo_slope = (lA[1] - lA[0]) / (lt[1] - lt[0])
        hi_slope = (lA[-1] - lA[-2]) / (lt[-1] - lt[-2])
        below = nz & (np.log(np.maximum(x, 1e-300)) < lt[0])
        above = nz & (np.log(np.maximum(x, 1e-300)) > lt[-1])
        out[below] = np.exp(lA[0] + lo_slope * (np.log(x[below]) - lt[0]))
        out[above] = np.exp(lA[-1] + hi_slope * (np.log(x[above]) - lt[-1]))
        return out

    return YoungFunction(fn, "table", label=label)


def luxemburg_norm(f: GridField, A: YoungFunction, rel_width: float = 1e-10) -> float:
    """Luxemburg norm inf{λ > 0 : ∫_Ω A(|f|/λ) ≤ 1} by bisection.

    Returns ``math.inf`` when no λ in the search range admits the unit
    integral (the structurally infinite case); raises
    :class:`SearchRangeExhausted` if the modular stays finite but above 1 all
    the way to the range cap, which indicates a malformed Young function.
    """
    mag = f.magnitude().values[0].ravel()
    meas = f.geometry.cell_measure
    top = float(mag.max())
    if top == 0.0:
        return 0.0

    def modular(lam: float) -> float:
        with np.errstate(over="ignore", divide="ignore"):
            vals = A(mag / lam)
        return float(np.sum(vals) * meas) if np.all(np.isfinite(vals)) else math.inf

    hi = top
    for _ in range(300):
        if modular(hi) <= 1.0:
            break
        hi *= 2.0
    else:
        if math.isinf(modular(hi)):
            return math.inf
        raise SearchRangeExhausted(
            "modular stayed above 1 up to the range cap", bracket=(top, hi)
        )
    # walk hi down to keep the invariant modular(lo) > 1 >= modular(hi)
    lo = hi / 2.0
    for _ in range(2000):
        if lo <= 0.0:
            return 0.0
        if modular(lo) > 1.0:
            break
        hi = lo
        lo /= 2.0
    else:
        return 0.0

    while hi - lo > rel_width * hi:
        mid = 0.5 * (lo + hi)
        if modular(mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Young-function transforms and the balance condition


@dataclass(frozen=True)
class _Asym:
    """Asymptotic shape c·t^power·(log t)^logpow as t → ∞ (constants dropped)."""

    power: float
    logpow: float


class _Transform:
    """Increasing transform with a pointwise evaluator, an optional exact
    power closed form, and asymptotic exponents for the balance report."""

    def __init__(self, evaluator: Callable[[float], float], asym: _Asym | None,
                 label: str):
        self._eval = evaluator
        self.asym = asym
        self.label = label
        self._cache: dict[float, float] = {}

    def __call__(self, t):
        if np.ndim(t) == 0:
            key = float(t)
            if key not in self._cache:
                self._cache[key] = self._eval(key)
            return self._cache[key]
        return np.array([self(float(x)) for x in np.ravel(t)]).reshape(np.shape(t))


def _power_transform(coeff: float, power: float, label: str) -> _Transform:
    return _Transform(lambda t: coeff * t**power, _Asym(power, 0.0), label)


def _quad_zero_to(fn: Callable[[float], float], t: float) -> float:
    val, err = integrate.quad(fn, 0.0, t, limit=400)
    if not math.isfinite(val):
        raise FinitenessFailure("transform integral diverges")
    if err > 1e-8 * max(abs(val), 1e-30):
        raise QuadratureFailure(f"transform integral error {err:g} at t={t:g}")
    return val


def potential_young_transforms(A: YoungFunction, B: YoungFunction, alpha: float,
                               s: float, n: int) -> "TransformPair":
    """Transform pair (E, F) for the composed potential of order (α, s):

        E(t) = ( ∫₀^t ( τ^{1/(s−1) − 1 + αs'/n} / A(τ)^{αs'/n} )^{n/(n−αs')} dτ )^{s−1−αs/n}
        F(t) = ( ∫₀^t B(τ) / τ^{1 + n/(n−αs)} dτ )^{(n−αs)/n}

    with s' = s/(s−1).  Exact closed forms for power-tagged A and B;
    quadrature plus tag-derived asymptotics otherwise.  Raises
    :class:`FinitenessFailure` when either integral diverges at 0.
    """
    if not (s > 1) or not (alpha > 0):
        raise InadmissibleParams(f"need alpha > 0 and s > 1, got {alpha}, {s}")
    sp = s / (s - 1.0)
    if not (alpha * s < n) or not (alpha * sp < n):
        raise InadmissibleParams(
            f"transforms need alpha*s < n and alpha*s' < n, got "
            f"{alpha * s:g}, {alpha * sp:g} vs n={n}"
        )
    kE = n / (n - alpha * sp)
    outer_E = s - 1.0 - alpha * s / n
    base_exp = (1.0 / (s - 1.0) - 1.0 + alpha * sp / n)
    kF = n / (n - alpha * s)
    outer_F = (n - alpha * s) / n

    # --- E ---
    if A.sigma is not None:
        aE = (base_exp - A.sigma * alpha * sp / n) * kE + 1.0
        if aE <= 0:
            raise FinitenessFailure(
                f"E-integral diverges: interior exponent {aE - 1.0:g} <= -1"
            )
        logE = -A.logexp * (alpha * sp / n) * kE
        if A.tag == "power":
            coeff = (A.coeff ** (-alpha * sp / n * kE) / aE) ** outer_E
            E = _power_transform(coeff, aE * outer_E, f"E[{A.label}]")
        else:
            def e_integrand(tau, _aE=aE, _logE=logE):
                if tau <= 0:
                    return 0.0
                return float(
                    (tau ** base_exp / A(tau) ** (alpha * sp / n)) ** kE
                )

            E = _Transform(
                lambda t: _quad_zero_to(e_integrand, t) ** outer_E,
                _Asym(aE * outer_E, logE * outer_E),
                f"E[{A.label}]",
            )
    else:
        def e_integrand(tau):
            if tau <= 0:
                return 0.0
            return float((tau ** base_exp / A(tau) ** (alpha * sp / n)) ** kE)

        E = _Transform(lambda t: _quad_zero_to(e_integrand, t) ** outer_E,
                       None, f"E[{A.label}]")

    # --- F ---
    if B.sigma is not None:
        bF = B.sigma - kF
        if bF <= 0:
            raise FinitenessFailure(
                f"F-integral diverges: B must grow faster than t^{kF:g} near 0"
            )
        logF = B.logexp
        if B.tag == "power":
            coeff = (B.coeff / bF) ** outer_F
            F = _power_transform(coeff, bF * outer_F, f"F[{B.label}]")
        else:
            def f_integrand(tau, _=None):
                if tau <= 0:
                    return 0.0
                return float(B(tau) / tau ** (1.0 + kF))

            F = _Transform(
                lambda t: _quad_zero_to(f_integrand, t) ** outer_F,
                _Asym(bF * outer_F, logF * outer_F),
                f"F[{B.label}]",
            )
    else:
        def f_integrand(tau):
            if tau <= 0:
                return 0.0
            return float(B(tau) / tau ** (1.0 + kF))

        F = _Transform(lambda t: _quad_zero_to(f_integrand, t) ** outer_F,
                       None, f"F[{B.label}]")

    return TransformPair(E=E, F=F, A=A, B=B, n=n, alpha=alpha, s=s)


def young_transforms(A: YoungFunction, B: YoungFunction, p: float, n: int) -> "TransformPair":
    """Sobolev-scale specialization of the transform pair, 1 < p < n:
    order α = p/(p+1), s = p+1 (so αs = p and αs' = 1)."""
    if not (1.0 < p < n):
        raise PRangeError(f"need 1 < p < n, got p={p}, n={n}")
    return potential_young_transforms(A, B, p / (p + 1.0), p + 1.0, n)


@dataclass
class BalanceReport:
    """Outcome of the balance condition F(E(t)/γ) ≤ γ·A(t)/t for t > t₀."""

    satisfiable: bool
    gamma: float | None
    mode: str  # "symbolic" | "numeric"
    t0: float
    t_max: float
    notes: list[str] = field(default_factory=list)
    lhs_asym: tuple[float, float] | None = None
    rhs_asym: tuple[float, float] | None = None


@dataclass(frozen=True)
class TransformPair:
    """The pair (E, F) with its source Young functions and a balance check."""

    E: _Transform
    F: _Transform
    A: YoungFunction
    B: YoungFunction
    n: int
    alpha: float
    s: float

    def balance(self, t0: float = 1.0, t_max: float = 1e4, grid: int = 60,
                gamma_hi: float = 1e8) -> BalanceReport:
        return balance_report(self, t0=t0, t_max=t_max, grid=grid, gamma_hi=gamma_hi)


def balance_report(pair: TransformPair, t0: float = 1.0, t_max: float = 1e4,
                   grid: int = 60, gamma_hi: float = 1e8) -> BalanceReport:
    """Decide F(E(t)/γ) ≤ γ A(t)/t on t > t₀ and report the smallest γ.

    When both transforms and A carry asymptotic exponents, the large-t
    behavior is compared exactly (lexicographically in (t-power, log-power));
    a strict asymptotic excess of the left side is Unsatisfiable no matter
    how large γ is chosen, which no finite grid could witness.  The smallest
    workable γ is then located by bisection on a log-spaced t-grid (the
    condition is monotone in γ: raising γ shrinks the left side and grows
    the right side).
    """
    notes: list[str] = []
    lhs_asym = rhs_asym = None
    if pair.E.asym is not None and pair.F.asym is not None and pair.A.sigma is not None:
        pE, lE = pair.E.asym.power, pair.E.asym.logpow
        pF, lF = pair.F.asym.power, pair.F.asym.logpow
        lhs_asym = (pE * pF, lE * pF + lF)
        rhs_asym = (pair.A.sigma - 1.0, pair.A.logexp)
        # lexicographic comparison up to float noise in the exponent algebra
        power_tol = 1e-9 * max(1.0, abs(lhs_asym[0]), abs(rhs_asym[0]))
        dpow = lhs_asym[0] - rhs_asym[0]
        lhs_dominates = dpow > power_tol or (
            abs(dpow) <= power_tol and lhs_asym[1] > rhs_asym[1] + 1e-9
        )
        if lhs_dominates:
            notes.append(
                "left side asymptotically dominates the right side for every "
                f"fixed gamma: t-power/log-power {lhs_asym} > {rhs_asym}"
            )
            return BalanceReport(False, None, "symbolic", t0, t_max, notes,
                                 lhs_asym, rhs_asym)
        mode = "symbolic"
    else:
        mode = "numeric"
        notes.append("untagged input: asymptotic verdict unavailable, grid only")

    ts = np.geomspace(t0, t_max, grid)
    A_over_t = np.array([float(pair.A(t)) / t for t in ts])
    E_vals = np.array([pair.E(float(t)) for t in ts])

    def holds(gamma: float) -> bool:
        lhs = np.array([pair.F(float(e / gamma)) for e in E_vals])
        return bool(np.all(lhs <= gamma * A_over_t))

    if not holds(gamma_hi):
        notes.append(f"no gamma up to {gamma_hi:g} satisfies the grid condition")
        return BalanceReport(False, None, mode, t0, t_max, notes, lhs_asym, rhs_asym)
    lo, hi = 1e-8, gamma_hi
    if holds(lo):
        hi = lo
    else:
        for _ in range(80):
            mid = math.sqrt(lo * hi)
            if holds(mid):
                hi = mid
            else:
                lo = mid
    return BalanceReport(True, float(hi), mode, t0, t_max, notes, lhs_asym, rhs_asym)


# ---------------------------------------------------------------------------
# weights and their transforms


@dataclass(frozen=True)
class WeightFunction:
    """Radial weight ω(r) on (0, 1] with a symbolic tag where available."""

    fn: Callable[[np.ndarray], np.ndarray]
    tag: str = "custom"
    beta: float | None = None
    coeff: float = 1.0
    nondecreasing: bool = False
    label: str = "omega"

    def __call__(self, r) -> np.ndarray:
        return self.fn(np.asarray(r, dtype=float))


def weight_power(beta: float, coeff: float = 1.0) -> WeightFunction:
    """ω(r) = c·r^β (nondecreasing for β ≥ 0)."""
    return WeightFunction(lambda r: coeff * r**beta, "power", beta=beta,
                          coeff=coeff, nondecreasing=beta >= 0,
                          label=f"r^{beta:g}")


def weight_one() -> WeightFunction:
    """ω ≡ 1: Campanato scan becomes the sampled mean-oscillation seminorm."""
    return WeightFunction(lambda r: np.ones_like(np.asarray(r, dtype=float)),
                          "one", beta=0.0, nondecreasing=True, label="1")


@dataclass(frozen=True)
class WeightTransforms:
    """Dini flag with the two derived weights ϖ(r) = ∫₀^r ω/ρ dρ and
    μ(r) = r·(∫_r^1 ω(ϱ) ϱ^{−n/p'−1} dϱ)^{1/(p−1)}."""

    dini: bool
    varpi: Callable[[float], float]
    mu: Callable[[float], float]


def weight_transforms(omega: WeightFunction, n: int, p: float) -> WeightTransforms:
    """Derived weights of ω for dimension n and exponent p > 1.

    Power-tagged weights use the exact antiderivatives (in particular
    ω(r) = r^β gives μ(r) ∝ r^{1 − (n/p − β/(p−1))} as r → 0 when
    β < n/p′); other weights fall back to quadrature, with the Dini flag
    decided by extrapolating ∫_δ^1 ω/ρ dρ through δ → 0.
    """
    if not (p > 1):
        raise PRangeError(f"need p > 1, got {p}")
    np_exp = n * (p - 1.0) / p  # n / p'

    if omega.tag in ("power", "one"):
        beta = float(omega.beta)
        c = omega.coeff
        dini = beta > 0

        def varpi(r: float) -> float:
            if beta <= 0:
                return math.inf
            return c * r**beta / beta

        c_exp = beta - np_exp

        def mu(r: float) -> float:
            if not (0 < r <= 1):
                raise ValueError(f"mu is defined on (0, 1], got r={r}")
            if c_exp == 0:
                inner = c * math.log(1.0 / r)
            else:
                inner = c * (1.0 - r**c_exp) / c_exp
            return r * max(inner, 0.0) ** (1.0 / (p - 1.0))

        return WeightTransforms(dini, varpi, mu)

    # numeric fallback
    def tail(delta: float) -> float:
        val, err = integrate.quad(lambda rho: float(omega(rho)) / rho, delta, 1.0,
                                  limit=200)
        if err > 1e-7 * max(abs(val), 1.0):
            raise QuadratureFailure(f"Dini integral error {err:g} at delta={delta:g}")
        return val

    deltas = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8]
    vals = [tail(d) for d in deltas]
    incs = np.diff(vals)
    dini = bool(incs[-1] < 0.5 * incs[0] + 1e-12) and vals[-1] < 1e6
    if np.all(incs < 1e-12):
        dini = True

    def varpi(r: float) -> float:
        if not dini:
            return math.inf
        val, _ = integrate.quad(lambda rho: float(omega(rho)) / rho, 1e-12, r,
                                limit=200)
        return val

    def mu(r: float) -> float:
        if not (0 < r <= 1):
            raise ValueError(f"mu is defined on (0, 1], got r={r}")
        val, err = integrate.quad(
            lambda rho: float(omega(rho)) * rho ** (-np_exp - 1.0), r, 1.0, limit=200
        )
        if err > 1e-7 * max(abs(val), 1.0):
            raise QuadratureFailure(f"mu integral error {err:g} at r={r:g}")
        return r * max(val, 0.0) ** (1.0 / (p - 1.0))

    return WeightTransforms(dini, varpi, mu)


# ---------------------------------------------------------------------------
# Campanato / Morrey sup scans


@dataclass(frozen=True)
class SupScanResult:
    """Sup-type norm value with the ball attaining it and the sample size."""

    value: float
    ball: Ball
    balls_scanned: int

    def __float__(self) -> float:
        return self.value


def _sample_balls(geom, stride: int = 4):
    """Deterministic ball sample: stride-``stride`` center sublattice, dyadic
    radii from 2h up to the largest ball inside the domain."""
    h = max(geom.spacing)
    mesh = geom.center_mesh()
    idx_ranges = [range(stride // 2, c, stride) for c in geom.cells]
    out = []
    from itertools import product

    for idx in product(*idx_ranges):
        center = tuple(float(mesh[d][tuple(idx) if geom.dim > 1 else idx])
                       for d in range(geom.dim))
        room = min(
            min(center[d] - geom.origin[d],
                geom.origin[d] + geom.extent[d] - center[d])
            for d in range(geom.dim)
        )
        r = 2.0 * h
        while r <= room * (1 + 1e-12):
            out.append(Ball(center, r))
            r *= 2.0
    return out


def campanato_seminorm(f: GridField, omega: WeightFunction, q: float = 1.0,
                       stride: int = 4) -> SupScanResult:
    """Campanato-type seminorm sup_B (1/ω(r)) (⨍_B |f − ⟨f⟩_B|^q)^{1/q}.

    The sup runs over the deterministic ball sample; the attaining ball is
    reported.  For nondecreasing ω the scan is evaluated at q = 1 (the spaces
    for different q coincide by the John–Nirenberg argument, and q = 1 keeps
    the scan cheap); ω ≡ 1 yields the sampled mean-oscillation (BMO) value.
    """
    if omega.nondecreasing:
        q = 1.0
    balls = _sample_balls(f.geometry, stride)
    if not balls:
        raise NoAdmissibleBalls("no sampled ball fits inside the domain")
    best, best_ball = -math.inf, None
    for b in balls:
        w = float(omega(b.radius))
        if w <= 0:
            continue
        val = ball_oscillation(f, b, q) / w
        if val > best:
            best, best_ball = val, b
    if best_ball is None:
        raise NoAdmissibleBalls("weight vanished on every sampled radius")
    return SupScanResult(float(best), best_ball, len(balls))


def morrey_norm(f: GridField, omega: WeightFunction, q: float = 1.0,
                stride: int = 4) -> SupScanResult:
    """Morrey-type norm sup_B (1/ω(r)) (∫_B |f|^q)^{1/q} (non-averaged)."""
    if not (q >= 1):
        raise InadmissibleParams(f"need q >= 1, got {q}")
    balls = _sample_balls(f.geometry, stride)
    if not balls:
        raise NoAdmissibleBalls("no sampled ball fits inside the domain")
    mag = f.magnitude().values[0]
    meas = f.geometry.cell_measure
    best, best_ball = -math.inf, None
    for b in balls:
        w = float(omega(b.radius))
        if w <= 0:
            continue
        slices, mask = ball_cells(f.geometry, b)
        chunk = mag[slices][mask]
        val = float((chunk**q).sum() * meas) ** (1.0 / q) / w
        if val > best:
            best, best_ball = val, b
    if best_ball is None:
        raise NoAdmissibleBalls("weight vanished on every sampled radius")
    return SupScanResult(float(best), best_ball, len(balls))


# ---------------------------------------------------------------------------
# quasi-increasing envelopes


@dataclass(frozen=True)
class EnvelopeReport:
    """Monotone envelope ψ(s) = sup_{r ≤ s} φ(r) with its sandwich check
    φ ≤ ψ ≤ k·φ; violations are reported, never thrown."""

    psi: np.ndarray
    quasi_increasing: bool
    max_ratio: float
    violations: int


def monotone_envelope(phi: Sequence[float], k: float) -> EnvelopeReport:
    """Running-max envelope of positive samples with the k-sandwich verdict."""
    phi = np.asarray(phi, dtype=float)
    if phi.ndim != 1 or phi.size == 0:
        raise InadmissibleParams("phi must be a nonempty 1-d sample array")
    if np.any(phi <= 0):
        raise InadmissibleParams("quasi-increasing envelopes need phi > 0")
    if not (k >= 1):
        raise InadmissibleParams(f"need k >= 1, got {k}")
    psi = np.maximum.accumulate(phi)
    ratios = psi / phi
    max_ratio = float(ratios.max())
    bad = int(np.sum(ratios > k * (1 + 1e-12)))
    return EnvelopeReport(psi, bad == 0, max_ratio, bad)

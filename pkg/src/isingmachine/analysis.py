"""Critical-behaviour analysis: exact results and finite-size-scaling fits."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import CapacityError, FitError, InsufficientDataError

TC_EXACT = 2.0 / math.log(1.0 + math.sqrt(2.0))
GAMMA_OVER_NU_EXACT = 1.75


def onsager_m(T: float) -> float:
    """Spontaneous magnetisation of the infinite square-lattice Ising model (J = 1)."""
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")
    if T >= TC_EXACT:
        return 0.0
    # sinh(2/T)^-4 underflows harmlessly; sinh itself would overflow for tiny T
    k = 2.0 / T
    inv_sinh = 0.0 if k > 700 else 1.0 / math.sinh(k)
    x = 1.0 - inv_sinh**4
    return x**0.125 if x > 0 else 0.0


@dataclass(frozen=True)
class LorentzianFit:
    chi_max: float
    T_star: float
    w: float
    r2: float
    window: tuple[float, float]
    iterations: int = 0

    def __call__(self, T):
        return lorentzian(np.asarray(T, dtype=float), self.chi_max, self.T_star, self.w)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    intercept: float
    r2: float
    exponent_se: float = float("nan")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class TcFit:
    Tc: float
    b: float
    r2: float
    Tc_se: float = float("nan")

    def to_dict(self):
        return asdict(self)


def lorentzian(T, A, T0, w):
    return A / (1.0 + ((T - T0) / w) ** 2)


def _r_squared(y, resid):
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0:
        return 1.0
    return float(min(1.0, max(0.0, 1.0 - float(resid @ resid) / sst)))


def _numeric_jacobian(f, p, h_rel=1e-6):
    f0 = f(p)
    jac = np.empty((f0.size, p.size))
    for k in range(p.size):
        h = h_rel * max(abs(p[k]), 1e-3)
        dp = np.zeros_like(p)
        dp[k] = h
        jac[:, k] = (f(p + dp) - f(p - dp)) / (2 * h)
    return jac


def gauss_newton(residual, p0, max_iter=50, rtol=1e-10, max_halvings=40):
    """Damped Gauss-Newton: halve the step until the squared residual drops.

    Returns ``(params, ssr, iterations)``.  Raises FitError if the iteration
    budget runs out before the relative decrease falls below ``rtol``.
    """
    p = np.asarray(p0, dtype=float)
    r = residual(p)
    ssr = float(r @ r)
    for it in range(1, max_iter + 1):
        jac = _numeric_jacobian(residual, p)
        step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        t = 1.0
        for _ in range(max_halvings):
            trial = p + t * step
            r_new = residual(trial)
            ssr_new = float(r_new @ r_new)
            if np.isfinite(ssr_new) and ssr_new <= ssr:
                break
            t *= 0.5
        else:
            # no descent along the Gauss-Newton direction: at a minimum
            return p, ssr, it
        decrease = ssr - ssr_new
        p, r, ssr = trial, r_new, ssr_new
        if decrease <= rtol * max(ssr, 1e-300) or ssr == 0.0 or np.max(np.abs(t * step)) <= 1e-14 * (1 + np.max(np.abs(p))):
            return p, ssr, it
    raise FitError(f"Gauss-Newton did not converge in {max_iter} iterations", residual=ssr)


def select_window(T, chi, half_width: int = 3):
    """Indices of the points within ``half_width`` of the discrete maximum."""
    k = int(np.argmax(chi))
    lo = max(0, k - half_width)
    hi = min(len(T), k + half_width + 1)
    # slide the window inward when the maximum sits near an end
    want = 2 * half_width + 1
    if hi - lo < want:
        if lo == 0:
            hi = min(len(T), want)
        else:
            lo = max(0, hi - want)
    return np.arange(lo, hi)


def lorentzian_fit(points, window: int = 3, max_iter: int = 50) -> LorentzianFit:
    """Fit ``A / (1 + ((T - T*) / w)^2)`` to the points around the peak.

    ``points`` is a sequence of (T, chi) pairs; ``window`` is the number of
    points kept on each side of the largest chi.
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("points must be (T, chi) pairs")
    arr = arr[np.argsort(arr[:, 0])]
    T_all, chi_all = arr[:, 0], arr[:, 1]
    idx = select_window(T_all, chi_all, window)
    if idx.size < 5:
        raise InsufficientDataError(f"Lorentzian fit needs at least 5 points in the window, got {idx.size}")
    T, chi = T_all[idx], chi_all[idx]
    if np.any(chi <= 0):
        raise ValueError("susceptibility values must be positive")

    k = int(np.argmax(chi))
    A0, T0 = chi[k], T[k]
    # width from where the curve falls to half height, else half the window
    half = chi < A0 / 2
    w0 = 0.5 * (T[-1] - T[0])
    if half.any():
        w0 = max(float(np.min(np.abs(T[half] - T0))), 0.5 * float(np.min(np.diff(T))))
    p0 = np.array([A0, T0, w0])

    def residual(p):
        return lorentzian(T, p[0], p[1], p[2]) - chi

    p, ssr, its = gauss_newton(residual, p0, max_iter=max_iter)
    A, Ts, w = float(p[0]), float(p[1]), abs(float(p[2]))
    if not (A > 0 and w > 0 and np.isfinite(Ts)):
        raise FitError("Lorentzian fit left the physical parameter region", residual=ssr)
    return LorentzianFit(A, Ts, w, _r_squared(chi, residual(p)), (float(T[0]), float(T[-1])), its)


def _linear_fit(x, y):
    n = x.size
    X = np.column_stack([np.ones(n), x])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = n - 2
    if dof > 0:
        s2 = float(resid @ resid) / dof
        cov = s2 * np.linalg.inv(X.T @ X)
        se = np.sqrt(np.diag(cov))
    else:
        se = np.array([np.nan, np.nan])
    return float(coef[0]), float(coef[1]), _r_squared(y, resid), se


def power_law_fit(L_list, chi_max_list) -> ScalingFit:
    """Least squares of ln chi_max against ln L; the slope estimates gamma/nu."""
    L = np.asarray(L_list, dtype=float)
    chi = np.asarray(chi_max_list, dtype=float)
    if L.size != chi.size:
        raise ValueError("L_list and chi_max_list differ in length")
    if L.size < 3:
        raise InsufficientDataError("power-law fit needs at least 3 sizes")
    if np.any(L <= 0) or np.any(chi <= 0):
        raise ValueError("sizes and peak heights must be positive")
    intercept, slope, r2, se = _linear_fit(np.log(L), np.log(chi))
    return ScalingFit(slope, intercept, r2, float(se[1]))


def tc_extrapolate(L_list, T_star_list) -> TcFit:
    """Fit ``T*(L) = Tc + b / L`` by least squares in 1/L."""
    L = np.asarray(L_list, dtype=float)
    Ts = np.asarray(T_star_list, dtype=float)
    if L.size != Ts.size:
        raise ValueError("L_list and T_star_list differ in length")
    if L.size < 3:
        raise InsufficientDataError("Tc extrapolation needs at least 3 sizes")
    if np.any(L <= 0):
        raise ValueError("sizes must be positive")
    if np.unique(L).size < 2:
        raise ValueError("Tc extrapolation needs at least two distinct sizes")
    intercept, slope, r2, se = _linear_fit(1.0 / L, Ts)
    return TcFit(intercept, slope, r2, float(se[0]))


@dataclass(frozen=True)
class ExactAverages:
    L: int
    T: float
    e_per_spin: float
    m_abs: float
    m_signed: float
    chi_abs: float
    chi: float
    Z: float
    energy_levels: np.ndarray
    energy_probs: np.ndarray


def _all_configs(L: int):
    n = L * L
    codes = np.arange(1 << n, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(n)) & 1).astype(np.int8)
    s = 2 * bits - 1
    grid = s.reshape(-1, L, L)
    bonds = grid * (np.roll(grid, -1, axis=1) + np.roll(grid, -1, axis=2))
    E = -bonds.reshape(len(codes), -1).sum(axis=1).astype(np.int64)
    M = s.sum(axis=1).astype(np.int64)
    return E, M


def exhaustive_oracle(L: int, T: float) -> ExactAverages:
    """Exact Gibbs averages for the nearest-neighbour model by full enumeration."""
    if L not in (2, 4):
        raise CapacityError(f"exhaustive enumeration supports L in (2, 4), got {L}")
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")
    E, M = _all_configs(L)
    N = L * L
    # shift by the ground state so weights stay finite at low T
    w = np.exp(-(E - E.min()) / T)
    Z = float(w.sum())
    p = w / Z
    mean_e = float(p @ E)
    mean_absm = float(p @ np.abs(M))
    mean_m = float(p @ M)
    mean_m2 = float(p @ (M * M))
    levels = np.unique(E)
    probs = np.array([p[E == lev].sum() for lev in levels])
    return ExactAverages(
        L=L,
        T=float(T),
        e_per_spin=mean_e / N,
        m_abs=mean_absm / N,
        m_signed=mean_m / N,
        chi_abs=(mean_m2 - mean_absm**2) / (T * N),
        chi=(mean_m2 - mean_m**2) / (T * N),
        Z=Z * math.exp(-E.min() / T),
        energy_levels=levels,
        energy_probs=probs,
    )

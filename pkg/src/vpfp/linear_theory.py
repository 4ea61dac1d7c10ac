"""Scalar density equation of the linearized dynamics and its stability scan.

Eliminating the distribution from the linearized system leaves a Volterra
equation for the premultiplied density Phi(t) = exp(delta nu^(1/3) t) rho(t, k):

    Phi(t) = F(t) + int_0^t K(t, tau) Phi(tau) d tau,

where F is the premultiplied free-streaming contribution of the initial data
and the physical memory kernel is -kernel_K0(t - tau):

    kernel_K0(dt) = exp(delta nu^(1/3) dt) s_density(dt, k)
                    * w_hat(k) k^2 t~ mu_hat(k t~),   t~ = (1 - e^(-nu dt)) / nu.

kernel_K0 is reported with the positive sign; the solver and the stability
scan insert the physical minus sign themselves.  The stability margin

    kappa = min over a left-half-plane window of |1 + K0_hat(z)|,
    K0_hat(z) = int_0^inf exp(z t) (-kernel_K0(t)) ... reported as
    min |1 - L[-K0](z)| with the growing weight exp(z t), Re z <= 0,

is the distance of the dispersion function from 0: kappa > 0 certifies that
the memory term cannot sustain a neutral or growing oscillation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, NumericError
from .reports import FitResult
from .semigroup import _phi1, eta_ct, s_density_exponent


def mu_hat(eta):
    """Frequency profile of the background Maxwellian: exp(-eta^2 / 2)."""
    eta_a = np.asarray(eta, dtype=float)
    out = np.exp(-0.5 * eta_a * eta_a)
    if np.ndim(eta) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class InteractionKernel:
    """Nonnegative interaction weights w_hat(k) for k != 0.

    Attributes:
        label: short name used in manifests.
        table: explicit weights for the modes that carry any; missing modes
            weigh 0.  Weights must satisfy 0 <= w_hat(k) <= C / |k| for some
            C; bound_constant reports the smallest C over the stored table.
    """

    label: str
    table: dict[int, float]

    def __post_init__(self):
        for k, v in self.table.items():
            if k == 0:
                raise DomainError("interaction weight is defined for k != 0 only")
            if not 0.0 <= v < np.inf:
                raise DomainError(f"weight at k={k} must be finite and >= 0")

    def __call__(self, k: int) -> float:
        if k == 0:
            raise DomainError("interaction weight is defined for k != 0 only")
        return self.table.get(int(k), 0.0)

    @property
    def bound_constant(self) -> float:
        if not self.table:
            return 0.0
        return max(abs(k) * v for k, v in self.table.items())

    @staticmethod
    def coulomb(k_max: int = 64) -> "InteractionKernel":
        return InteractionKernel(
            label="coulomb",
            table={k: 1.0 / (k * k) for k in range(-k_max, k_max + 1) if k != 0})

    @staticmethod
    def screened(k_max: int = 64) -> "InteractionKernel":
        return InteractionKernel(
            label="screened",
            table={k: 1.0 / (1.0 + k * k) for k in range(-k_max, k_max + 1) if k != 0})

    @staticmethod
    def none(k_max: int = 64) -> "InteractionKernel":
        return InteractionKernel(label="none", table={})


def kernel_K0(dt, k: int, nu: float, delta: float, w: InteractionKernel):
    """Premultiplied memory kernel magnitude at elapsed time dt (vectorized).

    Returns the positive formula; the physical convolution uses -kernel_K0.
    """
    if k == 0:
        raise DomainError("the density equation lives on k != 0")
    dt_a = np.asarray(dt, dtype=float)
    if np.any(dt_a < 0.0):
        raise DomainError("elapsed time must be nonnegative")
    t_tilde = dt_a * _one_minus_exp_ratio(nu * dt_a)
    expo = (delta * nu ** (1.0 / 3.0) * dt_a
            + s_density_exponent(dt_a, k, nu)
            - 0.5 * (k * t_tilde) ** 2)
    out = w(k) * k * k * t_tilde * np.exp(expo)
    if np.ndim(dt) == 0:
        return float(out)
    return out


def _one_minus_exp_ratio(x):
    """(1 - exp(-x)) / x, safe at 0."""
    return _phi1(x)


@dataclass
class VolterraProblem:
    """One density-equation solve.

    Attributes:
        k: spatial mode, != 0.
        nu: collision frequency.
        delta: premultiplication rate (units of nu^(1/3)).
        source: premultiplied forcing F on the time grid, or a callable t -> F.
        dt: time step.
        t_final: horizon.
        kernel_override: optional callable dt -> K used verbatim (with its
            own sign) in place of the physical -kernel_K0; for validation
            against closed forms.
    """

    k: int
    nu: float
    delta: float
    source: Callable | np.ndarray
    dt: float
    t_final: float
    kernel_override: Callable | None = None


@dataclass
class VolterraResult:
    t: np.ndarray
    rho: np.ndarray
    phi: np.ndarray
    meta: dict = field(default_factory=dict)


def volterra_solve(problem: VolterraProblem, w: InteractionKernel | None = None) -> VolterraResult:
    """March the Volterra equation with the product trapezoid rule.

    Second order in dt.  The physical kernel vanishes at dt = 0, making the
    update explicit; synthetic kernels with K(0) != 0 are handled through
    the implicit (1 - dt K(0) / 2) factor.

    Returns:
        VolterraResult with the premultiplied solution phi and the density
        rho = exp(-delta nu^(1/3) t) phi.  meta carries a resolution warning
        when the kernel varies by more than 50% across the first step.
    """
    if problem.dt <= 0.0 or problem.t_final <= 0.0:
        raise DomainError("dt and t_final must be positive")
    n = int(round(problem.t_final / problem.dt))
    if n < 2:
        raise DomainError("horizon must cover at least two steps")
    t = np.arange(n + 1) * problem.dt
    if problem.kernel_override is not None:
        kern = np.asarray([problem.kernel_override(float(dt)) for dt in t],
                          dtype=complex)
    else:
        if w is None:
            raise DomainError("an interaction kernel is required")
        kern = -kernel_K0(t, problem.k, problem.nu, problem.delta, w).astype(complex)
    if callable(problem.source):
        f = np.asarray([problem.source(float(ti)) for ti in t], dtype=complex)
    else:
        f = np.asarray(problem.source, dtype=complex)
        if f.shape != t.shape:
            raise DomainError(
                f"source grid has shape {f.shape}, expected {t.shape}")
    meta: dict = {"n_steps": n, "dt": problem.dt}
    scale = max(abs(kern[1]), abs(kern[2]))
    if scale > 0 and abs(kern[2] - kern[1]) > 0.5 * scale:
        meta["resolution_warning"] = (
            "kernel varies by more than 50% per step near t = 0; "
            "halve dt for a trustworthy solution")
    phi = np.empty(n + 1, dtype=complex)
    phi[0] = f[0]
    half = 0.5 * problem.dt
    implicit = 1.0 - half * kern[0]
    if abs(implicit) < 1e-12:
        raise NumericError("implicit trapezoid factor vanished; reduce dt")
    for i in range(1, n + 1):
        acc = f[i] + half * kern[i] * phi[0]
        if i > 1:
            acc = acc + problem.dt * np.dot(kern[i - 1:0:-1], phi[1:i])
        phi[i] = acc / implicit
    decay = np.exp(-problem.delta * problem.nu ** (1.0 / 3.0) * t)
    return VolterraResult(t=t, rho=decay * phi, phi=phi, meta=meta)


def free_streaming_source(h_in_hat: Callable, t, k: int, nu: float):
    """Density radiated by freely advected initial data (not premultiplied).

    rho_free(t) = s_density(t, k) * h_in_hat(k, eta_ct(t, k, nu)).
    """
    if k == 0:
        raise DomainError("the density equation lives on k != 0")
    t_a = np.atleast_1d(np.asarray(t, dtype=float))
    eta_q = eta_ct(t_a, k, nu)
    vals = np.asarray([h_in_hat(k, float(e)) for e in eta_q], dtype=complex)
    out = np.exp(s_density_exponent(t_a, k, nu)) * vals
    if np.ndim(t) == 0:
        return complex(out[0])
    return out


@dataclass
class PenroseResult:
    kappa: float
    z_argmin: complex
    k: int
    nu: float
    truncation_time: float
    edge_max: float
    kernel_l1: float
    details: dict = field(default_factory=dict)


def penrose_scan(
    k: int,
    nu: float,
    delta: float,
    w: InteractionKernel,
    re_range: tuple[float, float] = (-2.0, 0.0),
    im_range: tuple[float, float] = (-20.0, 20.0),
    n_re: int = 401,
    n_im: int = 801,
    dt: float = 0.015,
) -> PenroseResult:
    """Distance of the dispersion function from zero on a spectral window.

    Evaluates D(z) = 1 - int_0^T exp(z t) (-kernel_K0(t)) dt on the grid
    Re z in re_range (<= 0), Im z in im_range, with the kernel truncated at
    the first time T where it falls below 1e-14 in magnitude.  The growing
    weight exp(z t)|_{Re z < 0} damps the tail, so the transform converges
    on the whole window.

    Returns:
        PenroseResult with kappa = min |D|, its argmin, the maximum of |D - 1|
        on the far-field edges |Im z| = max (decay cross-check), and the
        kernel truncation data.

    Raises:
        NumericError: if the kernel has not decayed below threshold by
            t = 64 nu^(-1/3) + 100.
    """
    if re_range[0] > re_range[1] or re_range[1] > 0.0:
        raise DomainError("the scan window must sit in Re z <= 0")
    # March until the kernel magnitude stays below threshold.
    t_cap = 64.0 * nu ** (-1.0 / 3.0) + 100.0
    block = max(int(round(8.0 / dt)), 16)
    kern_parts = []
    t0 = 0.0
    truncation = None
    while t0 < t_cap:
        tt = t0 + dt * np.arange(block + 1)
        kk = kernel_K0(tt, k, nu, delta, w)
        if t0 > 0:
            # First node duplicates the previous block's last node.
            tt, kk = tt[1:], kk[1:]
        kern_parts.append((tt, kk))
        if t0 > 0 and np.all(kk[-block // 2:] < 1e-14):
            truncation = tt[-1]
            break
        t0 = tt[-1]
    if truncation is None:
        raise NumericError(
            f"kernel tail had not decayed below 1e-14 by t = {t_cap:.3g}; "
            "no trustworthy transform truncation exists")
    t_nodes = np.concatenate([p[0] for p in kern_parts])
    kern = np.concatenate([p[1] for p in kern_parts])
    if kern.size % 2 == 0:
        t_nodes = t_nodes[:-1]
        kern = kern[:-1]
    n_nodes = kern.size
    simp = np.ones(n_nodes)
    simp[1:-1:2] = 4.0
    simp[2:-1:2] = 2.0
    simp *= dt / 3.0
    weighted = simp * (-kern)
    re_grid = np.linspace(re_range[0], re_range[1], n_re)
    im_grid = np.linspace(im_range[0], im_range[1], n_im)
    # exp(z t) factorizes; the transform is then a real x complex matmul.
    e_re = np.exp(np.outer(re_grid, t_nodes))
    e_im = np.exp(1j * np.outer(t_nodes, im_grid))
    transform = (e_re * weighted[None, :]) @ e_im
    disp = np.abs(1.0 - transform)
    flat = int(np.argmin(disp))
    i_re, i_im = np.unravel_index(flat, disp.shape)
    kappa = float(disp[i_re, i_im])
    edge = float(max(np.max(np.abs(transform[:, 0])),
                     np.max(np.abs(transform[:, -1]))))
    return PenroseResult(
        kappa=kappa,
        z_argmin=complex(re_grid[i_re], im_grid[i_im]),
        k=k, nu=nu,
        truncation_time=float(truncation),
        edge_max=edge,
        kernel_l1=float(np.sum(np.abs(kern)) * dt),
        details={"n_re": n_re, "n_im": n_im, "dt": dt,
                 "re_range": list(re_range), "im_range": list(im_range)},
    )


def fit_decay_rate(t, values, window: tuple[float, float]) -> FitResult:
    """Least-squares exponential fit of a positive series on a time window.

    Args:
        t: time grid.
        values: series, must be strictly positive inside the window.
        window: (t_lo, t_hi) inclusive fit range.

    Returns:
        FitResult with rate (positive = decay), amplitude, r_squared; a
        series with no variation comes back flat with rate 0.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    lo, hi = window
    mask = (t >= lo) & (t <= hi)
    if np.count_nonzero(mask) < 3:
        raise DomainError("fit window must contain at least three samples")
    if np.any(v[mask] <= 0.0):
        raise DomainError("series must be strictly positive inside the fit window")
    x = t[mask]
    y = np.log(v[mask])
    if np.max(y) - np.min(y) < 1e-13:
        return FitResult(rate=0.0, amplitude=float(np.exp(y[0])),
                         r_squared=0.0, flat=True)
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return FitResult(rate=float(-slope), amplitude=float(np.exp(intercept)),
                     r_squared=r2, flat=False)

"""Mean-field predictions for the growth process.

For hosts whose attractiveness uses both quality and recency, the long-run
average attractiveness W of a host solves the fixed point

    W = F(W) = (lam * W / N) * (E[exp(N * tau * Q / W)] - 1)

when degree is also enabled, and collapses to the closed form
``W = lam * tau * E[Q]`` without the degree factor.  F is monotone
non-increasing, so the fixed point is unique; we find it by bisection on a
geometrically expanded bracket.

From W follow the expected in-degree trajectory of a page of a given
quality and age, the model recency curve e(T) (fraction of links whose
endpoint age difference exceeds T), and the predicted power-law exponent
of the in-degree distribution where one exists.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import (DivergenceError, ExponentialQuality, HostMatrix,
                   HostParams, ModelSpec, ParetoQuality, PointMassQuality,
                   UnsupportedModelError)


def link_rates(hosts, rho: HostMatrix) -> np.ndarray:
    """Steady inflow rate of links into each host.

    N_k = sum_i lam_i * M_i * rho[i, k], with M_i the mean out-degree of
    host i's pages.
    """
    lam = np.array([h.rate for h in hosts], dtype=np.float64)
    m = np.array([h.outdeg_dist.mean() for h in hosts], dtype=np.float64)
    if rho.n != len(lam):
        raise ValueError(f"rho is {rho.n}x{rho.n} but there are {len(lam)} hosts")
    return (lam * m) @ rho.rho


def _require_solvable(spec: ModelSpec):
    if not (spec.use_quality and spec.use_recency):
        raise UnsupportedModelError(
            f"model {spec.name!r} has no mean-field solution here; "
            "quality and recency factors are both required")


def _fixed_point_map(host: HostParams, n_rate: float):
    """F(W) for the degree case; returns +inf where the moment diverges
    or overflows."""
    lam, tau, dist = host.rate, host.tau, host.quality_dist

    def f_of(w):
        moment = dist.exp_moment(n_rate * tau / w)
        if not math.isfinite(moment):
            return math.inf
        return (lam * w / n_rate) * (moment - 1.0)

    return f_of


def solve_w(host: HostParams, n_rate: float, spec: ModelSpec, *,
            rtol: float = 1e-12) -> float:
    """Long-run average attractiveness of a host's pages.

    Without the degree factor the closed form ``lam * tau * E[Q]`` applies.
    With it, the unique root of W = F(W) is found by bisection; the
    quality distribution's exponential moment is evaluated in closed form
    for point-mass and exponential quality and by quadrature otherwise.
    Monotonicity of F is asserted on a grid around the root at every solve.

    Raises ``UnsupportedModelError`` when the flags disable quality or
    recency, and ``DivergenceError`` when the moment diverges at every
    admissible W (e.g. power-law quality under the degree model).
    """
    _require_solvable(spec)
    lam, tau, dist = host.rate, host.tau, host.quality_dist
    w_base = lam * tau * dist.mean()
    if not spec.use_degree:
        return w_base

    if not (n_rate > 0):
        raise ValueError("the degree case needs a positive link inflow rate N")
    if lam <= 0:
        raise ValueError("the degree case needs a positive arrival rate")

    threshold = dist.exp_divergence_threshold()
    if threshold == 0.0:
        raise DivergenceError(
            "E[exp(c Q)] diverges for every c > 0 under this quality "
            "distribution; no fixed point exists", w=w_base)
    # the moment converges only for W > w_min; the root also satisfies
    # W >= lam * tau * E[Q] since exp(x) >= 1 + x
    w_min = 0.0 if math.isinf(threshold) else n_rate * tau / threshold
    f_of = _fixed_point_map(host, n_rate)

    lo = max(w_base, w_min * (1.0 + 1e-12))
    hi = lo
    for _ in range(200):
        hi *= 2.0
        if hi - f_of(hi) > 0:
            break
    else:
        raise DivergenceError("fixed-point bracket expansion failed", w=hi)

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid - f_of(mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= rtol * hi:
            break
    root = 0.5 * (lo + hi)

    _assert_monotone(f_of, root, w_min)
    return root


def _assert_monotone(f_of, root, w_min):
    # spot-check the uniqueness argument: F non-increasing on a grid
    grid = root * np.geomspace(0.125, 8.0, 13)
    vals = [f_of(w) for w in grid if w > w_min]
    for a, b in zip(vals, vals[1:]):
        if math.isinf(a):
            continue
        if b > a * (1.0 + 1e-9) + 1e-12:
            raise AssertionError(
                f"fixed-point map is not monotone near the root: {a} -> {b}")


def expected_degree(spec: ModelSpec, q: float, dt: float, n_rate: float,
                    tau: float, w: float) -> float:
    """Expected in-degree of a page of quality q at age dt.

    Degree case:   d(dt) = exp((N tau q / W) (1 - exp(-dt/tau)))  (= 1 at dt = 0)
    No-degree case: d(dt) = (N tau q / W) (1 - exp(-dt/tau))      (= 0 at dt = 0)
    """
    _require_solvable(spec)
    if dt < 0:
        raise ValueError("dt must be non-negative")
    x = (n_rate * tau * q / w) * -math.expm1(-dt / tau)
    return math.exp(x) if spec.use_degree else x


@dataclass(frozen=True)
class TheorySolution:
    """Per-host mean-field constants: average attractiveness W, link
    inflow rate N, mean out-degree M, and the recency-decay prefactor C
    (W - W_young(T) ~ C exp(-T/tau) for large T)."""

    w: np.ndarray
    n: np.ndarray
    m: np.ndarray
    c: np.ndarray


def solve_all(hosts, rho: HostMatrix, spec: ModelSpec,
              residual_tol: float = 1e-9) -> TheorySolution:
    """Solve every host's fixed point and package the per-host constants.

    Hosts with zero link inflow are solvable only in the no-degree case;
    under the degree model they would never accumulate links and N = 0 is
    rejected by ``solve_w``.
    """
    _require_solvable(spec)
    n_rates = link_rates(hosts, rho)
    w = np.empty(len(hosts))
    c = np.empty(len(hosts))
    for k, host in enumerate(hosts):
        w[k] = solve_w(host, float(n_rates[k]), spec)
        lam, tau, dist = host.rate, host.tau, host.quality_dist
        if spec.use_degree:
            f_of = _fixed_point_map(host, float(n_rates[k]))
            if abs(w[k] - f_of(w[k])) > residual_tol * max(1.0, w[k]):
                raise AssertionError(f"fixed-point residual too large for host {k}")
            c[k] = lam * tau * dist.mean_exp_weighted(n_rates[k] * tau / w[k])
        else:
            c[k] = lam * tau * dist.mean()
    m = np.array([h.outdeg_dist.mean() for h in hosts])
    return TheorySolution(w=w, n=n_rates, m=m, c=c)


def recency_curve(hosts, rho: HostMatrix, spec: ModelSpec, t_diff: float) -> float:
    """Model prediction for e(T): the fraction of links whose endpoint age
    difference exceeds ``t_diff``.

    Per host the fraction is (W - W_young(T)) / W where W_young(T) is the
    expected attractiveness of pages younger than T; hosts are combined
    weighted by their link inflow rates and the result normalized so that
    e(0) = 1.  Without the degree factor the per-host fraction is exactly
    exp(-T/tau).
    """
    _require_solvable(spec)
    if t_diff < 0:
        raise ValueError("the age-difference threshold must be non-negative")
    sol = solve_all(hosts, rho, spec)
    total = float(sol.n.sum())
    if total <= 0:
        raise ValueError("every host has zero link inflow")
    acc = 0.0
    for k, host in enumerate(hosts):
        if sol.n[k] <= 0:
            continue
        tau, dist = host.tau, host.quality_dist
        decay = math.exp(-t_diff / tau)
        if spec.use_degree:
            cc = sol.n[k] * tau / sol.w[k]
            full = dist.exp_moment(cc)
            young = dist.exp_moment(cc * (1.0 - decay))
            frac = (full - young) / (full - 1.0)
        else:
            frac = decay
        acc += sol.n[k] * frac
    return acc / total


def degree_tail_exponent(spec: ModelSpec, host: HostParams, n_rate: float,
                         w: float) -> float:
    """Predicted CCDF exponent of the host's in-degree distribution.

    Without the degree factor, Pareto quality with CCDF exponent a maps
    linearly into degrees, so the exponent carries over unchanged.  With
    the degree factor, exponential quality of mean mu composes through
    d = exp(N tau q / W) into P(d > x) = x^(-W/(N tau mu)).

    Note: the source analysis states the degree-case parameter as its
    reciprocal, N tau mu / W.  Direct composition of the trajectory with
    the exponential law (and the simulation oracle, which is authoritative
    here) gives W / (N tau mu); both readings agree only when the ratio
    is 1.
    """
    _require_solvable(spec)
    dist = host.quality_dist
    if spec.use_degree:
        if isinstance(dist, ExponentialQuality):
            return w / (n_rate * host.tau * dist.mean_value)
        if isinstance(dist, PointMassQuality):
            raise UnsupportedModelError(
                "constant quality under the degree model yields no power "
                "law: every page converges to the same degree")
        raise UnsupportedModelError(
            "the degree model predicts a power law only for exponential quality")
    if isinstance(dist, ParetoQuality):
        return dist.ccdf_exponent
    raise UnsupportedModelError(
        "without the degree factor a power law needs Pareto quality")

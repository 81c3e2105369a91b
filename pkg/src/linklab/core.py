"""Shared domain types: model flags, host parameters, pages, and edge logs.

Everything here is an immutable value type after construction and safe to
share across concurrent workers.  Time is a continuous real on a single
global clock; the unit is whatever the caller uses consistently (tests run
in days, the command line runs in seconds).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate


class UnsupportedModelError(ValueError):
    """The operation has no defined behavior for this combination of flags."""


class DivergenceError(ArithmeticError):
    """The attractiveness integral diverges at the candidate normalization.

    Carries the offending candidate value in ``w``.
    """

    def __init__(self, message, w):
        super().__init__(message)
        self.w = w


class NoTargetError(LookupError):
    """A host has no candidate page with positive selection weight."""


class NoEstimateError(ValueError):
    """An estimator cannot produce a value from the given data."""


MODEL_NAMES = ("d", "q", "e", "dq", "de", "qe", "dqe")


@dataclass(frozen=True)
class ModelSpec:
    """Which factors enter a page's attractiveness.

    The attractiveness of a page is the product of the enabled factors:
    quality q, effective in-degree d, and the recency decay exp(-age/tau).
    The seven named models are the non-empty combinations; disabling all
    three gives the uniform baseline (not part of the model family proper).
    """

    use_quality: bool = False
    use_degree: bool = False
    use_recency: bool = False

    @property
    def name(self) -> str:
        if self.is_uniform:
            return "uniform"
        return (("d" if self.use_degree else "")
                + ("q" if self.use_quality else "")
                + ("e" if self.use_recency else ""))

    @property
    def is_uniform(self) -> bool:
        """True for the all-factors-off baseline."""
        return not (self.use_quality or self.use_degree or self.use_recency)

    @classmethod
    def from_name(cls, name: str) -> "ModelSpec":
        if name == "uniform":
            return cls(False, False, False)
        if name not in MODEL_NAMES:
            raise ValueError(
                f"unknown model name {name!r}; expected one of "
                f"{', '.join(MODEL_NAMES)} or 'uniform'")
        return cls(use_quality="q" in name, use_degree="d" in name,
                   use_recency="e" in name)


ALL_MODELS = tuple(ModelSpec.from_name(n) for n in MODEL_NAMES)
UNIFORM = ModelSpec.from_name("uniform")


# ---------------------------------------------------------------------------
# quality and out-degree distributions

class QualityDist:
    """Base for per-host quality (fitness) distributions.

    Besides sampling, subclasses expose the exponential moments that the
    mean-field normalization constant needs:

    * ``exp_moment(c)``   = E[exp(c Q)]
    * ``mean_exp_weighted(c)`` = E[Q exp(c Q)]

    ``exp_divergence_threshold`` is the supremum of c for which
    E[exp(c Q)] is finite; above it the moment diverges mathematically
    (as opposed to merely overflowing a double).
    """

    def mean(self) -> float:
        raise NotImplementedError

    def sample(self, rng, size: int):
        raise NotImplementedError

    def quantile(self, p: float) -> float:
        raise NotImplementedError

    def pdf(self, q):
        raise NotImplementedError

    def exp_divergence_threshold(self) -> float:
        return math.inf

    def exp_moment(self, c: float) -> float:
        # adaptive quadrature with an explicit cutoff at the 1 - 1e-12
        # quantile; closed forms override this in subclasses
        if c == 0.0:
            return 1.0
        hi = self.quantile(1.0 - 1e-12)
        if c * hi > 700.0:
            return math.inf
        lo = self.quantile(0.0)
        val, _ = integrate.quad(lambda q: math.exp(c * q) * self.pdf(q),
                                lo, hi, epsrel=1e-9, limit=200)
        return val

    def mean_exp_weighted(self, c: float) -> float:
        hi = self.quantile(1.0 - 1e-12)
        if c * hi > 700.0:
            return math.inf
        lo = self.quantile(0.0)
        val, _ = integrate.quad(lambda q: q * math.exp(c * q) * self.pdf(q),
                                lo, hi, epsrel=1e-9, limit=200)
        return val


@dataclass(frozen=True)
class PointMassQuality(QualityDist):
    """Every page has the same quality ``value`` > 0."""

    value: float

    def __post_init__(self):
        if not (self.value > 0):
            raise ValueError("point-mass quality must be positive")

    def mean(self):
        return self.value

    def sample(self, rng, size):
        return np.full(size, self.value)

    def quantile(self, p):
        return self.value

    def exp_moment(self, c):
        x = c * self.value
        return math.exp(x) if x < 700.0 else math.inf

    def mean_exp_weighted(self, c):
        x = c * self.value
        return self.value * math.exp(x) if x < 700.0 else math.inf


@dataclass(frozen=True)
class ExponentialQuality(QualityDist):
    """Exponential quality with the given mean."""

    mean_value: float

    def __post_init__(self):
        if not (self.mean_value > 0):
            raise ValueError("exponential quality mean must be positive")

    def mean(self):
        return self.mean_value

    def sample(self, rng, size):
        return rng.exponential(self.mean_value, size)

    def quantile(self, p):
        return -self.mean_value * math.log1p(-p)

    def pdf(self, q):
        return math.exp(-q / self.mean_value) / self.mean_value

    def exp_divergence_threshold(self):
        return 1.0 / self.mean_value

    def exp_moment(self, c):
        # E[e^{cQ}] = 1/(1 - c mu) for c mu < 1, infinite otherwise
        x = c * self.mean_value
        return 1.0 / (1.0 - x) if x < 1.0 else math.inf

    def mean_exp_weighted(self, c):
        x = c * self.mean_value
        return self.mean_value / (1.0 - x) ** 2 if x < 1.0 else math.inf


@dataclass(frozen=True)
class ParetoQuality(QualityDist):
    """Pareto quality: P(Q > x) = (x / x_min)^(-ccdf_exponent) for x >= x_min."""

    x_min: float
    ccdf_exponent: float

    def __post_init__(self):
        if not (self.x_min > 0):
            raise ValueError("pareto x_min must be positive")
        if not (self.ccdf_exponent > 0):
            raise ValueError("pareto ccdf exponent must be positive")

    def mean(self):
        a = self.ccdf_exponent
        return a * self.x_min / (a - 1.0) if a > 1.0 else math.inf

    def sample(self, rng, size):
        # inverse CCDF on U in (0, 1]
        u = 1.0 - rng.random(size)
        return self.x_min * u ** (-1.0 / self.ccdf_exponent)

    def quantile(self, p):
        return self.x_min * (1.0 - p) ** (-1.0 / self.ccdf_exponent)

    def pdf(self, q):
        a = self.ccdf_exponent
        if q < self.x_min:
            return 0.0
        return a * self.x_min ** a * q ** (-a - 1.0)

    def exp_divergence_threshold(self):
        # exp(cq) beats any power-law tail, so E[exp(cQ)] diverges for c > 0
        return 0.0

    def exp_moment(self, c):
        return 1.0 if c == 0.0 else math.inf

    def mean_exp_weighted(self, c):
        return self.mean() if c == 0.0 else math.inf


@dataclass(frozen=True)
class UniformQuality(QualityDist):
    """Uniform quality on [lo, hi]; lo = 0 is allowed (zero-quality pages
    are valid but unselectable under quality models)."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo >= 0 and self.hi > self.lo):
            raise ValueError("uniform quality needs 0 <= lo < hi")

    def mean(self):
        return 0.5 * (self.lo + self.hi)

    def sample(self, rng, size):
        return rng.uniform(self.lo, self.hi, size)

    def quantile(self, p):
        return self.lo + p * (self.hi - self.lo)

    def pdf(self, q):
        if self.lo <= q <= self.hi:
            return 1.0 / (self.hi - self.lo)
        return 0.0


class OutDegreeDist:
    """Base for per-host out-degree distributions (non-negative integers)."""

    def mean(self) -> float:
        raise NotImplementedError

    def sample(self, rng, size: int):
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantOutDegree(OutDegreeDist):
    m: int

    def __post_init__(self):
        if self.m < 0 or self.m != int(self.m):
            raise ValueError("constant out-degree must be a non-negative integer")

    def mean(self):
        return float(self.m)

    def sample(self, rng, size):
        return np.full(size, int(self.m), dtype=np.int64)


@dataclass(frozen=True)
class PoissonOutDegree(OutDegreeDist):
    mean_value: float

    def __post_init__(self):
        if self.mean_value < 0:
            raise ValueError("poisson out-degree mean must be non-negative")

    def mean(self):
        return self.mean_value

    def sample(self, rng, size):
        return rng.poisson(self.mean_value, size).astype(np.int64)


# ---------------------------------------------------------------------------
# hosts

@dataclass(frozen=True)
class HostParams:
    """Parameters of one host: page arrival rate, attractiveness decay
    timescale, and the laws of page quality and out-degree.

    ``rate`` is in events per time unit and may be zero; ``tau`` must be
    positive.  Both distributions must have finite mean.
    """

    rate: float
    tau: float
    quality_dist: QualityDist
    outdeg_dist: OutDegreeDist

    def __post_init__(self):
        if not (self.rate >= 0):
            raise ValueError("host rate must be non-negative")
        if not (self.tau > 0):
            raise ValueError("host tau must be positive")
        if not math.isfinite(self.quality_dist.mean()):
            raise ValueError("quality distribution must have finite mean")
        if not math.isfinite(self.outdeg_dist.mean()):
            raise ValueError("out-degree distribution must have finite mean")


class HostMatrix:
    """Row-stochastic host-to-host routing probabilities.

    ``rho[i, k]`` is the probability that a link created on host i targets
    host k.  Rows must sum to 1 within 1e-9 and entries lie in [0, 1].
    """

    def __init__(self, rho):
        rho = np.asarray(rho, dtype=np.float64)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("rho must be a square matrix")
        if np.any(rho < 0) or np.any(rho > 1):
            raise ValueError("rho entries must lie in [0, 1]")
        sums = rho.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-9):
            bad = int(np.argmax(np.abs(sums - 1.0)))
            raise ValueError(f"rho row {bad} sums to {sums[bad]!r}, not 1")
        self.rho = rho
        self.rho.setflags(write=False)

    @property
    def n(self) -> int:
        return self.rho.shape[0]

    @classmethod
    def uniform(cls, n: int) -> "HostMatrix":
        return cls(np.full((n, n), 1.0 / n))

    def __eq__(self, other):
        return isinstance(other, HostMatrix) and np.array_equal(self.rho, other.rho)


# ---------------------------------------------------------------------------
# pages and edge logs

@dataclass(frozen=True)
class Page:
    """A page: opaque id, owning host index, creation time, quality (None
    when unknown, e.g. for ingested data), and final in-degree within the
    owning log.  Age is always derived as now - created_at, never stored."""

    id: object
    host: int
    created_at: float
    quality: float | None
    indegree: int


class EdgeLog:
    """A fixed page set plus a timestamped directed edge sequence.

    Pages are stored in non-decreasing creation order, edges in
    non-decreasing time order.  Every edge satisfies
    ``created[target] <= time`` and ``created[source] <= time`` (a page
    cannot link into the future); self-edges are forbidden; multi-edges
    are allowed.  The structure is append-only replay input, not a general
    graph store.
    """

    def __init__(self, page_ids, page_host, page_created, edge_src, edge_tgt,
                 edge_time, n_hosts=None, page_quality=None, host_names=None,
                 validate=True):
        self.page_ids = list(page_ids)
        self.page_host = np.array(page_host, dtype=np.int64)
        self.page_created = np.array(page_created, dtype=np.float64)
        self.edge_src = np.array(edge_src, dtype=np.int64)
        self.edge_tgt = np.array(edge_tgt, dtype=np.int64)
        self.edge_time = np.array(edge_time, dtype=np.float64)
        if page_quality is None:
            self.page_quality = None
        else:
            self.page_quality = np.array(page_quality, dtype=np.float64)
        if n_hosts is None:
            n_hosts = int(self.page_host.max()) + 1 if len(self.page_ids) else 0
        self.n_hosts = int(n_hosts)
        self.host_names = list(host_names) if host_names is not None else None
        frozen = [self.page_host, self.page_created, self.edge_src,
                  self.edge_tgt, self.edge_time]
        if self.page_quality is not None:
            frozen.append(self.page_quality)
        for arr in frozen:
            arr.setflags(write=False)
        if validate:
            self.validate()

    @property
    def n_pages(self) -> int:
        return len(self.page_ids)

    @property
    def n_edges(self) -> int:
        return len(self.edge_time)

    def validate(self):
        n, m = self.n_pages, self.n_edges
        if not (len(self.page_host) == len(self.page_created) == n):
            raise ValueError("page arrays disagree in length")
        if not (len(self.edge_src) == len(self.edge_tgt) == m):
            raise ValueError("edge arrays disagree in length")
        if n and (self.page_host.min() < 0 or self.page_host.max() >= self.n_hosts):
            raise ValueError("page host index out of range")
        if n > 1 and np.any(np.diff(self.page_created) < 0):
            raise ValueError("pages must be sorted by creation time")
        if m:
            if self.edge_src.min() < 0 or self.edge_src.max() >= n \
                    or self.edge_tgt.min() < 0 or self.edge_tgt.max() >= n:
                raise ValueError("edge endpoint out of range")
            if np.any(np.diff(self.edge_time) < 0):
                raise ValueError("edges must be sorted by time")
            if np.any(self.edge_src == self.edge_tgt):
                raise ValueError("self-edges are not allowed")
            if np.any(self.page_created[self.edge_tgt] > self.edge_time):
                raise ValueError("edge targets a page created in the future")
            if np.any(self.page_created[self.edge_src] > self.edge_time):
                raise ValueError("edge source created after the edge itself")

    def indegrees(self) -> np.ndarray:
        """Final in-degree of every page (count of edges targeting it)."""
        return np.bincount(self.edge_tgt, minlength=self.n_pages)

    def age_differences(self) -> np.ndarray:
        """Per edge: creation-time difference source minus target (>= 0
        for logs where sources emit at their own creation)."""
        return self.page_created[self.edge_src] - self.page_created[self.edge_tgt]

    @property
    def pages(self) -> list[Page]:
        deg = self.indegrees()
        q = self.page_quality
        return [Page(self.page_ids[i], int(self.page_host[i]),
                     float(self.page_created[i]),
                     float(q[i]) if q is not None else None, int(deg[i]))
                for i in range(self.n_pages)]


# ---------------------------------------------------------------------------
# the attractiveness function

def attractiveness(spec: ModelSpec, d_eff, q, age, tau):
    """Product of the enabled attractiveness factors.

    ``d_eff`` is the effective degree (raw in-degree plus the configured
    offset, conventionally d + 1 so newborn pages are selectable under
    degree models).  Returns 1 when all factors are disabled.  Accepts
    scalars or numpy arrays.
    """
    if np.any(np.asarray(age) < 0):
        raise ValueError("age must be non-negative")
    if np.any(np.asarray(tau) <= 0):
        raise ValueError("tau must be positive")
    w = 1.0
    if spec.use_quality:
        w = w * q
    if spec.use_degree:
        w = w * d_eff
    if spec.use_recency:
        w = w * np.exp(-np.asarray(age, dtype=np.float64) / tau)
    if np.ndim(w) == 0:
        return float(w)
    return w

"""Forward simulation of the growth process in continuous time.

Pages arrive on each host by independent Poisson processes.  The merged
arrival stream is generated by superposition: a single exponential clock
at the total rate, with the owning host drawn categorically in proportion
to the per-host rates (equivalent in law to per-host clocks).  Each new
page draws an out-degree and a quality from its host's distributions, and
each of its links independently picks a target host from the routing
matrix row and then a target page with probability proportional to
attractiveness at that instant.

A link whose drawn target host has no selectable page causes the host to
be redrawn up to ``max_host_resample`` times, after which the link is
dropped and counted (the process itself never faces this after the early
boundary period).  The out-link draws of one page are mutually
independent: they all see the graph state at the page's creation instant,
and degree increments are applied after the whole batch.

Runs are deterministic given the seed.
"""

from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .core import EdgeLog, HostMatrix, HostParams, ModelSpec, NoTargetError
from .weights import REBASE_EXPONENT, HostRegistry


@dataclass(frozen=True)
class SimConfig:
    """Full generative configuration for one run."""

    hosts: tuple
    rho: HostMatrix
    spec: ModelSpec
    horizon: float
    seed: int
    d0: float = 1.0
    max_host_resample: int = 8

    def __post_init__(self):
        object.__setattr__(self, "hosts", tuple(self.hosts))
        if not (self.horizon > 0):
            raise ValueError("horizon must be positive")
        if self.rho.n != len(self.hosts):
            raise ValueError("rho dimension does not match the host count")
        for h in self.hosts:
            if not isinstance(h, HostParams):
                raise TypeError("hosts must be HostParams instances")


@dataclass
class SimStats:
    """Counters reported by one run."""

    pages: int = 0
    edges: int = 0
    dropped_links: int = 0
    rebases: int = 0

    def to_dict(self):
        return {"pages": self.pages, "edges": self.edges,
                "dropped_links": self.dropped_links, "rebases": self.rebases}


def sample_target(state: HostRegistry, now: float, exclude: int | None,
                  u01: float) -> int:
    """Pick a page on the host with probability proportional to its
    attractiveness at time ``now``, never returning ``exclude``.

    The registry's rebased weights already encode the time dependence (the
    common decay factor cancels in the selection ratios), so ``now`` only
    sanity-checks that sampling does not run backwards in time.
    """
    if now < state.t_ref:
        raise ValueError("sampling before the registry reference time")
    return state.sample(u01, exclude=exclude)


def _draw_arrivals(rng, rates, horizon):
    """Merged Poisson arrival times and owning hosts over [0, horizon)."""
    total = float(np.sum(rates))
    if total <= 0:
        return np.empty(0), np.empty(0, dtype=np.int64)
    times = []
    t = 0.0
    chunk = max(64, int(total * horizon * 1.2))
    while True:
        gaps = rng.exponential(1.0 / total, size=chunk)
        arr = t + np.cumsum(gaps)
        cut = np.searchsorted(arr, horizon, side="left")
        times.append(arr[:cut])
        if cut < len(arr):
            break
        t = float(arr[-1])
        chunk = max(64, chunk // 4)
    times = np.concatenate(times)
    cum = np.cumsum(np.asarray(rates, dtype=np.float64)) / total
    hosts = np.searchsorted(cum, rng.random(len(times)), side="right")
    return times, np.minimum(hosts, len(rates) - 1).astype(np.int64)


def generate(config: SimConfig,
             rebase_exponent: float = REBASE_EXPONENT) -> tuple[EdgeLog, SimStats]:
    """Run the process to the horizon and return the log plus counters."""
    rng = np.random.default_rng(config.seed)
    n_hosts = len(config.hosts)
    times, owners = _draw_arrivals(rng, [h.rate for h in config.hosts],
                                   config.horizon)
    n_pages = len(times)
    stats = SimStats(pages=n_pages)
    if n_pages == 0:
        log = EdgeLog([], [], [], [], [], [], n_hosts=n_hosts,
                      page_quality=[])
        return log, stats

    # per-page draws, grouped by host for one vectorized call each
    out_deg = np.zeros(n_pages, dtype=np.int64)
    quality = np.zeros(n_pages, dtype=np.float64)
    for h, params in enumerate(config.hosts):
        idx = np.nonzero(owners == h)[0]
        if len(idx):
            out_deg[idx] = params.outdeg_dist.sample(rng, len(idx))
            quality[idx] = params.quality_dist.sample(rng, len(idx))

    registries = [HostRegistry(config.spec, params.tau, d0=config.d0,
                               capacity=max(16, int(np.sum(owners == h))),
                               rebase_exponent=rebase_exponent)
                  for h, params in enumerate(config.hosts)]
    # local registry index -> global page index, per host
    local_to_global = [[] for _ in range(n_hosts)]

    rho_cum = [list(np.cumsum(row)) for row in config.rho.rho]
    attempts = config.max_host_resample + 1
    rand = rng.random
    times_list = times.tolist()
    owners_list = owners.tolist()
    out_deg_list = out_deg.tolist()
    quality_list = quality.tolist()

    e_src, e_tgt, e_time = [], [], []
    for p in range(n_pages):
        t = times_list[p]
        src_host = owners_list[p]
        cum = rho_cum[src_host]
        hits = []  # (host, local index) pairs, degree applied after the batch
        for _ in range(out_deg_list[p]):
            for _attempt in range(attempts):
                k = bisect_right(cum, rand() * cum[-1])
                if k >= n_hosts:
                    k = n_hosts - 1
                reg = registries[k]
                if len(reg) == 0:
                    continue
                try:
                    local = reg.sample(rand())
                except NoTargetError:
                    continue
                e_src.append(p)
                e_tgt.append(local_to_global[k][local])
                e_time.append(t)
                hits.append((k, local))
                break
            else:
                stats.dropped_links += 1
        reg = registries[src_host]
        local_to_global[src_host].append(p)
        reg.add_page(quality_list[p], t)
        for k, local in hits:
            registries[k].on_inlink(local)

    stats.edges = len(e_src)
    stats.rebases = sum(r.rebase_count for r in registries)
    log = EdgeLog(list(range(n_pages)), owners, times, e_src, e_tgt, e_time,
                  n_hosts=n_hosts, page_quality=quality)
    return log, stats

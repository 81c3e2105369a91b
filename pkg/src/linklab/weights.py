"""Dynamic weighted sampling over a host's candidate pages.

Under a recency model, the attractiveness of every page decays by the same
factor exp(-dt/tau) between two instants, so selection probabilities only
depend on weight ratios.  The registry therefore stores weights rebased to
a movable reference time t_ref:

    stored(p) = base(p) * exp((t_p - t_ref) / tau)

where base combines the quality and effective-degree factors.  Pairwise
ratios equal true attractiveness ratios exactly (the common factor
cancels), and when the running exponent (t - t_ref)/tau exceeds the rebase
threshold all weights are recomputed against t_ref = t, which preserves
ratios to within one rounding each (relative drift < 1e-12 per rebase).
Pages older than several hundred tau underflow to weight zero; they are
unselectable anyway at that point.

Degree models need per-page weight updates on every incoming link, so the
registry keeps a Fenwick (prefix-sum) tree for O(log n) update and
inverse-cumulative sampling.  Static models (no degree factor) use a plain
growing prefix array with bisection.
"""

from bisect import bisect_right
from math import exp

from .core import ModelSpec, NoTargetError

REBASE_EXPONENT = 500.0


class FenwickTree:
    """Prefix-sum tree over float weights with inverse-cumulative search."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.size = 0
        self.tree = [0.0] * (capacity + 1)
        self.values = [0.0] * capacity

    def append(self, w: float):
        i = self.size
        if i >= self.capacity:
            self._grow()
        self.size = i + 1
        if w != 0.0:
            self._add(i, w)
        self.values[i] = w

    def _grow(self):
        self.capacity = max(2 * self.capacity, 16)
        tree = [0.0] * (self.capacity + 1)
        values = self.values + [0.0] * (self.capacity - len(self.values))
        self.values = values
        self.tree = tree
        for i in range(self.size):
            if values[i] != 0.0:
                self._add(i, values[i], raw=True)

    def _add(self, i, delta, raw=False):
        tree = self.tree
        j = i + 1
        cap = self.capacity
        while j <= cap:
            tree[j] += delta
            j += j & (-j)

    def set(self, i: int, w: float):
        delta = w - self.values[i]
        if delta != 0.0:
            self._add(i, delta)
            self.values[i] = w

    def prefix(self, i: int) -> float:
        """Sum of values[0:i]."""
        s = 0.0
        tree = self.tree
        while i > 0:
            s += tree[i]
            i -= i & (-i)
        return s

    def total(self) -> float:
        return self.prefix(self.size)

    def find(self, u: float) -> int:
        """Smallest index i with prefix(i + 1) > u (u in [0, total))."""
        idx = 0
        # largest power of two <= capacity
        bit = 1 << (self.capacity.bit_length() - 1)
        tree = self.tree
        while bit:
            nxt = idx + bit
            if nxt <= self.capacity and tree[nxt] <= u:
                idx = nxt
                u -= tree[nxt]
            bit >>= 1
        return min(idx, self.size - 1)

    def rebuild(self):
        self.tree = [0.0] * (self.capacity + 1)
        for i, v in enumerate(self.values[:self.size]):
            if v != 0.0:
                self._add(i, v)


class HostRegistry:
    """Candidate pages of a single host under a single model.

    Weights follow the rebasing scheme in the module docstring.  Pages are
    indexed locally in insertion order; the caller keeps its own global
    mapping.  ``sample`` draws an index with probability proportional to
    weight, optionally excluding one page exactly (the excluded mass is
    removed from the draw, not renormalized after the fact).
    """

    def __init__(self, spec: ModelSpec, tau: float, d0: float = 1.0,
                 capacity: int = 16, rebase_exponent: float = REBASE_EXPONENT):
        self.spec = spec
        self.tau = tau
        self.d0 = d0
        self.rebase_exponent = rebase_exponent
        self.t_ref = 0.0
        self.rebase_count = 0
        self.qualities: list[float] = []
        self.birth: list[float] = []
        self.degree: list[int] = []
        self.rfac: list[float] = []  # exp((t_p - t_ref)/tau), 1.0 without recency
        self._dynamic = spec.use_degree
        if self._dynamic:
            self._tree = FenwickTree(capacity)
        else:
            self._prefix = [0.0]  # prefix[i+1] = sum of weights[0:i+1]
            self._weights = []

    def __len__(self):
        return len(self.birth)

    # -- weight bookkeeping -------------------------------------------------

    def _base(self, i: int) -> float:
        w = 1.0
        if self.spec.use_quality:
            w *= self.qualities[i]
        if self.spec.use_degree:
            w *= self.degree[i] + self.d0
        return w

    def weight(self, i: int) -> float:
        if self._dynamic:
            return self._tree.values[i]
        return self._weights[i]

    def total(self) -> float:
        if self._dynamic:
            return self._tree.total()
        return self._prefix[-1]

    def add_page(self, quality: float, t: float) -> int:
        """Register a page created at time t; returns its local index."""
        if self.spec.use_recency and (t - self.t_ref) / self.tau > self.rebase_exponent:
            self.rebase(t)
        i = len(self.birth)
        self.birth.append(t)
        self.qualities.append(quality)
        self.degree.append(0)
        if self.spec.use_recency:
            x = (t - self.t_ref) / self.tau
            rf = exp(x) if x > -745.0 else 0.0
        else:
            rf = 1.0
        self.rfac.append(rf)
        w = self._base(i) * rf
        if self._dynamic:
            self._tree.append(w)
        else:
            self._weights.append(w)
            self._prefix.append(self._prefix[-1] + w)
        return i

    def on_inlink(self, i: int):
        """Record an incoming link to local page i (degree increment)."""
        self.degree[i] += 1
        if self._dynamic:
            self._tree.set(i, self._base(i) * self.rfac[i])

    def rebase(self, t_new: float):
        """Recompute every weight against reference time t_new."""
        tau = self.tau
        self.t_ref = t_new
        for i, b in enumerate(self.birth):
            x = (b - t_new) / tau
            self.rfac[i] = exp(x) if x > -745.0 else 0.0
        if self._dynamic:
            vals = self._tree.values
            for i in range(len(self.birth)):
                vals[i] = self._base(i) * self.rfac[i]
            self._tree.rebuild()
        else:
            w = [self._base(i) * self.rfac[i] for i in range(len(self.birth))]
            self._weights = w
            p = [0.0] * (len(w) + 1)
            s = 0.0
            for i, v in enumerate(w):
                s += v
                p[i + 1] = s
            self._prefix = p
        self.rebase_count += 1

    # -- sampling -------------------------------------------------------------

    def sample(self, u01: float, exclude: int | None = None) -> int:
        """Draw a local index with probability weight / total weight.

        ``u01`` is a uniform draw in [0, 1).  ``exclude`` removes one page
        from the candidate set exactly: the draw is made over the remaining
        mass, with the excluded page's interval skipped.  Raises
        ``NoTargetError`` when no other candidate has positive weight.
        """
        n = len(self.birth)
        total = self.total()
        w_ex = 0.0
        if exclude is not None and 0 <= exclude < n:
            w_ex = self.weight(exclude)
        avail = total - w_ex
        if not (avail > 0.0):
            raise NoTargetError("no candidate page with positive weight")
        u = u01 * avail
        if self._dynamic:
            if w_ex and u >= self._tree.prefix(exclude):
                u += w_ex
            idx = self._tree.find(u)
        else:
            if w_ex and u >= self._prefix[exclude]:
                u += w_ex
            idx = bisect_right(self._prefix, u) - 1
        # rounding at interval boundaries can land on the excluded page or
        # a zero-weight slot; step to the nearest valid candidate
        if idx >= n or idx == exclude or self.weight(idx) <= 0.0:
            idx = self._nearest_valid(min(idx, n - 1), exclude, n)
        return idx

    def _nearest_valid(self, start: int, exclude, n: int) -> int:
        j = start
        while j >= 0 and (j == exclude or self.weight(j) <= 0.0):
            j -= 1
        if j < 0:
            j = start + 1
            while j < n and (j == exclude or self.weight(j) <= 0.0):
                j += 1
            if j >= n:
                raise NoTargetError("no candidate page with positive weight")
        return j

    def selection_probabilities(self):
        """Normalized selection distribution (for exactness checks)."""
        total = self.total()
        if self._dynamic:
            w = self._tree.values[:len(self.birth)]
        else:
            w = self._weights
        return [x / total for x in w]

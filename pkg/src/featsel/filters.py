"""Filter-method scores and subset search.

Pearson correlation ranking, equal-frequency discretization, entropy /
information-gain / symmetrical-uncertainty machinery, the CFS subset merit,
and best-first CFS subset selection.
"""

import math
import heapq
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .data import BINARY
from .errors import DataError, UndefinedCorrelationError
from .results import FeatureScore, SelectionResult


@dataclass(frozen=True)
class AssociationScore:
    feature: str
    rho: float

    @property
    def abs_rho(self):
        return abs(self.rho)


def pearson(x, y):
    """Sample Pearson correlation (N-1 normalization throughout).

    Raises UndefinedCorrelationError naming the zero-variance side.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError("pearson needs two equal-length 1-d sequences")
    if x.size < 2:
        raise DataError("pearson needs at least 2 samples")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = math.sqrt(float(xc @ xc) / (x.size - 1))
    sy = math.sqrt(float(yc @ yc) / (y.size - 1))
    if sx == 0.0:
        raise UndefinedCorrelationError("x")
    if sy == 0.0:
        raise UndefinedCorrelationError("y")
    rho = (float(xc @ yc) / (x.size - 1)) / (sx * sy)
    return float(min(1.0, max(-1.0, rho)))


def rank_pearson(d, abs_rho_min=None):
    """Rank features by |rho| to the target, descending.

    Ties break by column order. Zero-variance features are excluded (ranked
    last, reason recorded) instead of failing the run. When ``abs_rho_min``
    is given, only features at or above it are marked selected; otherwise
    every scored feature is selected (pure ranking).
    """
    rhos = {}
    excluded = {}
    for j, name in enumerate(d.names):
        try:
            rhos[name] = pearson(d.x[:, j], d.y)
        except UndefinedCorrelationError as e:
            if e.side == "y":
                raise
            excluded[name] = "zero variance"
    order = sorted(
        (n for n in d.names if n in rhos),
        key=lambda n: (-abs(rhos[n]), d.names.index(n)),
    )
    rows = []
    for rank, name in enumerate(order, start=1):
        keep = True if abs_rho_min is None else abs(rhos[name]) >= abs_rho_min
        rows.append(FeatureScore(name, rhos[name], rank, keep))
    for rank, name in enumerate(sorted(excluded, key=d.names.index), len(rows) + 1):
        rows.append(FeatureScore(name, 0.0, rank, False, excluded[name]))
    return SelectionResult(method="pearson", scores=tuple(rows))


@dataclass(frozen=True)
class DiscretizedColumn:
    """Equal-frequency binning of one column.

    Bins are closed on the right: bin k holds values in (edge_{k-1}, edge_k].
    ``assignments`` maps each sample to its bin id; ``counts`` sums to N.
    """

    bin_edges: np.ndarray
    assignments: np.ndarray
    counts: np.ndarray
    degenerate: bool = False

    @property
    def n_bins(self):
        return self.counts.size

    @property
    def n(self):
        return int(self.counts.sum())


def discretize(x, bins=10):
    """Equal-frequency binning with duplicate quantile edges merged.

    Columns with fewer than 2 distinct values collapse to a single bin and
    are flagged degenerate.
    """
    if bins < 2:
        raise DataError("need at least 2 bins")
    x = np.asarray(x, dtype=float)
    distinct = np.unique(x)
    if distinct.size < 2:
        return DiscretizedColumn(
            bin_edges=np.empty(0),
            assignments=np.zeros(x.size, dtype=np.int64),
            counts=np.array([x.size]),
            degenerate=True,
        )
    qs = np.quantile(x, np.arange(1, bins) / bins)
    edges = np.unique(qs)
    edges = edges[edges < x.max()]
    if edges.size == 0:
        # Quantiles all collapsed onto the max; fall back to one cut between
        # the two smallest distinct values so both bins are populated.
        edges = np.array([(distinct[0] + distinct[1]) / 2.0])
    assignments = np.searchsorted(edges, x, side="left").astype(np.int64)
    counts = np.bincount(assignments, minlength=edges.size + 1).astype(np.int64)
    return DiscretizedColumn(edges, assignments, counts)


def discretize_binary(values):
    """Two natural bins for a {0,1} vector (no quantile machinery)."""
    v = np.asarray(values, dtype=float)
    if not np.all((v == 0.0) | (v == 1.0)):
        raise DataError("discretize_binary needs {0,1} values")
    assignments = v.astype(np.int64)
    counts = np.bincount(assignments, minlength=2).astype(np.int64)
    return DiscretizedColumn(np.array([0.0]), assignments, counts)


@dataclass(frozen=True)
class EntropyReport:
    h_x: float
    h_y: float
    ig: float
    su: float


def contingency(x, y):
    """bin(x) x bin(y) joint counts for two discretized columns."""
    if x.assignments.size != y.assignments.size:
        raise DataError("discretized columns disagree on N")
    mx, my = x.n_bins, y.n_bins
    flat = np.bincount(x.assignments * my + y.assignments, minlength=mx * my)
    return flat.reshape(mx, my)


def _entropy_bits(counts):
    c = counts[counts > 0].astype(float)
    p = c / c.sum()
    return float(-(p * np.log2(p)).sum())


def symmetrical_uncertainty(x, y):
    """Entropy report in bits; IG via the symmetric identity H(X)+H(Y)-H(X,Y)."""
    joint = contingency(x, y)
    h_x = _entropy_bits(x.counts)
    h_y = _entropy_bits(y.counts)
    h_xy = _entropy_bits(joint.ravel())
    ig = max(0.0, h_x + h_y - h_xy)
    su = 2.0 * ig / (h_x + h_y) if h_x + h_y > 0 else 0.0
    return EntropyReport(h_x=h_x, h_y=h_y, ig=ig, su=float(min(su, 1.0)))


@dataclass(frozen=True)
class MeritResult:
    subset: tuple
    k: int
    r_cf_bar: float
    r_ff_bar: float
    merit: float


def _merit_value(k, r_cf_bar, r_ff_bar):
    return k * r_cf_bar / math.sqrt(k + k * (k - 1) * r_ff_bar)


def cfs_merit(subset, su_target, su_pairs):
    """CFS subset merit: k*r_cf / sqrt(k + k(k-1)*r_ff).

    ``su_target`` maps feature -> SU with the class; ``su_pairs`` maps
    frozenset({a, b}) -> SU. A single feature's merit is its own SU.
    """
    names = tuple(subset)
    k = len(names)
    if k == 0:
        raise DataError("merit of an empty subset is undefined")
    if len(set(names)) != k:
        raise DataError("subset contains duplicates")
    r_cf = sum(su_target[n] for n in names) / k
    if k == 1:
        r_ff = 0.0
    else:
        pair_sum = 0.0
        for i in range(k):
            for j in range(i + 1, k):
                pair_sum += su_pairs[frozenset((names[i], names[j]))]
        r_ff = pair_sum / (k * (k - 1) / 2)
    return MeritResult(
        subset=tuple(sorted(names)),
        k=k,
        r_cf_bar=r_cf,
        r_ff_bar=r_ff,
        merit=_merit_value(k, r_cf, r_ff),
    )


@dataclass(frozen=True)
class SearchTrace:
    visited: tuple  # (subset tuple, merit) in evaluation order
    stop_reason: str  # "budget" | "plateau"
    expansions: int

    @property
    def best_merit(self):
        return max(m for _, m in self.visited)


def best_first_search(su_target, su_pairs, names, plateau_limit=5, max_expansions=None):
    """Best-first subset search over precomputed SU tables.

    The open list is a max-heap on merit; the empty set is expanded into
    singletons; successors add one feature; revisits are suppressed; ties
    break by column order. Stops after ``plateau_limit`` consecutive fully
    expanded subsets that fail to improve the best merit, or after the
    expansion budget (default 10*p).
    """
    names = tuple(names)
    p = len(names)
    if p == 0:
        raise DataError("no features to search")
    if max_expansions is None:
        max_expansions = 10 * p
    index = {n: i for i, n in enumerate(names)}

    def merit_of(subset):
        r_cf = sum(su_target[n] for n in subset) / len(subset)
        k = len(subset)
        if k == 1:
            r_ff = 0.0
        else:
            pair_sum = 0.0
            for i in range(k):
                for j in range(i + 1, k):
                    pair_sum += su_pairs[frozenset((subset[i], subset[j]))]
            r_ff = pair_sum / (k * (k - 1) / 2)
        return _merit_value(k, r_cf, r_ff)

    visited = []
    evaluated = set()
    heap = []  # (-merit, subset indices sorted, subset names)
    best_merit = -math.inf
    best_subset = None

    def evaluate(subset_names):
        nonlocal best_merit, best_subset
        key = frozenset(subset_names)
        if key in evaluated:
            return
        evaluated.add(key)
        m = merit_of(subset_names)
        visited.append((subset_names, m))
        if m > best_merit:
            best_merit = m
            best_subset = subset_names
        heapq.heappush(heap, (-m, tuple(index[n] for n in subset_names), subset_names))

    stop_reason = "plateau"
    plateau = 0
    expansions = 0
    frontier_sets = [()]  # the empty set is expanded first
    while True:
        if expansions >= max_expansions:
            stop_reason = "budget"
            break
        if frontier_sets:
            subset = frontier_sets.pop()
        elif heap:
            _, _, subset = heapq.heappop(heap)
        else:
            stop_reason = "plateau"
            break
        expansions += 1
        before = best_merit
        present = set(subset)
        for n in names:
            if n not in present:
                child = tuple(sorted(subset + (n,), key=index.__getitem__))
                evaluate(child)
        if best_merit > before:
            plateau = 0
        else:
            plateau += 1
            if plateau >= plateau_limit:
                stop_reason = "plateau"
                break
    trace = SearchTrace(tuple(visited), stop_reason, expansions)
    return best_subset, best_merit, trace


def su_tables(d, bins=10, workers=1):
    """Per-feature and pairwise SU tables for a binary-target dataset.

    Returns (su_target, su_pairs, excluded) where excluded maps degenerate
    (single-bin) features to the recorded reason.
    """
    if d.target.kind != BINARY:
        raise DataError("CFS needs a binary target")
    if not d.target.both_labels_present():
        raise DataError("binary target must contain both labels")
    label = discretize_binary(d.y)
    cols = {}
    excluded = {}
    for j, name in enumerate(d.names):
        col = discretize(d.x[:, j], bins=bins)
        if col.degenerate:
            excluded[name] = "single bin after discretization"
        else:
            cols[name] = col
    su_target = {n: symmetrical_uncertainty(cols[n], label).su for n in cols}
    kept = [n for n in d.names if n in cols]
    pairs = [(a, b) for i, a in enumerate(kept) for b in kept[i + 1 :]]

    def one(pair):
        a, b = pair
        return frozenset(pair), symmetrical_uncertainty(cols[a], cols[b]).su

    if workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            su_pairs = dict(pool.map(one, pairs))
    else:
        su_pairs = dict(one(p) for p in pairs)
    return su_target, su_pairs, excluded


def cfs_select(d, bins=10, plateau_limit=5, max_expansions=None, workers=1):
    """Best-first CFS subset selection on a binary-target dataset.

    Returns (SelectionResult, SearchTrace). Deterministic given the dataset.
    """
    su_target, su_pairs, excluded = su_tables(d, bins=bins, workers=workers)
    kept = [n for n in d.names if n not in excluded]
    if not kept:
        raise DataError("every feature is degenerate; nothing to search")
    subset, _, trace = best_first_search(
        su_target, su_pairs, kept, plateau_limit=plateau_limit, max_expansions=max_expansions
    )
    chosen = set(subset)
    order = sorted(
        kept, key=lambda n: (n not in chosen, -su_target[n], d.names.index(n))
    )
    rows = [
        FeatureScore(n, su_target[n], rank, n in chosen)
        for rank, n in enumerate(order, start=1)
    ]
    for rank, name in enumerate(sorted(excluded, key=d.names.index), len(rows) + 1):
        rows.append(FeatureScore(name, 0.0, rank, False, excluded[name]))
    return SelectionResult(method="cfs", scores=tuple(rows)), trace

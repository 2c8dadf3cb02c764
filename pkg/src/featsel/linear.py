"""Ordinary, ridge, and LASSO regression plus the LASSO regularization path.

Conventions shared by every fit here: the intercept is never penalized (fits
run on mean-centered columns and target), and the LASSO objective is

    (1/2N) * ||y - Xw||^2  +  lambda * ||w||_1

so penalty strengths are comparable across datasets of different size.
"""

import io
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericalError, ConvergenceError
from .results import FeatureScore, SelectionResult


@dataclass(frozen=True)
class WeightVector:
    weights: np.ndarray
    intercept: float
    names: tuple
    degenerate: bool = False

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size != len(self.names):
            raise DataError("weight vector length must match feature names")
        if not np.all(np.isfinite(w)) or not math.isfinite(self.intercept):
            raise DataError("weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def predict(self, x):
        return np.asarray(x, dtype=float) @ self.weights + self.intercept


@dataclass(frozen=True)
class PenaltySpec:
    kind: str  # "none" | "ridge" | "lasso"
    strength: float = 0.0
    zero_override: bool = False

    def __post_init__(self):
        if self.kind not in ("none", "ridge", "lasso"):
            raise DataError(f"unknown penalty kind {self.kind!r}")
        if self.strength < 0:
            raise DataError("penalty strength must be non-negative")
        if self.kind != "none" and self.strength == 0.0 and not self.zero_override:
            raise DataError(
                "zero strength with a penalized fit needs zero_override=True"
            )


def _centered(d):
    x = d.x
    y = d.y
    x_mean = x.mean(axis=0)
    y_mean = y.mean()
    return x - x_mean, y - y_mean, x_mean, y_mean


def ols_fit(d):
    """Least squares via SVD; minimum-norm and flagged on rank deficiency."""
    xc, yc, x_mean, y_mean = _centered(d)
    w, _, rank, _ = np.linalg.lstsq(xc, yc, rcond=None)
    intercept = y_mean - float(w @ x_mean)
    return WeightVector(w, intercept, d.names, degenerate=rank < d.p)


def ridge_fit(d, lambda2):
    """Unique minimizer of ||y - Xw||^2 + lambda2*||w||^2 (intercept free)."""
    if lambda2 <= 0:
        raise DataError("ridge needs lambda2 > 0")
    xc, yc, x_mean, y_mean = _centered(d)
    gram = xc.T @ xc + lambda2 * np.eye(d.p)
    w = np.linalg.solve(gram, xc.T @ yc)
    intercept = y_mean - float(w @ x_mean)
    return WeightVector(w, intercept, d.names)


def lambda_max(d):
    """Smallest penalty at which the LASSO solution is identically zero."""
    xc, yc, _, _ = _centered(d)
    return float(np.max(np.abs(xc.T @ yc)) / d.n) if d.p else 0.0


def _soft(value, threshold):
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


def lasso_fit(d, lam, tol=1e-6, max_sweeps=10_000):
    """Cyclic coordinate descent with soft thresholding on centered data.

    Converged when the largest absolute coefficient change in a full sweep
    drops below ``tol``. The objective is checked to be non-increasing every
    sweep. Non-convergence raises ConvergenceError carrying the last iterate.
    """
    if lam < 0:
        raise DataError("lasso needs lambda >= 0")
    xc, yc, x_mean, y_mean = _centered(d)
    n, p = xc.shape
    sq = np.einsum("ij,ij->j", xc, xc)  # column squared norms
    w = np.zeros(p)
    r = yc.copy()
    objective = float(r @ r) / (2 * n)

    def make_result():
        return WeightVector(w.copy(), y_mean - float(w @ x_mean), d.names)

    for _ in range(max_sweeps):
        max_delta = 0.0
        for j in range(p):
            if sq[j] == 0.0:
                continue
            old = w[j]
            rho = float(xc[:, j] @ r) / n + (sq[j] / n) * old
            new = _soft(rho, lam) / (sq[j] / n)
            if new != old:
                r -= xc[:, j] * (new - old)
                w[j] = new
            delta = abs(new - old)
            if delta > max_delta:
                max_delta = delta
        new_objective = float(r @ r) / (2 * n) + lam * float(np.abs(w).sum())
        if new_objective > objective + 1e-12 * max(1.0, objective):
            raise NumericalError(
                f"coordinate descent objective increased: {objective} -> {new_objective}"
            )
        objective = new_objective
        if max_delta < tol:
            return make_result()
    raise ConvergenceError(
        f"lasso did not converge in {max_sweeps} sweeps (lambda={lam})",
        last_iterate=make_result(),
    )


def fit_linear(d, penalty):
    """Dispatch a PenaltySpec to the matching fit."""
    if penalty.kind == "none":
        return ols_fit(d)
    if penalty.kind == "ridge":
        return ridge_fit(d, penalty.strength)
    return lasso_fit(d, penalty.strength)


def kkt_violation(d, w, lam):
    """Largest violation of the LASSO subgradient optimality conditions."""
    xc, yc, _, _ = _centered(d)
    grad = xc.T @ (yc - xc @ w.weights) / d.n
    worst = 0.0
    for j in range(d.p):
        if w.weights[j] != 0.0:
            worst = max(worst, abs(grad[j] - lam * math.copysign(1.0, w.weights[j])))
        else:
            worst = max(worst, max(0.0, abs(grad[j]) - lam))
    return worst


@dataclass(frozen=True)
class RegularizationPath:
    """Piecewise-linear LASSO path.

    ``breakpoints`` descend from lambda_max; ``active_sets[k]`` is the active
    feature-index set on the segment just above ``breakpoints[k]`` (so the
    first entry is empty); ``coefs[k]`` are the full-length coefficients at
    the breakpoint. ``withheld`` logs features refused entry because they
    were exactly collinear with the active set, as (breakpoint index, name).
    """

    breakpoints: tuple
    active_sets: tuple
    coefs: np.ndarray = field(repr=False)
    intercepts: tuple
    names: tuple
    withheld: tuple = ()

    @property
    def n_breakpoints(self):
        return len(self.breakpoints)

    def weight_vector(self, k):
        return WeightVector(self.coefs[k], self.intercepts[k], self.names)

    def coef_at(self, lam):
        """Coefficients at an arbitrary lambda by segment interpolation."""
        bp = self.breakpoints
        if lam >= bp[0]:
            return np.zeros(len(self.names))
        if lam < bp[-1] - 1e-15:
            raise NumericalError(
                f"lambda {lam} below the path terminus {bp[-1]}"
            )
        for k in range(len(bp) - 1):
            hi, lo = bp[k], bp[k + 1]
            if lo <= lam <= hi:
                if hi == lo:
                    return self.coefs[k + 1].copy()
                t = (hi - lam) / (hi - lo)
                return self.coefs[k] + t * (self.coefs[k + 1] - self.coefs[k])
        return self.coefs[-1].copy()

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["breakpoint", "lambda", "feature", "coefficient"])
        for k, (lam, active) in enumerate(zip(self.breakpoints, self.active_sets)):
            for j in active:
                w.writerow([k, repr(float(lam)), self.names[j], repr(float(self.coefs[k, j]))])
        return buf.getvalue()


def _is_collinear(xc, active, j, rtol=1e-10):
    """True when column j lies (numerically) in the span of the active columns."""
    if not active:
        return float(xc[:, j] @ xc[:, j]) == 0.0
    a = xc[:, list(active)]
    col = xc[:, j]
    fit, _, _, _ = np.linalg.lstsq(a, col, rcond=None)
    resid = col - a @ fit
    denom = float(col @ col)
    if denom == 0.0:
        return True
    return float(resid @ resid) / denom < rtol


def lars_path(d, max_active=None):
    """Trace the LASSO regularization path (LARS with the drop modification).

    Features enter at equal-correlation breakpoints and leave when a
    coefficient crosses zero; exactly collinear entrants are withheld (later
    column loses) and logged. The path stops at min(N-1, p) active features
    or when correlation with the residual is exhausted (lambda = 0).
    """
    xc, yc, x_mean, y_mean = _centered(d)
    n, p = xc.shape
    if not np.any(np.einsum("ij,ij->j", xc, xc) > 0):
        raise DataError("lars needs at least one non-constant feature")
    cap = min(n - 1, p) if max_active is None else min(max_active, n - 1, p)

    c0 = xc.T @ yc
    lam0 = float(np.max(np.abs(c0)) / n)
    breakpoints = [lam0]
    active_sets = [()]
    coef_rows = [np.zeros(p)]
    withheld = []
    if lam0 <= 0.0:
        coefs = np.vstack(coef_rows)
        return RegularizationPath(
            tuple(breakpoints), tuple(active_sets), coefs,
            (float(y_mean),), d.names, (),
        )

    # First entrants: all columns at max correlation, lowest index wins,
    # exact twins of it are withheld immediately.
    order = np.argsort(-np.abs(c0), kind="stable")
    first = int(order[0])
    active = [first]
    signs = [math.copysign(1.0, c0[first])]
    for j in order[1:]:
        if abs(abs(c0[j]) - abs(c0[first])) <= 1e-12 * max(1.0, abs(c0[first])):
            if _is_collinear(xc, active, int(j)):
                withheld.append((0, d.names[int(j)]))
    lam = lam0

    def record(lam_k, active_now, w_full):
        breakpoints.append(float(lam_k))
        active_sets.append(tuple(sorted(active_now)))
        coef_rows.append(w_full)

    guard = 0
    while True:
        guard += 1
        if guard > 8 * p * p + 64:
            raise NumericalError("lars path failed to terminate")
        a_idx = list(active)
        xa = xc[:, a_idx]
        gram = xa.T @ xa
        try:
            wbar = np.linalg.solve(gram, xa.T @ yc)
            direction = n * np.linalg.solve(gram, np.asarray(signs))
        except np.linalg.LinAlgError:
            raise NumericalError("singular active-set system on the path")

        # Correlation of inactive columns along this segment: a_j + lambda*b_j.
        inactive = [j for j in range(p) if j not in active]
        banned = set()
        best_entry = None  # (lam, j, sign)
        while True:
            best_entry = None
            for j in inactive:
                if j in banned:
                    continue
                a_j = float(xc[:, j] @ (yc - xa @ wbar))
                b_j = float((xc[:, j] @ xa) @ direction)
                for target_sign, denom in ((1.0, n - b_j), (-1.0, -n - b_j)):
                    if denom == 0.0:
                        continue
                    cand = -target_sign * a_j / -denom if False else a_j / denom
                    if target_sign < 0:
                        cand = -a_j / (n + b_j)
                    if 1e-15 < cand < lam * (1 - 1e-12):
                        if best_entry is None or cand > best_entry[0]:
                            best_entry = (cand, j, target_sign)
            if best_entry is not None and _is_collinear(xc, active, best_entry[1]):
                withheld.append((len(breakpoints), d.names[best_entry[1]]))
                banned.add(best_entry[1])
                continue
            break

        best_drop = None  # (lam, position in active)
        for pos, j in enumerate(active):
            if direction[pos] == 0.0:
                continue
            cand = float(wbar[pos] / direction[pos])
            if 1e-15 < cand < lam * (1 - 1e-12):
                if best_drop is None or cand > best_drop[0]:
                    best_drop = (cand, pos)

        events = []
        if best_entry is not None:
            events.append((best_entry[0], "entry"))
        if best_drop is not None:
            events.append((best_drop[0], "drop"))
        next_lam = max(events)[0] if events else 0.0

        def coef_full(lam_value):
            w = np.zeros(p)
            w[a_idx] = wbar - lam_value * direction
            return w

        if not events:
            record(0.0, active, coef_full(0.0))
            break
        kind = max(events)[1]
        record(next_lam, active, coef_full(next_lam))
        if kind == "drop":
            pos = best_drop[1]
            del active[pos]
            del signs[pos]
        else:
            j = best_entry[1]
            active.append(j)
            signs.append(best_entry[2])
            if len(active) >= cap:
                a_idx = list(active)
                xa = xc[:, a_idx]
                gram = xa.T @ xa
                try:
                    wbar = np.linalg.solve(gram, xa.T @ yc)
                except np.linalg.LinAlgError:
                    break  # cannot extend below this breakpoint
                w = np.zeros(p)
                w[a_idx] = wbar
                record(0.0, active, w)
                break
        lam = next_lam
        if lam <= 0.0:
            break

    coefs = np.vstack(coef_rows)
    intercepts = tuple(float(y_mean - row @ x_mean) for row in coef_rows)
    return RegularizationPath(
        tuple(breakpoints), tuple(active_sets), coefs, intercepts, d.names,
        tuple(withheld),
    )


def rank_by_weights(w, method="weights"):
    """Rank features by |weight| descending; exact zeros rank last, unselected."""
    names = w.names
    order = sorted(
        range(len(names)),
        key=lambda j: (w.weights[j] == 0.0, -abs(w.weights[j]), j),
    )
    rows = []
    for rank, j in enumerate(order, start=1):
        value = float(w.weights[j])
        rows.append(FeatureScore(names[j], value, rank, value != 0.0))
    return SelectionResult(method=method, scores=tuple(rows))

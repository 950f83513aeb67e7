"""One-dimensional nonparametric regressors with truncated predictions.

Three engines share one prediction contract:

* box kernel -- local average over the open window (x-h, x+h), i.e. the
  points with |X_i - x| strictly below h;
* Nadaraya-Watson -- kernel-weighted average (the box regressor is the
  special case of the box weight);
* kernel ridge -- squared-exponential kernel, dense symmetric solve.

Every prediction is clamped to [-B, B].  When a local window is empty (or
a weight sum underflows to zero) the prediction falls back to the response
of the nearest training covariate, ties broken toward the smaller
covariate, then clamps.  Window lookups run on covariate-sorted copies of
the training data, so prediction is O(log n + window) per query.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .model import SingularSystem

__all__ = [
    "RegressionFit",
    "ResidualSeries",
    "fit_box_kernel",
    "fit_nadaraya_watson",
    "fit_kernel_ridge",
    "select_bandwidth_cv",
    "residuals",
    "average_excess_risk",
    "default_regression_grid",
]

_LOCAL_KERNELS = ("box", "biweight", "epanechnikov", "gaussian")
_GATHER_BUDGET = 4_000_000


def _weight(kernel: str, u: np.ndarray) -> np.ndarray:
    if kernel == "box":
        # strict membership is enforced by the window bounds themselves
        return np.ones_like(u)
    if kernel == "biweight":
        t = 1.0 - u * u
        return np.where(np.abs(u) < 1.0, 0.9375 * t * t, 0.0)
    if kernel == "epanechnikov":
        return np.where(np.abs(u) < 1.0, 0.75 * (1.0 - u * u), 0.0)
    return np.exp(-0.5 * u * u)


def _auto_bound(response: np.ndarray) -> float:
    # data-driven truncation level; never clips a sane fit
    return 3.0 * float(np.max(np.abs(response)))


@dataclass(frozen=True)
class RegressionFit:
    """A fitted regressor; immutable, predictions always within [-bound, bound]."""

    method: str  # "box" | "nw" | "krr"
    train_xs: np.ndarray  # sorted by covariate for box/nw, original for krr
    train_ys: np.ndarray
    bound: float
    h: float = float("nan")  # window/kernel bandwidth (box, nw)
    kernel: str = "box"  # weighting kernel (nw)
    length_scale: float = float("nan")  # krr
    ridge_lambda: float = float("nan")  # krr
    dual: np.ndarray | None = None  # krr dual weights

    def predict(self, x):
        scalar = np.isscalar(x)
        q = np.atleast_1d(np.asarray(x, dtype=np.float64))
        if self.method == "krr":
            pred = self._predict_krr(q)
        else:
            pred = self._predict_local(q)
        pred = np.clip(pred, -self.bound, self.bound)
        return float(pred[0]) if scalar else pred

    # -- local (box / Nadaraya-Watson) ------------------------------------

    def _predict_local(self, q: np.ndarray) -> np.ndarray:
        sx, sy, h = self.train_xs, self.train_ys, self.h
        if self.kernel == "gaussian":
            num, den = self._dense_sums(q)
        else:
            # open window: q-h < X_j < q+h
            lo = np.searchsorted(sx, q - h, side="right")
            hi = np.searchsorted(sx, q + h, side="left")
            num, den = self._gathered_sums(q, lo, hi)
        out = np.empty_like(q)
        ok = den > 0.0
        out[ok] = num[ok] / den[ok]
        if not ok.all():
            out[~ok] = sy[self._nearest_index(q[~ok])]
        return out

    def _gathered_sums(self, q, lo, hi):
        sx, sy, h = self.train_xs, self.train_ys, self.h
        counts = hi - lo
        num = np.zeros(q.shape[0])
        den = np.zeros(q.shape[0])
        start = 0
        while start < q.shape[0]:
            stop = start
            total = 0
            while stop < q.shape[0] and (total == 0 or total + counts[stop] <= _GATHER_BUDGET):
                total += counts[stop]
                stop += 1
            if total > 0:
                ccnt = counts[start:stop]
                rows = np.repeat(np.arange(stop - start), ccnt)
                offs = np.arange(total) - np.repeat(np.cumsum(ccnt) - ccnt, ccnt)
                idx = offs + np.repeat(lo[start:stop], ccnt)
                w = _weight(self.kernel, (sx[idx] - q[start:stop][rows]) / h)
                num[start:stop] = np.bincount(rows, weights=w * sy[idx], minlength=stop - start)
                den[start:stop] = np.bincount(rows, weights=w, minlength=stop - start)
            start = stop
        return num, den

    def _dense_sums(self, q, chunk: int = 512):
        sx, sy, h = self.train_xs, self.train_ys, self.h
        num = np.empty(q.shape[0])
        den = np.empty(q.shape[0])
        for start in range(0, q.shape[0], chunk):
            u = (sx[None, :] - q[start:start + chunk, None]) / h
            w = _weight(self.kernel, u)
            num[start:start + chunk] = (w * sy[None, :]).sum(axis=1)
            den[start:start + chunk] = w.sum(axis=1)
        return num, den

    def _nearest_index(self, q: np.ndarray) -> np.ndarray:
        sx = self.train_xs
        pos = np.searchsorted(sx, q)
        left = np.clip(pos - 1, 0, sx.shape[0] - 1)
        right = np.clip(pos, 0, sx.shape[0] - 1)
        # ties toward the smaller covariate, i.e. the left neighbor
        take_left = np.abs(q - sx[left]) <= np.abs(sx[right] - q)
        return np.where(take_left, left, right)

    # -- kernel ridge ------------------------------------------------------

    def _predict_krr(self, q, chunk: int = 512):
        out = np.empty(q.shape[0])
        tx = self.train_xs
        inv2 = 1.0 / (2.0 * self.length_scale * self.length_scale)
        for start in range(0, q.shape[0], chunk):
            d = q[start:start + chunk, None] - tx[None, :]
            out[start:start + chunk] = np.exp(-d * d * inv2) @ self.dual
        return out


@dataclass(frozen=True)
class ResidualSeries:
    """response_i - predict(covariate_i), tagged by direction."""

    values: np.ndarray
    tag: str = "forward"


def _check_training(covariate, response, h=None):
    x = np.asarray(covariate, dtype=np.float64)
    y = np.asarray(response, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise ValueError("covariate and response must be equal-length 1-d sequences")
    if x.shape[0] == 0:
        raise ValueError("training data is empty")
    if h is not None and not (np.isfinite(h) and h > 0):
        raise ValueError(f"bandwidth must be positive, got {h}")
    return x, y


def fit_nadaraya_watson(covariate, response, kernel: str, h: float, bound: float | None = None) -> RegressionFit:
    """Kernel-weighted local average with bandwidth h, clamped to [-B, B]."""
    x, y = _check_training(covariate, response, h)
    if kernel not in _LOCAL_KERNELS:
        raise ValueError(f"unknown regression kernel {kernel!r}")
    order = np.argsort(x, kind="stable")
    b = _auto_bound(y) if bound is None else float(bound)
    if b < 0:
        raise ValueError("truncation bound must be non-negative")
    return RegressionFit(method="nw" if kernel != "box" else "box",
                         train_xs=x[order], train_ys=y[order],
                         bound=b, h=float(h), kernel=kernel)


def fit_box_kernel(covariate, response, h: float, bound: float | None = None) -> RegressionFit:
    """Mean response over the open window (x-h, x+h); the box-weight NW fit."""
    return fit_nadaraya_watson(covariate, response, "box", h, bound)


def fit_kernel_ridge(covariate, response, length_scale: float, ridge_lambda: float,
                     bound: float | None = None) -> RegressionFit:
    """Squared-exponential kernel ridge: solve (K + lambda I) alpha = y.

    The symmetric solve gets one retry with 1e-10 diagonal jitter before
    raising SingularSystem (the usual cause is a lambda too small for the
    sample).
    """
    x, y = _check_training(covariate, response)
    if not (np.isfinite(length_scale) and length_scale > 0):
        raise ValueError(f"length scale must be positive, got {length_scale}")
    if not (np.isfinite(ridge_lambda) and ridge_lambda > 0):
        raise ValueError(f"ridge penalty must be positive, got {ridge_lambda}")
    d = x[:, None] - x[None, :]
    gram = np.exp(-d * d / (2.0 * length_scale * length_scale))
    system = gram + ridge_lambda * np.eye(x.shape[0])
    dual = None
    for jitter in (0.0, 1e-10):
        try:
            cho = scipy.linalg.cho_factor(system + jitter * np.eye(x.shape[0]), lower=True)
            dual = scipy.linalg.cho_solve(cho, y)
            break
        except scipy.linalg.LinAlgError:
            continue
    if dual is None or not np.all(np.isfinite(dual)):
        raise SingularSystem(
            f"kernel ridge solve failed (n={x.shape[0]}, lambda={ridge_lambda})"
        )
    b = _auto_bound(y) if bound is None else float(bound)
    if b < 0:
        raise ValueError("truncation bound must be non-negative")
    return RegressionFit(method="krr", train_xs=x, train_ys=y, bound=b,
                         length_scale=float(length_scale),
                         ridge_lambda=float(ridge_lambda), dual=dual)


def _make_fitter(method: str, *, kernel: str = "epanechnikov",
                 ridge_lambda: float = 0.1, bound: float | None = None):
    if method == "box":
        return lambda x, y, h: fit_box_kernel(x, y, h, bound)
    if method == "nw":
        return lambda x, y, h: fit_nadaraya_watson(x, y, kernel, h, bound)
    if method == "krr":
        return lambda x, y, h: fit_kernel_ridge(x, y, h, ridge_lambda, bound)
    raise ValueError(f"unknown regression method {method!r}")


def default_regression_grid(covariate, points: int = 16) -> np.ndarray:
    """Geometric bandwidth grid from 0.05 x std up to the covariate range."""
    x = np.asarray(covariate, dtype=np.float64)
    scale = float(np.std(x))
    if scale <= 0 or not np.isfinite(scale):
        scale = 1.0
    lo = 0.05 * scale
    hi = max(float(x.max() - x.min()), lo * 100.0)
    return np.geomspace(lo, hi, points)


def select_bandwidth_cv(covariate, response, method: str = "box", *, folds: int = 5,
                        grid=None, seed: int = 0, kernel: str = "epanechnikov",
                        ridge_lambda: float = 0.1, bound: float | None = None) -> float:
    """Grid bandwidth minimizing k-fold mean squared prediction error.

    Folds are contiguous blocks of a seeded shuffle of the indices, so the
    partition is deterministic in (n, folds, seed).  Ties break toward the
    larger bandwidth.
    """
    x, y = _check_training(covariate, response)
    n = x.shape[0]
    if folds < 2:
        raise ValueError(f"need >= 2 folds, got {folds}")
    if n < folds:
        raise ValueError(f"need n >= folds, got n={n}, folds={folds}")
    if grid is None:
        grid = default_regression_grid(x)
    grid = [float(h) for h in grid]
    if not grid:
        raise ValueError("bandwidth grid is empty")
    fitter = _make_fitter(method, kernel=kernel, ridge_lambda=ridge_lambda, bound=bound)

    perm = np.random.default_rng(seed).permutation(n)
    blocks = np.array_split(perm, folds)
    masks = []
    for block in blocks:
        held = np.zeros(n, dtype=bool)
        held[block] = True
        masks.append(held)

    best_h = max(grid)
    best_mse = math.inf
    for h in sorted(grid):
        sq_err = 0.0
        for held in masks:
            fit = fitter(x[~held], y[~held], h)
            pred = fit.predict(x[held])
            sq_err += float(np.sum((y[held] - pred) ** 2))
        mse = sq_err / n
        if mse <= best_mse:  # <= : ties go to the larger bandwidth
            best_mse = mse
            best_h = h
    return best_h


def residuals(fit: RegressionFit, eval_covariate, eval_response, tag: str = "forward") -> ResidualSeries:
    """eval_response_i - predict(fit, eval_covariate_i)."""
    x = np.asarray(eval_covariate, dtype=np.float64)
    y = np.asarray(eval_response, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("evaluation sequences must have equal length")
    return ResidualSeries(values=y - fit.predict(x), tag=tag)


def average_excess_risk(fit: RegressionFit, truth, sample_covariate) -> float:
    """(1/n) sum_i |predict(X_i) - truth(X_i)|, the per-sample excess risk.

    Averaging this over replicated fits estimates the expected average
    excess risk of the regression procedure.
    """
    x = np.asarray(sample_covariate, dtype=np.float64)
    t = np.asarray(truth(x), dtype=np.float64)
    if t.shape != x.shape:
        t = np.asarray([truth(v) for v in x], dtype=np.float64)
    return float(np.mean(np.abs(fit.predict(x) - t)))

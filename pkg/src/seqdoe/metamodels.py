"""Surrogate regressors: Gaussian process (rational quadratic) and epsilon-SVR (RBF).

Both models standardize the responses before fitting and de-standardize
their predictions.  Training rows are put in a canonical (lexicographic)
order first, so fitted models do not depend on the order rows were given in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.spatial.distance import cdist

from .exceptions import FitError

__all__ = [
    "GP_LENGTH_SCALES",
    "GP_MIXTURES",
    "GpModel",
    "SvrModel",
    "TrainingSet",
    "fit",
    "gp_fit",
    "gp_predict",
    "rational_quadratic",
    "svr_fit",
    "svr_predict",
]

GP_LENGTH_SCALES = (0.05, 0.1, 0.2, 0.5, 1.0, 2.0)
GP_MIXTURES = (0.5, 1.0, 2.0, 5.0)
JITTER_START = 1e-10
JITTER_MAX = 1e-4
_STD_FLOOR = 1e-12


@dataclass(frozen=True)
class TrainingSet:
    inputs: np.ndarray
    responses: np.ndarray

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(getattr(self.inputs, "points", self.inputs), dtype=float))
        y = np.asarray(self.responses, dtype=float).ravel()
        if x.shape[0] != y.shape[0]:
            raise ValueError(f"{x.shape[0]} inputs but {y.shape[0]} responses")
        if not np.all(np.isfinite(y)):
            raise ValueError("responses must be finite")
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "responses", y)

    def __len__(self):
        return self.responses.shape[0]


def _canonical(x, y):
    order = np.lexsort(np.column_stack([x, y]).T[::-1])
    return x[order], y[order]


def _standardize(y):
    mean = float(np.mean(y))
    std = float(np.std(y))
    if std < _STD_FLOOR * max(1.0, abs(mean)):
        std = 0.0
    return mean, std


def rational_quadratic(xa, xb, length_scale, mixture, variance=1.0):
    """``variance * (1 + r^2 / (2 a l^2))^(-a)`` for all row pairs."""
    r2 = cdist(xa, xb, "sqeuclidean")
    return variance * (1.0 + r2 / (2.0 * mixture * length_scale ** 2)) ** (-mixture)


# -- Gaussian process ---------------------------------------------------------

@dataclass
class GpModel:
    inputs: np.ndarray
    weights: np.ndarray
    chol: np.ndarray | None
    length_scale: float
    mixture: float
    variance: float
    jitter: float
    y_mean: float
    y_std: float
    log_marginal_likelihood: float
    grid: dict = field(default_factory=dict, repr=False)

    def predict(self, x):
        return gp_predict(self, x)

    @property
    def hyperparameters(self) -> dict:
        return {
            "length_scale": self.length_scale,
            "mixture": self.mixture,
            "variance": self.variance,
            "jitter": self.jitter,
        }


def _chol_with_jitter(k, jitter_start, jitter_max):
    if not 0 < jitter_start <= jitter_max:
        raise ValueError("need 0 < jitter_start <= jitter_max")
    jitter = jitter_start
    eye = np.eye(k.shape[0])
    while jitter <= jitter_max * (1 + 1e-9):
        try:
            return np.linalg.cholesky(k + jitter * eye), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    return None, None


def gp_fit(
    train,
    responses=None,
    length_scales=GP_LENGTH_SCALES,
    mixtures=GP_MIXTURES,
    jitter_start: float = JITTER_START,
    jitter_max: float = JITTER_MAX,
) -> GpModel:
    """Fit a zero-mean GP on standardized responses.

    The kernel variance is fixed to 1; length scale and mixture exponent
    are chosen by maximizing the log marginal likelihood over the grid
    ``length_scales x mixtures``.  Each grid point escalates its diagonal
    jitter by factors of ten from ``jitter_start`` to ``jitter_max`` until
    the covariance factorizes.

    Parameters
    ----------
    train : TrainingSet or array_like
        Training set, or the inputs when ``responses`` is given.

    Raises
    ------
    FitError
        If no grid point yields a positive definite covariance.
    """
    if responses is not None:
        train = TrainingSet(train, responses)
    if len(train) < 2:
        raise FitError("a GP needs at least 2 training points")
    x, y = _canonical(train.inputs, train.responses)
    mean, std = _standardize(y)
    n = x.shape[0]
    if std == 0.0:
        return GpModel(x, np.zeros(n), None, float(length_scales[0]), float(mixtures[0]),
                       1.0, 0.0, mean, 0.0, math.nan, {})
    ys = (y - mean) / std
    r2 = cdist(x, x, "sqeuclidean")
    best = None
    grid = {}
    for ls in length_scales:
        for a in mixtures:
            k = (1.0 + r2 / (2.0 * a * ls ** 2)) ** (-a)
            chol, jitter = _chol_with_jitter(k, jitter_start, jitter_max)
            if chol is None:
                continue
            z = solve_triangular(chol, ys, lower=True)
            w = solve_triangular(chol.T, z, lower=False)
            lml = -0.5 * z @ z - np.log(np.diag(chol)).sum() - 0.5 * n * math.log(2 * math.pi)
            grid[(float(ls), float(a))] = float(lml)
            if best is None or lml > best[0]:
                best = (lml, ls, a, chol, w, jitter)
    if best is None:
        raise FitError(f"covariance is singular at every grid point even with jitter {jitter_max:g}")
    lml, ls, a, chol, w, jitter = best
    return GpModel(x, w, chol, float(ls), float(a), 1.0, float(jitter), mean, std, float(lml), grid)


def gp_predict(model: GpModel, x):
    """Posterior mean in response units; a 1-D input gives a float."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if model.y_std == 0.0:
        out = np.full(arr.shape[0], model.y_mean)
    else:
        out = np.empty(arr.shape[0])
        step = 8192
        for s in range(0, arr.shape[0], step):
            k = rational_quadratic(arr[s:s + step], model.inputs, model.length_scale, model.mixture)
            out[s:s + step] = k @ model.weights
        out = out * model.y_std + model.y_mean
    return float(out[0]) if single else out


# -- epsilon-SVR --------------------------------------------------------------

@dataclass
class SvrModel:
    inputs: np.ndarray
    dual_coef: np.ndarray
    bias: float
    C: float
    epsilon: float
    gamma: float
    y_mean: float
    y_std: float
    kkt_residual: float
    iterations: int
    objective_trace: list | None = field(default=None, repr=False)

    def predict(self, x):
        return svr_predict(self, x)

    @property
    def hyperparameters(self) -> dict:
        return {"C": self.C, "epsilon": self.epsilon, "gamma": self.gamma}


def _rbf(xa, xb, gamma):
    return np.exp(-gamma * cdist(xa, xb, "sqeuclidean"))


def _smo(k, y, C, eps, tol, max_iter, track):
    """Solve the epsilon-SVR dual with second-order working set selection.

    Works on the 2n-variable form ``min 1/2 a'Qa + p'a`` subject to
    ``z'a = 0`` and ``0 <= a <= C`` with ``z = (+1..., -1...)``.
    """
    n = y.shape[0]
    z = np.concatenate([np.ones(n), -np.ones(n)])
    p = np.concatenate([eps - y, eps + y])
    kd = np.diag(k)
    qd = np.concatenate([kd, kd])
    a = np.zeros(2 * n)
    g = p.copy()
    tau = 1e-12
    trace = [] if track else None

    def row(i):
        # Q[i, :] = z_i z_t K[i mod n, t mod n]
        r = k[i % n]
        return z[i] * np.concatenate([r, -r])

    it = 0
    gap = math.inf
    while True:
        up = ((z > 0) & (a < C)) | ((z < 0) & (a > 0))
        low = ((z < 0) & (a < C)) | ((z > 0) & (a > 0))
        mz = -z * g
        if not up.any() or not low.any():
            gap = 0.0
            break
        i = int(np.flatnonzero(up)[np.argmax(mz[up])])
        gmax = mz[i]
        gmax2 = np.max(-mz[low])
        gap = gmax + gmax2
        if gap < tol:
            break
        if it >= max_iter:
            raise FitError(
                f"SMO did not converge in {max_iter} iterations (KKT residual {gap:.3g})",
                residual=gap,
            )
        qi = row(i)
        cand = np.flatnonzero(low & (mz < gmax))
        b = gmax - mz[cand]
        quad = qd[i] + qd[cand] - 2.0 * z[i] * z[cand] * qi[cand]
        quad = np.where(quad > 0, quad, tau)
        j = int(cand[np.argmin(-(b * b) / quad)])
        qj = row(j)
        ai, aj = a[i], a[j]
        if z[i] != z[j]:
            quad_ij = qd[i] + qd[j] + 2.0 * qi[j]
            if quad_ij <= 0:
                quad_ij = tau
            delta = (-g[i] - g[j]) / quad_ij
            diff = ai - aj
            a[i] += delta
            a[j] += delta
            if diff > 0:
                if a[j] < 0:
                    a[j] = 0.0
                    a[i] = diff
            elif a[i] < 0:
                a[i] = 0.0
                a[j] = -diff
            if diff > 0:
                if a[i] > C:
                    a[i] = C
                    a[j] = C - diff
            elif a[j] > C:
                a[j] = C
                a[i] = C + diff
        else:
            quad_ij = qd[i] + qd[j] - 2.0 * qi[j]
            if quad_ij <= 0:
                quad_ij = tau
            delta = (g[i] - g[j]) / quad_ij
            total = ai + aj
            a[i] -= delta
            a[j] += delta
            if total > C:
                if a[i] > C:
                    a[i] = C
                    a[j] = total - C
            elif a[j] < 0:
                a[j] = 0.0
                a[i] = total
            if total > C:
                if a[j] > C:
                    a[j] = C
                    a[i] = total - C
            elif a[i] < 0:
                a[i] = 0.0
                a[j] = total
        g += qi * (a[i] - ai) + qj * (a[j] - aj)
        it += 1
        if track:
            trace.append(-0.5 * float(a @ (g + p)))

    # bias from free variables, else the midpoint of the feasible range
    zg = z * g
    free = (a > 0) & (a < C)
    if free.any():
        rho = float(np.mean(zg[free]))
    else:
        at_ub = a >= C
        at_lb = a <= 0
        ub = np.min(np.concatenate([zg[(at_ub & (z < 0)) | (at_lb & (z > 0))], [math.inf]]))
        lb = np.max(np.concatenate([zg[(at_ub & (z > 0)) | (at_lb & (z < 0))], [-math.inf]]))
        rho = 0.5 * (ub + lb) if math.isfinite(ub) and math.isfinite(lb) else 0.0
    coef = a[:n] - a[n:]
    return coef, -rho, gap, it, trace


def svr_fit(
    train,
    responses=None,
    C: float = 100.0,
    epsilon: float = 0.01,
    gamma: float | None = None,
    tol: float = 1e-3,
    max_iter: int = 200_000,
    track_objective: bool = False,
) -> SvrModel:
    """Fit an epsilon-insensitive SVR with an RBF kernel.

    ``epsilon`` is in standardized response units and ``gamma`` defaults to
    ``1 / d``.  The dual is solved by pairwise SMO until the KKT violation
    drops below ``tol``.

    Raises
    ------
    FitError
        If the solver hits ``max_iter``; ``residual`` carries the final
        KKT violation.
    """
    if responses is not None:
        train = TrainingSet(train, responses)
    if len(train) < 2:
        raise FitError("an SVR needs at least 2 training points")
    x, y = _canonical(train.inputs, train.responses)
    mean, std = _standardize(y)
    d = x.shape[1]
    gamma = 1.0 / d if gamma is None else float(gamma)
    ys = (y - mean) / std if std > 0 else np.zeros_like(y)
    k = _rbf(x, x, gamma)
    coef, bias, gap, it, trace = _smo(k, ys, float(C), float(epsilon), tol, max_iter, track_objective)
    return SvrModel(x, coef, bias, float(C), float(epsilon), gamma, mean, std if std > 0 else 1.0,
                    float(gap), it, trace)


def svr_predict(model: SvrModel, x):
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    out = np.empty(arr.shape[0])
    step = 8192
    for s in range(0, arr.shape[0], step):
        out[s:s + step] = _rbf(arr[s:s + step], model.inputs, model.gamma) @ model.dual_coef
    out = (out + model.bias) * model.y_std + model.y_mean
    return float(out[0]) if single else out


def fit(kind: str, train, **options):
    """Fit the metamodel named ``kind`` (``"gp"`` or ``"svr"``)."""
    if kind == "gp":
        return gp_fit(train, **options)
    if kind == "svr":
        return svr_fit(train, **options)
    raise ValueError(f"unknown metamodel {kind!r}; expected 'gp' or 'svr'")

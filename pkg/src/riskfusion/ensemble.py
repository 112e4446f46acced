"""Stacked logistic combination of the two base risk models.

Two meta-models share one solver: a fixed-horizon model on the design
(1, s1, s2, s1*s2) over transformed base predictions, and a time-interaction
model that adds (tau, tau*s1, tau*s2, tau*s1*s2) with one row per proband per
tau.  Right-censored outcomes are replaced by censoring-compensated
pseudo-outcomes y = N_B(tau) / G(T) which keep the score equations unbiased;
pseudo-outcomes may exceed 1 and are never clamped.  The solver finds the
root of the weighted quasi-binomial score by damped Newton steps.

Point estimates use an independence working correlation across a proband's
rows; standard errors are robust (sandwich) grouped by proband.
"""

from __future__ import annotations

import hashlib
import json
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from riskfusion.errors import FitError
from riskfusion.cohort import CohortRecord

TRANSFORMS = ("sqrt", "none")
LAMBDA_GRID = (1e-3, 1e-2, 1e-1, 1.0, 10.0)


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous product-limit curve with left-limit evaluation."""

    times: np.ndarray
    values: np.ndarray

    def at(self, t: float) -> float:
        """G(t): value at t, jumps included."""
        i = bisect_right(self.times, t)
        return 1.0 if i == 0 else float(self.values[i - 1])

    def at_left(self, t: float) -> float:
        """G(t-): value just before t; the probability of reaching t uncensored."""
        i = bisect_left(self.times, t)
        return 1.0 if i == 0 else float(self.values[i - 1])


@dataclass(frozen=True)
class CensoringModel:
    """Kaplan-Meier censoring-survival curves per stratum."""

    curves: dict[Optional[str], StepFunction]

    def curve(self, stratum: Optional[str]) -> StepFunction:
        if stratum in self.curves:
            return self.curves[stratum]
        if None in self.curves and len(self.curves) == 1:
            return self.curves[None]
        raise FitError(f"no censoring curve for stratum {stratum!r}")

    def weight_at_left(self, stratum: Optional[str], t: float) -> float:
        g = self.curve(stratum).at_left(t)
        if g <= 0.0:
            raise FitError(f"censoring survival is 0 at time {t}; weight undefined")
        return 1.0 / g


def km_censoring(
    records: Sequence[CohortRecord],
    strata: Optional[Callable[[CohortRecord], str]] = None,
) -> CensoringModel:
    """Product-limit estimate treating censoring as the event.

    Breast events and deaths leave the risk set before tied censorings are
    counted, so G is insensitive to how ties are ordered in the input.
    """
    groups: dict[Optional[str], list[CohortRecord]] = {}
    for r in records:
        if r.follow_up_years <= 0:
            raise FitError("follow-up times must be positive")
        groups.setdefault(strata(r) if strata else None, []).append(r)

    curves: dict[Optional[str], StepFunction] = {}
    for key, rows in groups.items():
        times = sorted({r.follow_up_years for r in rows if r.event == "censored"})
        jumps: list[float] = []
        values: list[float] = []
        g = 1.0
        for t in times:
            at_risk = sum(1 for r in rows if r.follow_up_years >= t)
            tied_events = sum(
                1 for r in rows if r.follow_up_years == t and r.event != "censored"
            )
            n_eff = at_risk - tied_events
            d = sum(1 for r in rows if r.follow_up_years == t and r.event == "censored")
            if n_eff <= 0:
                g = 0.0
            else:
                g *= 1.0 - d / n_eff
            jumps.append(t)
            values.append(g)
        curves[key] = StepFunction(
            times=np.asarray(jumps, dtype=float), values=np.asarray(values, dtype=float)
        )
    if not curves:
        raise FitError("empty cohort")
    return CensoringModel(curves=curves)


def apply_transform(p: np.ndarray, transform: str) -> np.ndarray:
    if transform == "sqrt":
        return np.sqrt(p)
    if transform == "none":
        return np.asarray(p, dtype=float)
    raise ValueError(f"unknown transform {transform!r}")


@dataclass(frozen=True)
class TrainingFrame:
    """Long-format rows: (proband index, tau, transformed p1/p2, pseudo-outcome, weight)."""

    proband: np.ndarray
    tau: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    y: np.ndarray
    w: np.ndarray
    transform: str
    tau_grid: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.y)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        for arr in (self.proband, self.tau, self.p1, self.p2, self.y, self.w):
            h.update(np.ascontiguousarray(arr).tobytes())
        return "sha256:" + h.hexdigest()


def build_training_frame(
    records: Sequence[CohortRecord],
    tau_grid: Sequence[int],
    G: CensoringModel,
    p1_by_tau: np.ndarray,
    p2_by_tau: np.ndarray,
    transform: str = "sqrt",
    extra_weights: Optional[np.ndarray] = None,
) -> TrainingFrame:
    """One row per proband per tau with a resolvable outcome at that tau.

    Cases observed by tau contribute y = 1/G(T-) at their event time; probands
    known event-free at tau (followed past it, or dead before it) contribute
    y = 0; probands censored before tau contribute no row at that tau.
    """
    tau_grid = tuple(int(t) for t in tau_grid)
    if sorted(set(tau_grid)) != list(tau_grid):
        raise ValueError("tau_grid must be strictly increasing")
    p1_by_tau = np.asarray(p1_by_tau, dtype=float)
    p2_by_tau = np.asarray(p2_by_tau, dtype=float)
    if p1_by_tau.shape != (len(records), len(tau_grid)) or p2_by_tau.shape != p1_by_tau.shape:
        raise ValueError("prediction matrices must be (n_records, n_tau)")
    if extra_weights is None:
        extra_weights = np.ones(len(records))

    rows_p: list[int] = []
    rows_tau: list[float] = []
    rows_p1: list[float] = []
    rows_p2: list[float] = []
    rows_y: list[float] = []
    rows_w: list[float] = []
    for i, rec in enumerate(records):
        for j, tau in enumerate(tau_grid):
            if rec.breast_by(tau):
                y = G.weight_at_left(rec.stratum, rec.follow_up_years)
            elif rec.known_event_free_at(tau):
                y = 0.0
            else:
                continue
            rows_p.append(i)
            rows_tau.append(float(tau))
            rows_p1.append(p1_by_tau[i, j])
            rows_p2.append(p2_by_tau[i, j])
            rows_y.append(y)
            rows_w.append(float(extra_weights[i]))
    return TrainingFrame(
        proband=np.asarray(rows_p, dtype=np.int64),
        tau=np.asarray(rows_tau, dtype=float),
        p1=apply_transform(np.asarray(rows_p1, dtype=float), transform),
        p2=apply_transform(np.asarray(rows_p2, dtype=float), transform),
        y=np.asarray(rows_y, dtype=float),
        w=np.asarray(rows_w, dtype=float),
        transform=transform,
        tau_grid=tau_grid,
    )


@dataclass(frozen=True)
class FittedEnsemble:
    kind: str  # fixed_horizon | time_varying
    coefficients: tuple[float, ...]
    transform: str
    tau_grid: tuple[int, ...]
    metadata: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": self.kind,
            "coefficients": list(self.coefficients),
            "transform": self.transform,
            "tau_grid": list(self.tau_grid),
            "metadata": self.metadata,
        }

    @staticmethod
    def from_json_dict(doc: dict) -> "FittedEnsemble":
        kind = doc["kind"]
        coeffs = tuple(float(c) for c in doc["coefficients"])
        expected = 4 if kind == "fixed_horizon" else 8
        if kind not in ("fixed_horizon", "time_varying"):
            raise ValueError(f"unknown ensemble kind {kind!r}")
        if len(coeffs) != expected:
            raise ValueError(f"{kind} ensemble needs {expected} coefficients, got {len(coeffs)}")
        if doc["transform"] not in TRANSFORMS:
            raise ValueError(f"unknown transform {doc['transform']!r}")
        return FittedEnsemble(
            kind=kind,
            coefficients=coeffs,
            transform=doc["transform"],
            tau_grid=tuple(int(t) for t in doc.get("tau_grid", [])),
            metadata=doc.get("metadata", {}),
        )

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def load(path: str) -> "FittedEnsemble":
        with open(path, "r", encoding="utf-8") as fh:
            return FittedEnsemble.from_json_dict(json.load(fh))


def _design_fixed(frame: TrainingFrame) -> np.ndarray:
    return np.column_stack(
        [np.ones(len(frame)), frame.p1, frame.p2, frame.p1 * frame.p2]
    )


def _design_time(frame: TrainingFrame) -> np.ndarray:
    base = _design_fixed(frame)
    return np.column_stack([base, base * frame.tau[:, None]])


def _expit(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _solve_score(
    X: np.ndarray, y: np.ndarray, w: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Damped Newton root of sum_i w_i x_i (y_i - mu_i) = 0.

    Returns (beta, kept column indices).  Collinear columns are removed with
    a pivoted QR and reported back as zero coefficients by the callers.
    """
    n, p = X.shape
    if n == 0:
        raise FitError("empty training frame")
    if len(np.unique(y)) < 2:
        raise FitError("pseudo-outcomes are constant; nothing to fit")

    _, R, piv = _pivoted_qr(X * np.sqrt(w)[:, None])
    diag = np.abs(np.diag(R))
    tol = max(X.shape) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    rank = int(np.sum(diag > tol))
    keep = np.sort(piv[:rank])
    Xk = X[:, keep]

    beta = np.zeros(len(keep))
    score = Xk.T @ (w * (y - _expit(Xk @ beta)))
    norm = float(np.max(np.abs(score)))
    for _ in range(100):
        if norm < 1e-8:
            return beta, keep
        mu = _expit(Xk @ beta)
        info = (Xk * (w * mu * (1.0 - mu))[:, None]).T @ Xk
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            raise FitError("information matrix is singular") from None
        damp = 1.0
        for _half in range(40):
            candidate = beta + damp * step
            new_score = Xk.T @ (w * (y - _expit(Xk @ candidate)))
            new_norm = float(np.max(np.abs(new_score)))
            if new_norm < norm or new_norm < 1e-8:
                beta, score, norm = candidate, new_score, new_norm
                break
            damp *= 0.5
        else:
            raise FitError("score equations not improving; fit diverged")
        # valid stacked fits can land in the hundreds, and Newton overshoots
        # transiently before settling; only a runaway iterate means separation
        if float(np.max(np.abs(beta))) > 1e4:
            raise FitError("coefficients diverging; data may be separated")
    raise FitError("no convergence in 100 iterations")


def _pivoted_qr(A: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    try:
        from scipy.linalg import qr

        Q, R, piv = qr(A, mode="economic", pivoting=True)
        return Q, R, piv
    except ImportError:  # greedy column-norm pivoting is enough for 8 columns
        cols = list(range(A.shape[1]))
        piv: list[int] = []
        work = A.copy()
        for _ in range(min(A.shape)):
            norms = np.linalg.norm(work[:, cols], axis=0)
            j = cols[int(np.argmax(norms))]
            piv.append(j)
            cols.remove(j)
            v = A[:, j]
            denom = float(v @ v)
            if denom > 0:
                for c in cols:
                    work[:, c] = work[:, c] - v * (float(v @ work[:, c]) / denom)
        piv.extend(cols)
        R = np.triu(np.linalg.qr(A[:, piv], mode="r"))
        return np.empty(0), R, np.asarray(piv)


def _sandwich_se(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, beta: np.ndarray, groups: np.ndarray
) -> np.ndarray:
    mu = _expit(X @ beta)
    info = (X * (w * mu * (1.0 - mu))[:, None]).T @ X
    resid = (w * (y - mu))[:, None] * X
    meat = np.zeros_like(info)
    order = np.argsort(groups, kind="stable")
    sorted_groups = groups[order]
    sorted_resid = resid[order]
    start = 0
    for i in range(1, len(sorted_groups) + 1):
        if i == len(sorted_groups) or sorted_groups[i] != sorted_groups[start]:
            s = sorted_resid[start:i].sum(axis=0)
            meat += np.outer(s, s)
            start = i
    bread = np.linalg.inv(info)
    return np.sqrt(np.diag(bread @ meat @ bread))


def _fit(frame: TrainingFrame, kind: str) -> FittedEnsemble:
    X = _design_fixed(frame) if kind == "fixed_horizon" else _design_time(frame)
    beta_k, keep = _solve_score(X, frame.y, frame.w)
    beta = np.zeros(X.shape[1])
    beta[keep] = beta_k
    se = np.zeros(X.shape[1])
    se[keep] = _sandwich_se(X[:, keep], frame.y, frame.w, beta_k, frame.proband)
    return FittedEnsemble(
        kind=kind,
        coefficients=tuple(float(b) for b in beta),
        transform=frame.transform,
        tau_grid=frame.tau_grid,
        metadata={
            "training_hash": frame.content_hash(),
            "n_rows": len(frame),
            "robust_se": [float(s) for s in se],
            "dropped_columns": [int(j) for j in range(X.shape[1]) if j not in set(keep.tolist())],
        },
    )


def fit_ensemble_fixed(frame: TrainingFrame) -> FittedEnsemble:
    if len(set(frame.tau.tolist())) > 1:
        raise ValueError("fixed-horizon fit expects a single tau")
    return _fit(frame, "fixed_horizon")


def fit_ensemble_time(frame: TrainingFrame) -> FittedEnsemble:
    return _fit(frame, "time_varying")


def predict_ensemble(
    model: FittedEnsemble,
    p1: "np.ndarray | float",
    p2: "np.ndarray | float",
    tau: Optional[float] = None,
) -> np.ndarray:
    """Inverse-logit of the linear predictor on transformed base predictions."""
    s1 = apply_transform(np.atleast_1d(np.asarray(p1, dtype=float)), model.transform)
    s2 = apply_transform(np.atleast_1d(np.asarray(p2, dtype=float)), model.transform)
    b = model.coefficients
    lp = b[0] + b[1] * s1 + b[2] * s2 + b[3] * s1 * s2
    if model.kind == "time_varying":
        if tau is None:
            raise ValueError("time-varying ensemble needs tau")
        if model.tau_grid and not (model.tau_grid[0] <= tau <= model.tau_grid[-1]):
            raise ValueError(
                f"tau {tau} outside supported range [{model.tau_grid[0]}, {model.tau_grid[-1]}]"
            )
        lp = lp + tau * (b[4] + b[5] * s1 + b[6] * s2 + b[7] * s1 * s2)
    return _expit(lp)


# public model labels for the two ensemble kinds
KIND_LABELS = {"fixed_horizon": "lr1", "time_varying": "lr2"}
LABEL_KINDS = {v: k for k, v in KIND_LABELS.items()}


def load_ensemble(path) -> FittedEnsemble:
    return FittedEnsemble.load(str(path))


def default_tau_grid(records: Sequence[CohortRecord]) -> tuple[int, ...]:
    """Yearly grid 1..tau* where tau* is the latest observed breast event time."""
    event_times = [r.follow_up_years for r in records if r.event == "breast"]
    if not event_times:
        raise FitError("no breast events in the cohort")
    tau_star = int(math.floor(max(event_times)))
    return tuple(range(1, max(tau_star, 1) + 1))


def importance_weights(
    train_features: np.ndarray,
    target_features: np.ndarray,
    seed: int = 0,
    n_centers: int = 100,
) -> np.ndarray:
    """Least-squares density-ratio weights target/train on a Gaussian basis.

    Features are standardized with pooled moments; constant columns drop out.
    Centers are sampled from the target sample, the bandwidth is the median
    pairwise distance, and the ridge penalty is chosen by 5-fold CV on the
    least-squares objective J = E_train[w^2]/2 - E_target[w].  Negative
    estimates are clipped to zero and the output is normalized to mean 1.
    """
    train = np.atleast_2d(np.asarray(train_features, dtype=float))
    target = np.atleast_2d(np.asarray(target_features, dtype=float))
    if train.shape[1] != target.shape[1]:
        raise ValueError("train and target must share feature columns")
    n_tr = train.shape[0]

    pooled = np.vstack([train, target])
    mean = pooled.mean(axis=0)
    std = pooled.std(axis=0)
    live = std > 0
    if not np.any(live):
        return np.ones(n_tr)
    train_z = (train[:, live] - mean[live]) / std[live]
    target_z = (target[:, live] - mean[live]) / std[live]

    rng = np.random.default_rng(seed)
    b = min(n_centers, target_z.shape[0])
    centers = target_z[rng.choice(target_z.shape[0], size=b, replace=False)]

    sample = pooled[:, live]
    sample = (sample - mean[live]) / std[live]
    if sample.shape[0] > 1000:
        sample = sample[rng.choice(sample.shape[0], size=1000, replace=False)]
    d2 = np.sum((sample[:, None, :] - sample[None, :, :]) ** 2, axis=2)
    sigma2 = float(np.median(d2[np.triu_indices_from(d2, k=1)]))
    if sigma2 <= 0:
        sigma2 = 1.0

    def kernel(Z: np.ndarray) -> np.ndarray:
        d = np.sum((Z[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        return np.exp(-d / (2.0 * sigma2))

    K_tr = kernel(train_z)
    K_ta = kernel(target_z)

    def solve(lmbda: float, Ktr: np.ndarray, Kta: np.ndarray) -> np.ndarray:
        H = Ktr.T @ Ktr / Ktr.shape[0]
        h = Kta.mean(axis=0)
        try:
            return np.linalg.solve(H + lmbda * np.eye(b), h)
        except np.linalg.LinAlgError:
            raise FitError("kernel matrix is degenerate") from None

    best_lambda, best_obj = None, np.inf
    folds_tr = np.arange(K_tr.shape[0]) % 5
    folds_ta = np.arange(K_ta.shape[0]) % 5
    for lmbda in LAMBDA_GRID:
        obj = 0.0
        for k in range(5):
            alpha = solve(lmbda, K_tr[folds_tr != k], K_ta[folds_ta != k])
            w_val = K_tr[folds_tr == k] @ alpha
            t_val = K_ta[folds_ta == k] @ alpha
            if len(w_val) == 0 or len(t_val) == 0:
                continue
            obj += 0.5 * float(np.mean(w_val**2)) - float(np.mean(t_val))
        if obj < best_obj:
            best_obj, best_lambda = obj, lmbda

    alpha = solve(best_lambda if best_lambda is not None else 1.0, K_tr, K_ta)
    w = np.clip(K_tr @ alpha, 0.0, None)
    total = w.mean()
    if total <= 0:
        raise FitError("importance weights collapsed to zero")
    return w / total

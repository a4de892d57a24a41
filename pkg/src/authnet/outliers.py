"""Standardization and DBSCAN outlier mining over per-vertex metric tables."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from authnet.errors import ValidationError

log = logging.getLogger(__name__)

NOISE = -1


@dataclass(frozen=True)
class DbscanParams:
    min_pts: int = 20
    epsilon: float | str = "auto"

    def __post_init__(self) -> None:
        if self.min_pts < 2:
            raise ValidationError("min_pts must be >= 2")
        if self.epsilon != "auto" and not (isinstance(self.epsilon, (int, float)) and self.epsilon > 0):
            raise ValidationError("epsilon must be a positive number or 'auto'")


def standardize(matrix) -> np.ndarray:
    """Column z-scores using the population standard deviation.

    Constant columns (up to rounding noise) become all zeros.
    """
    x = np.asarray(matrix, dtype=float)
    if x.size == 0:
        raise ValidationError("cannot standardize an empty matrix")
    if x.ndim == 1:
        x = x[:, None]
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    out = np.zeros_like(x)
    scale = np.maximum(np.abs(x).max(axis=0), 1.0)
    ok = std > 1e-12 * scale
    out[:, ok] = (x[:, ok] - mean[ok]) / std[ok]
    return out


def k_distances(points, k: int) -> np.ndarray:
    """Distance from each point to its k-th nearest other point."""
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if len(x) < k + 1:
        raise ValidationError(f"need at least {k + 1} points for k={k}")
    dist, _ = cKDTree(x).query(x, k=k + 1)
    return dist[:, k]


def elbow_epsilon(points, min_pts: int) -> float:
    """Epsilon at the knee of the sorted k-distance curve.

    Zero distances (points inside a pile of at least ``min_pts`` duplicates)
    are core at any epsilon, so the knee is sought on the positive part of
    the curve only.  Distances are taken as log(1 + d) so one extreme
    point does not set the scale of the whole curve.  Both axes are
    rescaled to [0, 1]; the knee is the point lying furthest below the
    chord joining the curve's end points (ties: first).  A flat curve, or
    one with no point below the chord, logs a warning.
    """
    kd = np.sort(k_distances(points, min_pts))
    pos = kd[kd > 0]
    if len(pos) == 0:
        log.warning("all k-distances are zero; elbow epsilon is not well defined")
        return 0.0
    if len(pos) < 3 and len(pos) < len(kd):
        # too few positive values to shape a curve: the knee is the step up from zero
        log.warning("k-distance curve is mostly zero; elbow epsilon set to 0")
        return 0.0
    span = float(pos[-1] - pos[0])
    if len(pos) < 3 or span <= 1e-12 * max(1.0, abs(float(pos[-1]))):
        log.warning("k-distance curve is flat; elbow epsilon is not well defined")
        return float(pos[-1])
    x = np.linspace(0.0, 1.0, len(pos))
    ln = np.log1p(pos)
    y = (ln - ln[0]) / (ln[-1] - ln[0])
    gap = x - y
    i = int(np.argmax(gap))
    if gap[i] <= 1e-12:
        log.warning("k-distance curve has no knee; elbow epsilon is not well defined")
    return float(pos[i])


@dataclass(frozen=True)
class DbscanResult:
    labels: np.ndarray
    epsilon: float

    @property
    def outliers(self) -> np.ndarray:
        return np.flatnonzero(self.labels == NOISE)

    @property
    def n_clusters(self) -> int:
        return int(self.labels.max()) + 1 if len(self.labels) and self.labels.max() >= 0 else 0


def dbscan(points, params: DbscanParams) -> DbscanResult:
    """Classic DBSCAN with inclusive Euclidean neighborhoods.

    A point is core when its epsilon-neighborhood (itself included) holds at
    least ``min_pts`` points.  Clusters are numbered in order of discovery;
    border points join the first cluster that reaches them.  Identical
    coordinates are collapsed before neighbor queries, which keeps heavily
    tied metric tables cheap.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = len(x)
    eps = elbow_epsilon(x, params.min_pts) if params.epsilon == "auto" else float(params.epsilon)
    if n == 0:
        return DbscanResult(np.zeros(0, dtype=int), eps)

    uniq, first, inverse, mult = np.unique(x, axis=0, return_index=True, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    # visit unique points in order of first appearance
    visit = np.argsort(first, kind="stable")
    tree = cKDTree(uniq)
    neighbors = tree.query_ball_point(uniq, r=eps * (1 + 1e-12) + 1e-300)
    weight = np.array([mult[nb].sum() for nb in neighbors])
    core = weight >= params.min_pts

    ulabel = np.full(len(uniq), NOISE, dtype=int)
    cluster = 0
    for u in visit:
        if ulabel[u] != NOISE or not core[u]:
            continue
        ulabel[u] = cluster
        queue = deque([u])
        while queue:
            p = queue.popleft()
            if not core[p]:
                continue
            for q in neighbors[p]:
                if ulabel[q] == NOISE:
                    ulabel[q] = cluster
                    queue.append(q)
        cluster += 1
    return DbscanResult(ulabel[inverse], eps)

"""Track/detection association: Mahalanobis + IOU gating and optimal assignment."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from herdtrack.errors import SingularInnovation
from herdtrack.geometry import BBox, iou
from herdtrack.kalman import MeasurementProjection

CHI2_95_4DOF = 9.4877


@dataclass(frozen=True)
class AssociationConfig:
    maha_gate: float = CHI2_95_4DOF
    iou_min: float = 0.3
    large_cost: float = 1e6

    def __post_init__(self):
        if self.maha_gate <= 0:
            raise ValueError("maha_gate must be positive")
        if not 0.0 <= self.iou_min <= 1.0:
            raise ValueError("iou_min must lie in [0, 1]")


@dataclass
class AssociationResult:
    matches: list[tuple[int, int]] = field(default_factory=list)
    unmatched_tracks: list[int] = field(default_factory=list)
    unmatched_detections: list[int] = field(default_factory=list)


def mahalanobis_sq(proj: MeasurementProjection, det: BBox) -> float:
    resid = det.as_array() - proj.z_hat
    try:
        L = np.linalg.cholesky(proj.S)
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation(str(exc)) from exc
    y = np.linalg.solve(L, resid)
    return float(y @ y)


def _hungarian(cost: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Kuhn-Munkres with potentials for an n x m matrix, n <= m.

    Returns ``(col_of_row, u, v)``: the assignment and the optimal row and
    column potentials. Runs in O(n^2 m).
    """
    n, m = cost.shape
    inf = np.inf
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    # row_of_col[j] = row (1-based) assigned to column j (1-based); 0 = free
    row_of_col = np.zeros(m + 1, dtype=int)
    way = np.zeros(m + 1, dtype=int)
    for i in range(1, n + 1):
        row_of_col[0] = i
        j0 = 0
        minv = np.full(m + 1, inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = row_of_col[j0]
            free = ~used[1:]
            cur = cost[i0 - 1] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            cand = np.where(free, minv[1:], inf)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            used_idx = np.nonzero(used)[0]
            u[row_of_col[used_idx]] += delta
            v[used_idx] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if row_of_col[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            row_of_col[j0] = row_of_col[j1]
            j0 = j1
    col_of_row = np.full(n, -1, dtype=int)
    for j in range(1, m + 1):
        if row_of_col[j]:
            col_of_row[row_of_col[j] - 1] = j - 1
    return col_of_row, u[1:], v[1:]


def _solve(cost: np.ndarray) -> tuple[list[tuple[int, int]], np.ndarray]:
    """Optimal pairs (sorted by row) and a mask of tight edges under the duals."""
    n, m = cost.shape
    if n <= m:
        cols, u, v = _hungarian(cost)
        pairs = [(i, int(j)) for i, j in enumerate(cols)]
        reduced = cost - u[:, None] - v[None, :]
    else:
        rows, u, v = _hungarian(cost.T)
        pairs = sorted((int(i), j) for j, i in enumerate(rows))
        reduced = cost - v[:, None] - u[None, :]
    tol = 1e-9 * max(1.0, float(np.abs(cost).max()))
    return pairs, np.abs(reduced) <= tol


def _total(cost: np.ndarray, pairs) -> float:
    return float(sum(cost[i, j] for i, j in pairs))


def _lexicographic(cost: np.ndarray) -> list[tuple[int, int]]:
    """Among optimal matchings, the one with the smallest (row, col) pair list.

    Only edges that are tight under the optimal potentials can take part in
    an optimal matching, so the refinement re-solves a subproblem only when
    an alternative tight edge exists, which is rare for continuous costs.
    """
    n, m = cost.shape
    pairs, tight = _solve(cost)
    opt = _total(cost, pairs)
    tol = 1e-12 * max(1.0, abs(opt)) * (n + m)
    size = len(pairs)
    fixed: list[tuple[int, int]] = []
    used_cols: set[int] = set()
    for i in range(n):
        current = dict(pairs).get(i)
        limit = m if current is None else current
        for j in range(limit):
            if j in used_cols or not tight[i, j]:
                continue
            rows = np.arange(i + 1, n)
            cols = np.array([c for c in range(m) if c not in used_cols and c != j], dtype=int)
            sub_pairs: list[tuple[int, int]] = []
            if len(rows) and len(cols):
                local, _ = _solve(cost[np.ix_(rows, cols)])
                sub_pairs = [(int(rows[a]), int(cols[b])) for a, b in local]
            if len(fixed) + 1 + len(sub_pairs) != size:
                continue
            candidate = fixed + [(i, j)] + sub_pairs
            if _total(cost, candidate) <= opt + tol:
                pairs = candidate
                break
        mine = dict(pairs).get(i)
        if mine is not None:
            fixed.append((i, mine))
            used_cols.add(mine)
    return pairs


def solve_assignment(cost, large_cost: float | None = None) -> list[tuple[int, int]]:
    """Minimum-cost matching of size min(n, m).

    Ties are broken towards the lowest row index, then the lowest column.
    Pairs whose cost is ``>= large_cost`` are treated as forbidden and dropped
    from the returned list. Output is sorted by row.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        raise ValueError("cost must be a 2-D matrix")
    n, m = cost.shape
    if n == 0 or m == 0:
        return []
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix must be finite")
    pairs = _lexicographic(cost)
    if large_cost is not None:
        pairs = [(i, j) for i, j in pairs if cost[i, j] < large_cost]
    return pairs


def associate(
    tracks: Sequence[tuple[MeasurementProjection, BBox]],
    detections: Sequence[BBox],
    cfg: AssociationConfig = AssociationConfig(),
) -> AssociationResult:
    n, m = len(tracks), len(detections)
    cost = np.full((n, m), cfg.large_cost)
    for i, (proj, tbox) in enumerate(tracks):
        for j, det in enumerate(detections):
            if iou(tbox, det) < cfg.iou_min:
                continue
            try:
                d = mahalanobis_sq(proj, det)
            except SingularInnovation:
                cost[i, :] = cfg.large_cost
                break
            if d <= cfg.maha_gate:
                cost[i, j] = d
    matches = solve_assignment(cost, cfg.large_cost)
    matched_t = {i for i, _ in matches}
    matched_d = {j for _, j in matches}
    return AssociationResult(
        matches=matches,
        unmatched_tracks=[i for i in range(n) if i not in matched_t],
        unmatched_detections=[j for j in range(m) if j not in matched_d],
    )

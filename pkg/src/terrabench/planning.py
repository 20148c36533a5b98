"""Holonomic point-mass global path planning: 8-connected A* on the cell grid.

Costs are Euclidean step lengths. Internally the accumulated cost is kept as
integer (straight, diagonal) step counts and materialized as
`straights + diagonals * sqrt(2)`; the optimal count pair is unique (sqrt(2)
is irrational), so two optimal planners agree on the cost bit-for-bit.

Diagonal moves require both adjacent orthogonal cells to be free, so paths
never cut the corner of an occupied cell.
"""

import heapq
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import PlanningError
from .terrain import EnvironmentSpec, occupancy_grid

SQRT2 = math.sqrt(2.0)

# (dx, dy, is_diagonal)
MOVES = ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0),
         (1, 1, 1), (1, -1, 1), (-1, 1, 1), (-1, -1, 1))


def step_cost(straights: int, diagonals: int) -> float:
    """Canonical float cost of a path with the given step counts."""
    return straights + diagonals * SQRT2


def _octile(ax: int, ay: int, bx: int, by: int) -> float:
    dx = abs(ax - bx)
    dy = abs(ay - by)
    lo = min(dx, dy)
    return (dx + dy) + (SQRT2 - 2.0) * lo


def astar_grid(occupied: Sequence[Sequence[bool]],
               start: Tuple[int, int],
               goal: Tuple[int, int]) -> Optional[Tuple[List[Tuple[int, int]], int, int]]:
    """A* from start to goal over a boolean occupancy grid.

    `occupied[iy][ix]` is True on blocked cells; start/goal are (ix, iy).
    Returns (node list, straight count, diagonal count), or None if no path.
    """
    n = len(occupied)
    sx, sy = start
    gx, gy = goal
    if occupied[sy][sx] or occupied[gy][gx]:
        return None

    # per-node best (straights, diagonals); f-ties broken by insertion order
    best = {start: (0, 0)}
    parent = {start: None}
    counter = 0
    open_heap = [(_octile(sx, sy, gx, gy), 0, start)]
    closed = set()

    while open_heap:
        _, _, node = heapq.heappop(open_heap)
        if node in closed:
            continue
        if node == goal:
            path = []
            cur = node
            while cur is not None:
                path.append(cur)
                cur = parent[cur]
            path.reverse()
            ns, nd = best[node]
            return path, ns, nd
        closed.add(node)
        x, y = node
        ns, nd = best[node]
        for dx, dy, diag in MOVES:
            nx = x + dx
            ny = y + dy
            if not (0 <= nx < n and 0 <= ny < n):
                continue
            if occupied[ny][nx]:
                continue
            if diag and (occupied[y][nx] or occupied[ny][x]):
                continue
            cand = (ns + 1 - diag, nd + diag)
            nxt = (nx, ny)
            prev = best.get(nxt)
            if prev is None or step_cost(*cand) < step_cost(*prev):
                best[nxt] = cand
                parent[nxt] = node
                counter += 1
                f = step_cost(*cand) + _octile(nx, ny, gx, gy)
                heapq.heappush(open_heap, (f, counter, nxt))
    return None


def simplify_collinear(points: List[Tuple[float, float]], tol: float = 1e-9) -> List[Tuple[float, float]]:
    """Drop interior vertices lying on the segment between their neighbors."""
    if len(points) <= 2:
        return list(points)
    out = [points[0]]
    for i in range(1, len(points) - 1):
        ax, ay = out[-1]
        bx, by = points[i]
        cx, cy = points[i + 1]
        cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if abs(cross) > tol:
            out.append(points[i])
    out.append(points[-1])
    return out


def _nearest_blocked(occupied: np.ndarray, x: float, y: float, resolution: float) -> Tuple[float, float]:
    ys, xs = np.nonzero(occupied)
    if len(xs) == 0:
        return (x, y)
    d2 = (xs * resolution - x) ** 2 + (ys * resolution - y) ** 2
    k = int(np.argmin(d2))
    return (xs[k] * resolution, ys[k] * resolution)


def plan_path(occupied: np.ndarray, resolution: float,
              start_xy: Tuple[float, float], goal_xy: Tuple[float, float]) -> np.ndarray:
    """Plan a collision-free polyline between two world points.

    Endpoints of the returned polyline are the exact start/goal coordinates;
    interior vertices are simplified grid nodes.
    """
    n = occupied.shape[0]

    def snap(p):
        ix = min(max(int(round(p[0] / resolution)), 0), n - 1)
        iy = min(max(int(round(p[1] / resolution)), 0), n - 1)
        return ix, iy

    start_node = snap(start_xy)
    goal_node = snap(goal_xy)
    occ_list = occupied.tolist()
    for name, (ix, iy) in (("start", start_node), ("goal", goal_node)):
        if occ_list[iy][ix]:
            raise PlanningError(f"{name} cell ({ix * resolution}, {iy * resolution}) "
                                f"is inside an inflated obstacle")

    result = astar_grid(occ_list, start_node, goal_node)
    if result is None:
        mx = (start_xy[0] + goal_xy[0]) / 2.0
        my = (start_xy[1] + goal_xy[1]) / 2.0
        bx, by = _nearest_blocked(occupied, mx, my, resolution)
        raise PlanningError(f"no collision-free path from {start_xy} to {goal_xy}; "
                            f"blocking region near ({bx}, {by})")
    nodes, _, _ = result

    pts = [(float(start_xy[0]), float(start_xy[1]))]
    pts += [(ix * resolution, iy * resolution) for ix, iy in nodes]
    pts.append((float(goal_xy[0]), float(goal_xy[1])))
    deduped = [pts[0]]
    for p in pts[1:]:
        if math.hypot(p[0] - deduped[-1][0], p[1] - deduped[-1][1]) > 1e-12:
            deduped.append(p)
    return np.asarray(simplify_collinear(deduped), dtype=np.float64)


def plan_global_path(env: EnvironmentSpec, task_id: int) -> np.ndarray:
    """Re-plan the task's global path on the environment's inflated grid."""
    task = env.tasks[task_id]
    occ = occupancy_grid(env, env.path_clearance)
    return plan_path(occ, env.resolution,
                     (task.start_x, task.start_y), (task.goal_x, task.goal_y))


def polyline_length(path: np.ndarray) -> float:
    diffs = np.diff(path, axis=0)
    return float(np.hypot(diffs[:, 0], diffs[:, 1]).sum())

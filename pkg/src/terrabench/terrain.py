"""Immutable in-memory environment model: geometry, semantics, obstacles, tasks.

World convention: elevations are node samples on a square grid, `elevations[iy, ix]`
is the surface height at (x, y) = (ix * resolution, iy * resolution). The world
spans [0, (cells - 1) * resolution] on both axes. The semantics layer tiles the
grid with 16x16 patches of 9x9 cells overlapping by one cell per seam.
"""

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from .errors import BoundsError, ConfigError
from .semantics import RIGID_CLASSES, ScmParams

CELLS_PER_AXIS = 129
PATCH_GRID = 16
PATCH_CELLS = 9
PATCH_STRIDE = PATCH_CELLS - 1

# Tiling identity: 16 patches of 9 cells with 1-cell overlap span 16*8+1 cells.
assert PATCH_GRID * PATCH_STRIDE + 1 == CELLS_PER_AXIS


class ElevationLevel(str, enum.Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"

    @property
    def factor(self) -> float:
        return {"low": 0.3, "medium": 0.6, "high": 1.0}[self.value]


class ObstacleDensity(str, enum.Enum):
    SPARSE = "sparse"
    MEDIUM = "medium"
    DENSE = "dense"

    @property
    def count(self) -> int:
        return {"sparse": 10, "medium": 20, "dense": 40}[self.value]


class WorldScale(str, enum.Enum):
    FULL = "full"
    ONE_SIXTH = "one_sixth"
    ONE_TENTH = "one_tenth"

    @property
    def factor(self) -> float:
        return {"full": 1.0, "one_sixth": 1.0 / 6.0, "one_tenth": 0.1}[self.value]


@dataclass(frozen=True, eq=False)
class HeightField:
    cells_x: int
    cells_y: int
    resolution: float           # meters per cell
    elevations: np.ndarray      # (cells_y, cells_x) float64, node heights in meters
    elevation_level: ElevationLevel

    def __post_init__(self):
        if self.cells_x != self.cells_y:
            raise ConfigError("heightfield must be square")
        if self.elevations.shape != (self.cells_y, self.cells_x):
            raise ConfigError(f"elevation shape {self.elevations.shape} does not match "
                              f"({self.cells_y}, {self.cells_x})")
        if not np.isfinite(self.elevations).all():
            raise ConfigError("elevations contain non-finite values")
        self.elevations.setflags(write=False)

    @property
    def extent(self) -> float:
        """World span per axis in meters."""
        return (self.cells_x - 1) * self.resolution


@dataclass(frozen=True)
class PatchSemantics:
    terrain_class: str
    cluster_id: int
    friction: Optional[float] = None      # rigid classes only
    restitution: Optional[float] = None   # rigid classes only
    scm: Optional[ScmParams] = None       # deformable classes only

    def __post_init__(self):
        if self.rigid:
            if self.friction is None or self.friction <= 0:
                raise ConfigError(f"rigid patch ({self.terrain_class}) needs friction > 0")
            if self.restitution is None:
                raise ConfigError("rigid patch needs a restitution coefficient")
            if self.scm is not None:
                raise ConfigError("rigid patch must not carry SCM parameters")
        else:
            if self.scm is None:
                raise ConfigError(f"deformable patch ({self.terrain_class}) needs SCM parameters")
            if self.friction is not None or self.restitution is not None:
                raise ConfigError("deformable patch must not carry friction/restitution")

    @property
    def rigid(self) -> bool:
        return self.terrain_class in RIGID_CLASSES


def cell_owner(c: int) -> int:
    """Patch index (per axis) owning grid cell c under the low-index seam rule."""
    if c <= 0:
        return 0
    return min((c - 1) // PATCH_STRIDE, PATCH_GRID - 1)


@dataclass(frozen=True)
class SemanticsLayer:
    patches: Tuple[PatchSemantics, ...]   # 256 entries, row-major over the 16x16 grid

    def __post_init__(self):
        if len(self.patches) != PATCH_GRID * PATCH_GRID:
            raise ConfigError(f"expected {PATCH_GRID * PATCH_GRID} patches, "
                              f"got {len(self.patches)}")

    def patch(self, row: int, col: int) -> PatchSemantics:
        return self.patches[row * PATCH_GRID + col]

    def owner_of_cell(self, iy: int, ix: int) -> PatchSemantics:
        return self.patch(cell_owner(iy), cell_owner(ix))


@dataclass(frozen=True)
class Obstacle:
    kind: str                 # "boulder" | "tree"
    x: float
    y: float
    footprint_radius: float
    height: float

    def __post_init__(self):
        if self.footprint_radius <= 0 or self.height <= 0:
            raise ConfigError("obstacle radius and height must be positive")


@dataclass(frozen=True)
class ObstacleSet:
    obstacles: Tuple[Obstacle, ...]
    density: ObstacleDensity

    def __post_init__(self):
        if len(self.obstacles) != self.density.count:
            raise ConfigError(f"density {self.density.value} requires "
                              f"{self.density.count} obstacles, got {len(self.obstacles)}")


@dataclass(frozen=True, eq=False)
class NavigationTask:
    task_id: int
    start_x: float
    start_y: float
    start_yaw: float
    goal_x: float
    goal_y: float
    global_path: np.ndarray   # (N, 2) waypoints, endpoints at start and goal

    def __post_init__(self):
        self.global_path.setflags(write=False)

    @property
    def start_goal_distance(self) -> float:
        return math.hypot(self.goal_x - self.start_x, self.goal_y - self.start_y)


@dataclass(frozen=True, eq=False)
class EnvironmentSpec:
    seed: int
    format_version: int
    scale: WorldScale
    heightfield: HeightField
    semantics: SemanticsLayer
    obstacles: ObstacleSet
    tasks: Tuple[NavigationTask, ...]
    path_clearance: float     # obstacle inflation used for the global paths, meters

    def __post_init__(self):
        if len(self.tasks) != 10:
            raise ConfigError(f"an environment carries exactly 10 tasks, got {len(self.tasks)}")
        if self.heightfield.cells_x != CELLS_PER_AXIS:
            raise ConfigError(f"expected {CELLS_PER_AXIS} cells per axis")

    @property
    def extent(self) -> float:
        return self.heightfield.extent

    @property
    def resolution(self) -> float:
        return self.heightfield.resolution

    def in_bounds(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.extent and 0.0 <= y <= self.extent

    # ---- derived lookup tables (immutable after first use) ----

    @cached_property
    def elevation_flat(self):
        """Row-major list of node heights for the scalar-math hot path."""
        return self.heightfield.elevations.ravel().tolist()

    @cached_property
    def node_patch_index(self) -> np.ndarray:
        owner = np.fromiter((cell_owner(c) for c in range(CELLS_PER_AXIS)),
                            dtype=np.intp, count=CELLS_PER_AXIS)
        return owner[:, None] * PATCH_GRID + owner[None, :]

    @cached_property
    def class_id_map(self) -> np.ndarray:
        """Per-cell class id (index into semantics.CLASS_ORDER)."""
        from .semantics import CLASS_ORDER
        patch_ids = np.fromiter(
            (CLASS_ORDER.index(p.terrain_class) for p in self.semantics.patches),
            dtype=np.int8, count=PATCH_GRID * PATCH_GRID)
        return patch_ids[self.node_patch_index]

    @cached_property
    def node_friction_flat(self):
        """Per-node friction coefficient (0.0 on deformable nodes), flat list."""
        vals = np.fromiter(
            (p.friction if p.rigid else 0.0 for p in self.semantics.patches),
            dtype=np.float64, count=PATCH_GRID * PATCH_GRID)
        return vals[self.node_patch_index].ravel().tolist()

    @cached_property
    def node_scm_flat(self):
        """Per-node ScmParams (None on rigid nodes), flat list."""
        per_patch = [p.scm for p in self.semantics.patches]
        idx = self.node_patch_index.ravel()
        return [per_patch[i] for i in idx]


# ---------------------------------------------------------------------------
# Continuous queries
# ---------------------------------------------------------------------------

def _check_bounds(env: EnvironmentSpec, x: float, y: float):
    if not 0.0 <= x <= env.extent:
        raise BoundsError(f"x={x} outside world bounds [0, {env.extent}]")
    if not 0.0 <= y <= env.extent:
        raise BoundsError(f"y={y} outside world bounds [0, {env.extent}]")


def height_at(env: EnvironmentSpec, x: float, y: float, soil=None) -> float:
    """Bilinear surface height at (x, y).

    With `soil` (a SoilState), deformable cells report the current sunk
    surface (elevation minus accumulated plastic sinkage).
    """
    _check_bounds(env, x, y)
    res = env.resolution
    n = env.heightfield.cells_x
    gx = x / res
    gy = y / res
    ix = min(int(gx), n - 2)
    iy = min(int(gy), n - 2)
    fx = gx - ix
    fy = gy - iy
    elev = env.elevation_flat
    base = iy * n + ix
    h00 = elev[base]
    h01 = elev[base + 1]
    h10 = elev[base + n]
    h11 = elev[base + n + 1]
    if soil is not None and soil.sinkage:
        s = soil.sinkage
        h00 -= s.get(base, 0.0)
        h01 -= s.get(base + 1, 0.0)
        h10 -= s.get(base + n, 0.0)
        h11 -= s.get(base + n + 1, 0.0)
    top = h00 * (1.0 - fx) + h01 * fx
    bot = h10 * (1.0 - fx) + h11 * fx
    return top * (1.0 - fy) + bot * fy


def surface_normal_at(env: EnvironmentSpec, x: float, y: float, soil=None) -> Tuple[float, float, float]:
    """Unit surface normal from the central-difference gradient of height_at."""
    _check_bounds(env, x, y)
    delta = env.resolution / 2.0
    x0 = max(x - delta, 0.0)
    x1 = min(x + delta, env.extent)
    y0 = max(y - delta, 0.0)
    y1 = min(y + delta, env.extent)
    dzdx = (height_at(env, x1, y, soil) - height_at(env, x0, y, soil)) / (x1 - x0)
    dzdy = (height_at(env, x, y1, soil) - height_at(env, x, y0, soil)) / (y1 - y0)
    inv = 1.0 / math.sqrt(dzdx * dzdx + dzdy * dzdy + 1.0)
    return (-dzdx * inv, -dzdy * inv, inv)


def semantics_at(env: EnvironmentSpec, x: float, y: float) -> PatchSemantics:
    """Semantics record of the patch owning the cell nearest to (x, y)."""
    _check_bounds(env, x, y)
    n = env.heightfield.cells_x
    ix = min(int(x / env.resolution + 0.5), n - 1)
    iy = min(int(y / env.resolution + 0.5), n - 1)
    return env.semantics.owner_of_cell(iy, ix)


# ---------------------------------------------------------------------------
# Ground-truth exports
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GroundTruthMaps:
    elevation: np.ndarray   # (n, n) float64
    classes: np.ndarray     # (n, n) int8 class ids
    occupancy: np.ndarray   # (n, n) bool, True = occupied


def occupancy_grid(env: EnvironmentSpec, inflation: float) -> np.ndarray:
    """Cell is occupied iff its node lies within footprint_radius + inflation
    of any obstacle center."""
    if inflation < 0:
        raise ConfigError(f"inflation must be >= 0, got {inflation}")
    n = env.heightfield.cells_x
    coords = np.arange(n, dtype=np.float64) * env.resolution
    gx = coords[None, :]
    gy = coords[:, None]
    occ = np.zeros((n, n), dtype=bool)
    for ob in env.obstacles.obstacles:
        r = ob.footprint_radius + inflation
        occ |= (gx - ob.x) ** 2 + (gy - ob.y) ** 2 <= r * r
    return occ


def export_ground_truth(env: EnvironmentSpec, inflation: float = 0.0) -> GroundTruthMaps:
    return GroundTruthMaps(
        elevation=env.heightfield.elevations.copy(),
        classes=env.class_id_map.copy(),
        occupancy=occupancy_grid(env, inflation),
    )


# ---------------------------------------------------------------------------
# Loader-side invariant checks
# ---------------------------------------------------------------------------

def validate_environment(env: EnvironmentSpec):
    """Assert the cross-cutting invariants any accepted environment must hold.

    Raises ConfigError with the first violated invariant.
    """
    s = env.scale.factor
    sep = 120.0 * s
    tol = 0.5 * s
    for task in env.tasks:
        d = task.start_goal_distance
        if abs(d - sep) > tol:
            raise ConfigError(f"task {task.task_id}: start-goal distance {d} "
                              f"outside {sep} +- {tol}")
        path = task.global_path
        if not (math.isclose(path[0, 0], task.start_x) and math.isclose(path[0, 1], task.start_y)):
            raise ConfigError(f"task {task.task_id}: path does not start at the start pose")
        if not (math.isclose(path[-1, 0], task.goal_x) and math.isclose(path[-1, 1], task.goal_y)):
            raise ConfigError(f"task {task.task_id}: path does not end at the goal")

    obs = env.obstacles.obstacles
    min_sep = 10.0 * s
    for i in range(len(obs)):
        for j in range(i + 1, len(obs)):
            d = math.hypot(obs[i].x - obs[j].x, obs[i].y - obs[j].y)
            if d < min_sep:
                raise ConfigError(f"obstacles {i} and {j} are {d:.3f} m apart (< {min_sep})")
    endpoints = [(t.start_x, t.start_y) for t in env.tasks] + \
                [(t.goal_x, t.goal_y) for t in env.tasks]
    for i, ob in enumerate(obs):
        for ex, ey in endpoints:
            if math.hypot(ob.x - ex, ob.y - ey) < min_sep:
                raise ConfigError(f"obstacle {i} within {min_sep} m of a task endpoint")

    for task in env.tasks:
        for vx, vy in task.global_path:
            for i, ob in enumerate(obs):
                clearance = math.hypot(vx - ob.x, vy - ob.y) - ob.footprint_radius
                if clearance < env.path_clearance - 1e-9:
                    raise ConfigError(
                        f"task {task.task_id}: path vertex ({vx}, {vy}) has "
                        f"{clearance:.3f} m clearance from obstacle {i}")

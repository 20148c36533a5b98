"""Seeded, deterministic environment generation.

Pipeline: elevation -> tasks -> obstacles -> semantics -> global paths.
Each stage draws from its own (seed, tag) RNG stream, so the elevation field
for a given seed is identical no matter which elevation level or density gets
chosen, and stage order alone fixes the output.
"""

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from . import rng as rngmod
from .errors import ConfigError, GenerationError
from .noise import MultiOctaveNoise
from .planning import plan_path
from .semantics import CLASS_ORDER, SemanticsCatalogue, default_catalogue
from .terrain import (CELLS_PER_AXIS, PATCH_CELLS, PATCH_GRID, PATCH_STRIDE, ElevationLevel,
                      EnvironmentSpec, HeightField, NavigationTask, Obstacle,
                      ObstacleDensity, ObstacleSet, PatchSemantics,
                      SemanticsLayer, WorldScale, occupancy_grid,
                      validate_environment)

RANDOM = "random"

TASK_COUNT = 10
TASK_SEPARATION = 120.0        # meters at full scale
TASK_CIRCLE_MARGIN = 2.0
OBSTACLE_MIN_SEPARATION = 10.0

BOULDER_RADIUS_RANGE = (1.5, 4.0)
BOULDER_HEIGHT_RANGE = (1.5, 5.0)
TREE_RADIUS_RANGE = (0.4, 1.0)
TREE_HEIGHT_RANGE = (4.0, 10.0)


@dataclass
class WorldGenConfig:
    seed: int = 0
    elevation_level: Union[str, ElevationLevel] = RANDOM   # or "random": 1/3 each
    obstacle_density: Union[str, ObstacleDensity] = RANDOM
    base_amplitude: float = 8.0            # pre-level-scaling peak, meters at full scale
    cluster_count_range: Tuple[int, int] = (3, 8)   # inclusive
    scale: WorldScale = WorldScale.FULL
    path_clearance: float = 2.5            # obstacle inflation for global paths, full scale
    obstacle_attempt_budget: int = 10_000  # rejection-sampling attempts per obstacle
    sampler: MultiOctaveNoise = field(default_factory=MultiOctaveNoise)
    catalogue: Optional[SemanticsCatalogue] = None

    def __post_init__(self):
        if self.base_amplitude <= 0:
            raise ConfigError(f"base_amplitude must be positive, got {self.base_amplitude}")
        lo, hi = self.cluster_count_range
        if lo > hi or lo < 1:
            raise ConfigError(f"cluster_count_range {self.cluster_count_range} is empty")
        if not isinstance(self.scale, WorldScale):
            self.scale = WorldScale(self.scale)
        if self.elevation_level != RANDOM and not isinstance(self.elevation_level, ElevationLevel):
            self.elevation_level = ElevationLevel(self.elevation_level)
        if self.obstacle_density != RANDOM and not isinstance(self.obstacle_density, ObstacleDensity):
            self.obstacle_density = ObstacleDensity(self.obstacle_density)

    @property
    def resolution(self) -> float:
        return self.scale.factor

    @property
    def extent(self) -> float:
        return (CELLS_PER_AXIS - 1) * self.resolution


def _resolve_level(config: WorldGenConfig) -> ElevationLevel:
    if config.elevation_level != RANDOM:
        return config.elevation_level
    # separate stream: the level draw must not perturb the elevation field
    gen = rngmod.stream(config.seed, "worldgen/level")
    return (ElevationLevel.LOW, ElevationLevel.MEDIUM, ElevationLevel.HIGH)[gen.integers(3)]


def _resolve_density(config: WorldGenConfig) -> ObstacleDensity:
    if config.obstacle_density != RANDOM:
        return config.obstacle_density
    gen = rngmod.stream(config.seed, "worldgen/density")
    return (ObstacleDensity.SPARSE, ObstacleDensity.MEDIUM, ObstacleDensity.DENSE)[gen.integers(3)]


def generate_elevation(config: WorldGenConfig) -> HeightField:
    """Sample the noise field, normalize to zero mean and +-base_amplitude peak,
    then apply the elevation level's {0.3, 0.6, 1.0} factor."""
    gen = rngmod.stream(config.seed, "worldgen/elevation")
    level = _resolve_level(config)
    raw = config.sampler.sample(gen, CELLS_PER_AXIS)
    raw = raw - raw.mean()
    peak = float(np.abs(raw).max())
    amplitude = config.base_amplitude * config.scale.factor
    if peak > 0.0:
        raw = raw * (amplitude / peak)
    elevations = raw * level.factor
    return HeightField(cells_x=CELLS_PER_AXIS, cells_y=CELLS_PER_AXIS,
                       resolution=config.resolution, elevations=elevations,
                       elevation_level=level)


def generate_tasks(config: WorldGenConfig, field_: HeightField) -> Tuple[NavigationTask, ...]:
    """Ten start/goal pairs as diametrically opposite points on one circle of
    diameter 120 m (scaled), pair k at angle k * 36 degrees; yaw faces the goal.

    Paths are straight-line placeholders until obstacles are placed.
    """
    s = config.scale.factor
    radius = TASK_SEPARATION * s / 2.0
    center = field_.extent / 2.0
    margin = min(center - radius, field_.extent - (center + radius))
    if margin < TASK_CIRCLE_MARGIN * s:
        raise ConfigError(f"task circle of radius {radius} does not fit with "
                          f"{TASK_CIRCLE_MARGIN * s} m margin")
    tasks = []
    for k in range(TASK_COUNT):
        theta = math.radians(36.0 * k)
        dx = radius * math.cos(theta)
        dy = radius * math.sin(theta)
        start = (center + dx, center + dy)
        goal = (center - dx, center - dy)
        yaw = math.atan2(goal[1] - start[1], goal[0] - start[0])
        path = np.array([start, goal], dtype=np.float64)
        tasks.append(NavigationTask(task_id=k, start_x=start[0], start_y=start[1],
                                    start_yaw=yaw, goal_x=goal[0], goal_y=goal[1],
                                    global_path=path))
    return tuple(tasks)


def place_obstacles(config: WorldGenConfig,
                    tasks: Sequence[NavigationTask]) -> ObstacleSet:
    """Rejection-sample obstacle positions/types until the density count is met.

    An obstacle is resampled while it lies within 10 m (scaled) of an already
    accepted obstacle or any task start/goal.
    """
    s = config.scale.factor
    density = _resolve_density(config)
    gen = rngmod.stream(config.seed, "worldgen/obstacles")
    extent = config.extent
    min_sep = OBSTACLE_MIN_SEPARATION * s
    endpoints = [(t.start_x, t.start_y) for t in tasks] + \
                [(t.goal_x, t.goal_y) for t in tasks]

    accepted = []
    for index in range(density.count):
        for _ in range(config.obstacle_attempt_budget):
            if gen.random() < 0.5:
                kind = "boulder"
                r_lo, r_hi = BOULDER_RADIUS_RANGE
                h_lo, h_hi = BOULDER_HEIGHT_RANGE
            else:
                kind = "tree"
                r_lo, r_hi = TREE_RADIUS_RANGE
                h_lo, h_hi = TREE_HEIGHT_RANGE
            radius = gen.uniform(r_lo, r_hi) * s
            height = gen.uniform(h_lo, h_hi) * s
            x = gen.uniform(radius, extent - radius)
            y = gen.uniform(radius, extent - radius)
            too_close = any(math.hypot(x - ob.x, y - ob.y) < min_sep for ob in accepted) or \
                any(math.hypot(x - ex, y - ey) < min_sep for ex, ey in endpoints)
            if not too_close:
                accepted.append(Obstacle(kind=kind, x=x, y=y,
                                         footprint_radius=radius, height=height))
                break
        else:
            raise GenerationError(
                f"could not place obstacle {index + 1}/{density.count} within "
                f"{config.obstacle_attempt_budget} attempts; use a larger world "
                f"or a lower obstacle density")
    return ObstacleSet(obstacles=tuple(accepted), density=density)


def assign_semantics(config: WorldGenConfig, field_: HeightField) -> SemanticsLayer:
    """Cluster-based class assignment over the 16x16 patch grid.

    K cluster centers are drawn uniformly in world coordinates; each patch goes
    to its nearest center (ties -> lowest cluster index); one class is sampled
    per cluster; per-patch physics are sampled from the class distribution.
    """
    catalogue = config.catalogue or default_catalogue()
    gen = rngmod.stream(config.seed, "worldgen/semantics")
    lo, hi = config.cluster_count_range
    k = int(gen.integers(lo, hi + 1))
    centers = gen.uniform(0.0, field_.extent, size=(k, 2))

    # patch centers in world coordinates (center cell of each 9x9 patch)
    res = field_.resolution
    centers_1d = np.array([(PATCH_STRIDE * i + PATCH_CELLS // 2) * res
                           for i in range(PATCH_GRID)])
    px = np.tile(centers_1d, PATCH_GRID)            # column -> x
    py = np.repeat(centers_1d, PATCH_GRID)          # row    -> y
    d2 = (px[:, None] - centers[None, :, 0]) ** 2 + (py[:, None] - centers[None, :, 1]) ** 2
    patch_cluster = np.argmin(d2, axis=1)           # first minimum wins ties

    weights = np.array([catalogue.classes[name].weight for name in CLASS_ORDER])
    weights = weights / weights.sum()
    cluster_class = [CLASS_ORDER[gen.choice(len(CLASS_ORDER), p=weights)]
                     for _ in range(k)]

    f_lo, f_hi = catalogue.friction_clamp
    patches = []
    for idx in range(PATCH_GRID * PATCH_GRID):
        cluster_id = int(patch_cluster[idx])
        name = cluster_class[cluster_id]
        spec = catalogue.classes[name]
        if spec.rigid:
            friction = float(np.clip(gen.normal(spec.friction_mean, spec.friction_std),
                                     f_lo, f_hi))
            patches.append(PatchSemantics(terrain_class=name, cluster_id=cluster_id,
                                          friction=friction,
                                          restitution=catalogue.restitution))
        else:
            patches.append(PatchSemantics(terrain_class=name, cluster_id=cluster_id,
                                          scm=catalogue.scm_for_class(name)))
    return SemanticsLayer(patches=tuple(patches))


def generate_environment(config: WorldGenConfig, format_version: int = 1) -> EnvironmentSpec:
    """Run the full pipeline and return a validated EnvironmentSpec."""
    field_ = generate_elevation(config)
    tasks = generate_tasks(config, field_)
    obstacles = place_obstacles(config, tasks)
    semantics = assign_semantics(config, field_)

    clearance = config.path_clearance * config.scale.factor
    env = EnvironmentSpec(seed=config.seed, format_version=format_version,
                          scale=config.scale, heightfield=field_,
                          semantics=semantics, obstacles=obstacles,
                          tasks=tasks, path_clearance=clearance)
    occ = occupancy_grid(env, clearance)
    planned = []
    for task in tasks:
        path = plan_path(occ, field_.resolution,
                         (task.start_x, task.start_y), (task.goal_x, task.goal_y))
        planned.append(dataclasses.replace(task, global_path=path))
    env = dataclasses.replace(env, tasks=tuple(planned))
    validate_environment(env)
    return env

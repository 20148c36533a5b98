"""Versioned on-disk environment directory format.

Layout (all files required):
    meta.json       seed, format_version, scale, elevation_level, obstacle_density,
                    path_clearance, cells, resolution
    elevation.f32   little-endian float32, row-major, cells x cells
    semantics.json  per-patch: class, cluster_id, friction (rigid) or scm_level
    obstacles.json  list of {kind, x, y, footprint_radius, height}
    tasks.json      10 tasks with global_path polylines

Writes are deterministic (sorted keys, repr floats, no timestamps), so the
same EnvironmentSpec always produces byte-identical directories.

Elevation is stored at float32 precision; the in-memory field is float64, so a
loaded environment can differ from its freshly generated twin below 1e-7
relative. Benchmark runs therefore always load environments from disk.
"""

import json
import math
from pathlib import Path
from typing import List, Optional

import numpy as np

from .errors import ConfigError
from .semantics import SemanticsCatalogue, default_catalogue
from .terrain import (CELLS_PER_AXIS, ElevationLevel, EnvironmentSpec,
                      HeightField, NavigationTask, Obstacle, ObstacleDensity,
                      ObstacleSet, PatchSemantics, SemanticsLayer, WorldScale,
                      validate_environment)

FORMAT_VERSION = 1

META_FILE = "meta.json"
ELEVATION_FILE = "elevation.f32"
SEMANTICS_FILE = "semantics.json"
OBSTACLES_FILE = "obstacles.json"
TASKS_FILE = "tasks.json"


def _dump_json(path: Path, payload):
    text = json.dumps(payload, indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")


def _load_json(path: Path):
    if not path.is_file():
        raise ConfigError(f"missing environment file: {path}")
    return json.loads(path.read_text(encoding="utf-8"))


def save_environment(env: EnvironmentSpec, directory) -> Path:
    """Write the environment directory; returns its path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    _dump_json(directory / META_FILE, {
        "format_version": env.format_version,
        "seed": env.seed,
        "scale": env.scale.value,
        "elevation_level": env.heightfield.elevation_level.value,
        "obstacle_density": env.obstacles.density.value,
        "path_clearance": env.path_clearance,
        "cells": env.heightfield.cells_x,
        "resolution": env.heightfield.resolution,
    })

    data = env.heightfield.elevations.astype("<f4").tobytes()
    (directory / ELEVATION_FILE).write_bytes(data)

    patch_records = []
    for patch in env.semantics.patches:
        rec = {"class": patch.terrain_class, "cluster_id": patch.cluster_id}
        if patch.rigid:
            rec["friction"] = patch.friction
        else:
            rec["scm_level"] = patch.scm.level
        patch_records.append(rec)
    _dump_json(directory / SEMANTICS_FILE, {"patches": patch_records})

    _dump_json(directory / OBSTACLES_FILE, {
        "obstacles": [{"kind": ob.kind, "x": ob.x, "y": ob.y,
                       "footprint_radius": ob.footprint_radius, "height": ob.height}
                      for ob in env.obstacles.obstacles],
    })

    _dump_json(directory / TASKS_FILE, {
        "tasks": [{"task_id": t.task_id,
                   "start": [t.start_x, t.start_y, t.start_yaw],
                   "goal": [t.goal_x, t.goal_y],
                   "global_path": t.global_path.tolist()}
                  for t in env.tasks],
    })
    return directory


def load_environment(directory, catalogue: Optional[SemanticsCatalogue] = None,
                     validate: bool = True) -> EnvironmentSpec:
    """Load and (by default) validate an environment directory."""
    directory = Path(directory)
    catalogue = catalogue or default_catalogue()

    meta = _load_json(directory / META_FILE)
    if meta["format_version"] != FORMAT_VERSION:
        raise ConfigError(f"unsupported format_version {meta['format_version']} "
                          f"(expected {FORMAT_VERSION})")
    cells = int(meta["cells"])
    if cells != CELLS_PER_AXIS:
        raise ConfigError(f"unsupported grid size {cells}")

    raw = (directory / ELEVATION_FILE).read_bytes()
    expected = cells * cells * 4
    if len(raw) != expected:
        raise ConfigError(f"{ELEVATION_FILE}: expected {expected} bytes, got {len(raw)}")
    elevations = np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(cells, cells)

    heightfield = HeightField(
        cells_x=cells, cells_y=cells, resolution=float(meta["resolution"]),
        elevations=elevations, elevation_level=ElevationLevel(meta["elevation_level"]))

    patch_payload = _load_json(directory / SEMANTICS_FILE)["patches"]
    patches = []
    for rec in patch_payload:
        name = rec["class"]
        if "friction" in rec:
            patches.append(PatchSemantics(terrain_class=name,
                                          cluster_id=int(rec["cluster_id"]),
                                          friction=float(rec["friction"]),
                                          restitution=catalogue.restitution))
        else:
            patches.append(PatchSemantics(terrain_class=name,
                                          cluster_id=int(rec["cluster_id"]),
                                          scm=catalogue.scm_levels[rec["scm_level"]]))
    semantics = SemanticsLayer(patches=tuple(patches))

    ob_payload = _load_json(directory / OBSTACLES_FILE)["obstacles"]
    obstacles = ObstacleSet(
        obstacles=tuple(Obstacle(kind=o["kind"], x=float(o["x"]), y=float(o["y"]),
                                 footprint_radius=float(o["footprint_radius"]),
                                 height=float(o["height"]))
                        for o in ob_payload),
        density=ObstacleDensity(meta["obstacle_density"]))

    task_payload = _load_json(directory / TASKS_FILE)["tasks"]
    tasks = []
    for rec in task_payload:
        sx, sy, yaw = rec["start"]
        gx, gy = rec["goal"]
        tasks.append(NavigationTask(
            task_id=int(rec["task_id"]), start_x=float(sx), start_y=float(sy),
            start_yaw=float(yaw), goal_x=float(gx), goal_y=float(gy),
            global_path=np.asarray(rec["global_path"], dtype=np.float64)))

    env = EnvironmentSpec(seed=int(meta["seed"]), format_version=int(meta["format_version"]),
                          scale=WorldScale(meta["scale"]), heightfield=heightfield,
                          semantics=semantics, obstacles=obstacles, tasks=tuple(tasks),
                          path_clearance=float(meta["path_clearance"]))
    if validate:
        validate_environment(env)
    return env


def is_environment_dir(directory) -> bool:
    directory = Path(directory)
    return all((directory / name).is_file() for name in
               (META_FILE, ELEVATION_FILE, SEMANTICS_FILE, OBSTACLES_FILE, TASKS_FILE))


def list_environments(root) -> List[Path]:
    """Environment directories under root (root itself, or its children), sorted by seed."""
    root = Path(root)
    if is_environment_dir(root):
        return [root]
    found = [p for p in sorted(root.iterdir()) if p.is_dir() and is_environment_dir(p)]

    def seed_of(p: Path):
        try:
            return (0, json.loads((p / META_FILE).read_text())["seed"])
        except Exception:
            return (1, math.inf)

    return sorted(found, key=seed_of)

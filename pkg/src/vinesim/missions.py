"""Scripted workflows: circular capture, trajectory metrics, grid + A*.

The occupancy grid discretises the scene's horizontal cross-section at the
flight altitude, inflated by the vehicle radius.  A* runs 8-connected with
the octile heuristic, straight/diagonal edge costs of cell and cell*sqrt(2),
and no corner cutting.  Path lengths are accumulated as integer move counts
so equal-cost paths compare bit-exactly.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import world as world_mod
from .frames import wrap_to_pi
from .world import Scene, SceneObject, min_distance_to_scene

SQRT2 = math.sqrt(2.0)


@dataclass
class CaptureWaypoint:
    position: np.ndarray
    yaw: float  # boresight toward the capture target


def circular_capture_waypoints(center, radius: float, altitude: float, n: int):
    """n waypoints equally spaced on the circle, each facing the centre."""
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    if n < 1:
        raise ValueError("need at least one waypoint")
    center = np.asarray(center, dtype=float)
    out = []
    for k in range(n):
        theta = 2.0 * math.pi * k / n
        pos = np.array(
            [
                center[0] + radius * math.cos(theta),
                center[1] + radius * math.sin(theta),
                altitude,
            ]
        )
        out.append(CaptureWaypoint(pos, wrap_to_pi(theta + math.pi)))
    return out


class LogFormatError(ValueError):
    """Raised for malformed trajectory-log CSV files; names the row."""


@dataclass
class TrajectoryLog:
    times: np.ndarray  # (n,), strictly increasing
    positions: np.ndarray  # (n, 3)
    yaws: np.ndarray  # (n,)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) == 0:
            raise LogFormatError("trajectory log is empty")
        if np.any(np.diff(self.times) <= 0.0):
            raise LogFormatError("trajectory log times must be strictly increasing")


def save_trajectory_log(log: TrajectoryLog, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,x,y,z,yaw\n")
        for t, p, y in zip(log.times, log.positions, log.yaws):
            row = (float(t), float(p[0]), float(p[1]), float(p[2]), float(y))
            fh.write(",".join(repr(v) for v in row) + "\n")


def load_trajectory_log(path) -> TrajectoryLog:
    times, positions, yaws = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for row, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if row == 1 and line.lower().replace(" ", "") == "t,x,y,z,yaw":
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise LogFormatError(f"row {row}: expected 5 columns, got {len(parts)}")
            try:
                vals = [float(v) for v in parts]
            except ValueError as exc:
                raise LogFormatError(f"row {row}: {exc}") from exc
            times.append(vals[0])
            positions.append(vals[1:4])
            yaws.append(vals[4])
    if not times:
        raise LogFormatError("trajectory log is empty")
    return TrajectoryLog(np.asarray(times), np.asarray(positions), np.asarray(yaws))


def goal_convergence(log: TrajectoryLog, goal) -> float:
    """Euclidean distance between the final logged position and the goal."""
    return float(np.linalg.norm(log.positions[-1] - np.asarray(goal, dtype=float)))


def flight_time(log: TrajectoryLog) -> float:
    return float(log.times[-1] - log.times[0])


def obstacle_clearance(log: TrajectoryLog, scene: Scene, step: float = 0.05) -> float:
    """Minimum distance from the (interpolated) trajectory to object surfaces.

    Consecutive samples are linearly interpolated at `step`-metre spacing so
    close approaches between samples are not aliased away.
    """
    best = math.inf
    pts = log.positions
    for a, b in zip(pts[:-1], pts[1:]):
        seg_len = float(np.linalg.norm(b - a))
        n = max(1, int(math.ceil(seg_len / step)))
        for f in np.linspace(0.0, 1.0, n + 1):
            best = min(best, min_distance_to_scene(scene, a + f * (b - a)))
    if len(pts) == 1:
        best = min(best, min_distance_to_scene(scene, pts[0]))
    return best


# --- occupancy grid ----------------------------------------------------------


@dataclass
class OccupancyGrid:
    origin: np.ndarray  # world xy of cell (0, 0) centre
    cell_size: float
    width: int  # cells along x
    height: int  # cells along y
    occupied: np.ndarray  # bool (height, width), indexed [iy, ix]

    def world_to_cell(self, p) -> tuple[int, int]:
        p = np.asarray(p, dtype=float)
        ix = int(round((p[0] - self.origin[0]) / self.cell_size))
        iy = int(round((p[1] - self.origin[1]) / self.cell_size))
        return ix, iy

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height


def _slice_of_object(obj: SceneObject, altitude: float):
    """Horizontal cross-section at the altitude: ('circle'|'ellipse'|'box', params)."""
    cz = float(obj.center[2])
    if obj.shape == "sphere":
        r = float(obj.dims[0])
        dz = altitude - cz
        if abs(dz) >= r:
            return None
        return "circle", math.sqrt(r * r - dz * dz)
    if obj.shape == "vertical_cylinder":
        if abs(altitude - cz) >= 0.5 * float(obj.dims[1]):
            return None
        return "circle", float(obj.dims[0])
    if obj.shape == "ellipsoid":
        a, b, c = (float(v) for v in obj.dims)
        t = (altitude - cz) / c
        if abs(t) >= 1.0:
            return None
        s = math.sqrt(1.0 - t * t)
        if abs(a - b) < 1e-12:
            return "circle", a * s
        return "ellipse", (a * s, b * s)
    ex, ey, ez = (float(v) for v in obj.dims)
    if abs(altitude - cz) >= 0.5 * ez:
        return None
    return "box", (0.5 * ex, 0.5 * ey)


def rasterize_scene_to_grid(
    scene: Scene, cell_size: float, inflation: float, altitude: float
) -> OccupancyGrid:
    """Occupied iff the horizontal distance from the cell centre to any
    object's cross-section at the altitude is below the inflation radius."""
    if cell_size <= 0.0:
        raise ValueError("cell_size must be positive")
    if inflation < 0.0:
        raise ValueError("inflation must be non-negative")
    x0, y0 = float(scene.bounds_min[0]), float(scene.bounds_min[1])
    x1, y1 = float(scene.bounds_max[0]), float(scene.bounds_max[1])
    width = int(math.floor((x1 - x0) / cell_size)) + 1
    height = int(math.floor((y1 - y0) / cell_size)) + 1
    origin = np.array([x0, y0])
    xs = x0 + cell_size * np.arange(width)
    ys = y0 + cell_size * np.arange(height)
    gx, gy = np.meshgrid(xs, ys)  # (height, width)
    occ = np.zeros((height, width), dtype=bool)

    for obj in scene.objects:
        sl = _slice_of_object(obj, altitude)
        if sl is None:
            continue
        kind, params = sl
        dx = gx - float(obj.center[0])
        dy = gy - float(obj.center[1])
        if kind == "circle":
            occ |= np.hypot(dx, dy) - params < inflation
        elif kind == "box":
            hx, hy = params
            qx = np.maximum(np.abs(dx) - hx, 0.0)
            qy = np.maximum(np.abs(dy) - hy, 0.0)
            outside = np.hypot(qx, qy)
            inside = np.minimum(
                np.maximum(np.abs(dx) - hx, np.abs(dy) - hy), 0.0
            )
            occ |= outside + inside < inflation
        else:
            sa, sb = params
            lower = np.hypot(dx, dy) - max(sa, sb)
            cand = np.nonzero(lower < inflation)
            for iy, ix in zip(*cand):
                p2 = np.array([dx[iy, ix], dy[iy, ix]])
                d = world_mod._ellipsoid_nearest_distance(p2, np.array([sa, sb]))
                if (p2[0] / sa) ** 2 + (p2[1] / sb) ** 2 < 1.0:
                    d = -d
                occ[iy, ix] |= d < inflation
    return OccupancyGrid(origin, cell_size, width, height, occ)


_STRAIGHT = ((1, 0), (-1, 0), (0, 1), (0, -1))
_DIAGONAL = ((1, 1), (1, -1), (-1, 1), (-1, -1))


def _snap_to_free(grid: OccupancyGrid, ix: int, iy: int, max_cells: int = 3):
    """Nearest free cell within max_cells (euclidean, deterministic ties)."""
    if grid.in_bounds(ix, iy) and not grid.occupied[iy, ix]:
        return ix, iy
    candidates = []
    for dy in range(-max_cells, max_cells + 1):
        for dx in range(-max_cells, max_cells + 1):
            jx, jy = ix + dx, iy + dy
            if grid.in_bounds(jx, jy) and not grid.occupied[jy, jx]:
                candidates.append((dx * dx + dy * dy, dy, dx, jx, jy))
    if not candidates:
        return None
    candidates.sort()
    _, _, _, jx, jy = candidates[0]
    return jx, jy


def astar_distance(grid: OccupancyGrid, start, goal) -> float:
    """8-connected A* path length in metres; math.inf when unreachable.

    Diagonal steps are forbidden when either orthogonal neighbour is
    occupied.  Start/goal in occupied cells snap to the nearest free cell
    within 3 cells.
    """
    s = _snap_to_free(grid, *grid.world_to_cell(start))
    g = _snap_to_free(grid, *grid.world_to_cell(goal))
    if s is None or g is None:
        return math.inf
    if not (grid.in_bounds(*s) and grid.in_bounds(*g)):
        return math.inf
    if s == g:
        return 0.0
    cell = grid.cell_size
    occ = grid.occupied
    gx, gy = g

    def heuristic(ix, iy):
        dx = abs(ix - gx)
        dy = abs(iy - gy)
        return cell * (max(dx, dy) + (SQRT2 - 1.0) * min(dx, dy))

    # g-costs as (straight, diagonal) move counts: path lengths built from
    # identical multisets compare bit-exactly against the Dijkstra oracle.
    best: dict[tuple[int, int], float] = {s: 0.0}
    counts = {s: (0, 0)}
    heap = [(heuristic(*s), 0, s)]
    tie = 0
    while heap:
        f, _, node = heapq.heappop(heap)
        ix, iy = node
        ns, nd = counts[node]
        g_val = cell * ns + cell * SQRT2 * nd
        if f > best.get(node, math.inf) + heuristic(ix, iy):
            continue
        if node == g:
            return g_val
        for dx, dy in _STRAIGHT:
            jx, jy = ix + dx, iy + dy
            if not grid.in_bounds(jx, jy) or occ[jy, jx]:
                continue
            cand = (ns + 1, nd)
            cand_val = cell * cand[0] + cell * SQRT2 * cand[1]
            if cand_val < best.get((jx, jy), math.inf) - 1e-12:
                best[(jx, jy)] = cand_val
                counts[(jx, jy)] = cand
                tie += 1
                heapq.heappush(heap, (cand_val + heuristic(jx, jy), tie, (jx, jy)))
        for dx, dy in _DIAGONAL:
            jx, jy = ix + dx, iy + dy
            if not grid.in_bounds(jx, jy) or occ[jy, jx]:
                continue
            # No corner cutting past occupied orthogonal neighbours.
            if occ[iy, ix + dx] or occ[iy + dy, ix]:
                continue
            cand = (ns, nd + 1)
            cand_val = cell * cand[0] + cell * SQRT2 * cand[1]
            if cand_val < best.get((jx, jy), math.inf) - 1e-12:
                best[(jx, jy)] = cand_val
                counts[(jx, jy)] = cand
                tie += 1
                heapq.heappush(heap, (cand_val + heuristic(jx, jy), tie, (jx, jy)))
    return math.inf


# --- capture mission ---------------------------------------------------------


def run_capture_mission(core, waypoints, out_dir, timeout_s: float = 60.0) -> dict:
    """Fly each waypoint, record pose-tagged rgb/depth/seg frames.

    Writes <out>/images/NNN_{rgb,seg}.png + NNN_depth.npy, <out>/poses.txt
    (name, position, quaternion w-first), and <out>/manifest.json.  A
    GoalReached timeout aborts with a partial dataset; the manifest records
    the completion state.
    """
    from PIL import Image as PilImage

    from .world import camera_world_pose, render_frames

    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    model = core.capture_camera
    pose_lines = []
    completed = 0
    status = "complete"

    for k, wp in enumerate(waypoints):
        goto_id = core.apply_goto(wp.position, wp.yaw)
        deadline = core.state.time + timeout_s
        reached = False
        while core.state.time < deadline:
            for ev in core.tick():
                if ev[0] == "goal_reached" and ev[1] == goto_id:
                    reached = True
            if reached:
                break
        if not reached:
            status = f"timeout at waypoint {k}"
            break
        # Settle on the terminal setpoint so the recorded pose is the
        # converged viewpoint, not the first moment inside the goal band.
        settle_until = (
            max(core.trajectory_end_time or core.state.time, core.state.time) + 0.5
        )
        while core.state.time < min(settle_until, deadline):
            core.tick()
        state = core.state
        cam_pose = camera_world_pose(state.position, state.orientation, model)
        depth, seg = render_frames(core.scene, cam_pose[0], cam_pose[1], model)
        rgb = core.scene.class_color_map()[seg]
        stem = f"{k:03d}"
        PilImage.fromarray(rgb, mode="RGB").save(out / "images" / f"{stem}_rgb.png")
        np.save(out / "images" / f"{stem}_depth.npy", depth)
        PilImage.fromarray(seg).save(out / "images" / f"{stem}_seg.png")  # 16-bit
        nums = [float(v) for v in (*state.position, *state.orientation)]
        pose_lines.append(f"{stem}_rgb.png " + " ".join(repr(v) for v in nums))
        completed += 1

    (out / "poses.txt").write_text("\n".join(pose_lines) + ("\n" if pose_lines else ""))
    manifest = {
        "waypoint_count": len(waypoints),
        "completed": completed,
        "status": status,
        "camera": {
            "width": model.width,
            "height": model.height,
            "fx": model.fx,
            "fy": model.fy,
            "cx": model.cx,
            "cy": model.cy,
            "max_depth": model.max_depth,
        },
        "pose_format": "name x y z qw qx qy qz",
        "image_formats": {"rgb": "png", "depth": "npy-float32", "seg": "png-uint16"},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    return manifest

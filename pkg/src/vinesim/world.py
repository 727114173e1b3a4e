"""Procedural scenes, raycast cameras, and collision/clearance queries.

Scenes are collections of analytic primitives (sphere, vertical cylinder,
ellipsoid, box) over a ground plane, each tagged with a semantic class.
Analytic ray intersections make every depth value exactly verifiable.

Conventions: Z-up world; depth images store Z-depth (distance along the
camera forward axis, the quantity a Z-buffer yields) as float32 with +inf
for no-hit; segmentation images store u16 class ids with 0 for no-hit.
The camera frame follows the optical convention (z forward, x right,
y down); the default mount looks along body +x.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .frames import quat_multiply, quat_rotate, quat_to_matrix

SHAPES = ("sphere", "vertical_cylinder", "ellipsoid", "box")

_DIM_COUNT = {"sphere": 1, "vertical_cylinder": 2, "ellipsoid": 3, "box": 3}

_EPS = 1e-9


class SceneError(ValueError):
    """Raised for malformed scene files or invariant violations."""


@dataclass
class SceneClass:
    id: int
    name: str
    color: tuple[int, int, int]


@dataclass
class SceneObject:
    shape: str
    center: np.ndarray
    dims: np.ndarray  # sphere: [r]; cylinder: [r, h]; ellipsoid: [a, b, c]; box: extents
    class_id: int
    class_name: str
    class_color: tuple[int, int, int]

    def bounding_radius(self) -> float:
        if self.shape == "sphere":
            return float(self.dims[0])
        if self.shape == "vertical_cylinder":
            return math.hypot(float(self.dims[0]), 0.5 * float(self.dims[1]))
        if self.shape == "ellipsoid":
            return float(np.max(self.dims))
        return 0.5 * float(np.linalg.norm(self.dims))


@dataclass
class Scene:
    objects: list[SceneObject]
    ground_z: float
    bounds_min: np.ndarray
    bounds_max: np.ndarray
    classes: list[SceneClass]
    ground_class_id: int = 1

    def class_color_map(self) -> np.ndarray:
        """(max_id+1, 3) uint8 lookup table; id 0 is background (black)."""
        top = max((c.id for c in self.classes), default=0)
        lut = np.zeros((top + 1, 3), dtype=np.uint8)
        for c in self.classes:
            lut[c.id] = c.color
        return lut

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(p >= self.bounds_min) and np.all(p <= self.bounds_max))


def _validate_scene(scene: Scene) -> Scene:
    names = {}
    ids = {}
    for c in scene.classes:
        if c.name in names or c.id in ids:
            raise SceneError(f"duplicate class {c.name!r} / id {c.id}")
        names[c.name] = c
        ids[c.id] = c
    for i, obj in enumerate(scene.objects):
        if obj.shape not in SHAPES:
            raise SceneError(f"object {i}: unknown shape {obj.shape!r}")
        if len(obj.dims) != _DIM_COUNT[obj.shape]:
            raise SceneError(
                f"object {i}: shape {obj.shape!r} needs "
                f"{_DIM_COUNT[obj.shape]} dimension value(s)"
            )
        if np.any(obj.dims <= 0.0):
            raise SceneError(f"object {i}: dimensions must be strictly positive")
        if not scene.contains(obj.center):
            raise SceneError(f"object {i}: center outside scene bounds")
    if np.any(scene.bounds_max <= scene.bounds_min):
        raise SceneError("scene bounds are empty")
    return scene


def load_scene(path) -> Scene:
    """Load a scene from the JSON schema; errors carry line/object context."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError(f"scene parse error at line {exc.lineno}: {exc.msg}") from exc
    try:
        classes = [
            SceneClass(int(c["id"]), str(c["name"]), tuple(int(v) for v in c["color"]))
            for c in doc["classes"]
        ]
        by_name = {c.name: c for c in classes}
        objects = []
        for i, o in enumerate(doc["objects"]):
            cls = by_name.get(str(o["class"]))
            if cls is None:
                raise SceneError(f"object {i}: unknown class {o['class']!r}")
            objects.append(
                SceneObject(
                    shape=str(o["shape"]),
                    center=np.asarray(o["center"], dtype=float),
                    dims=np.asarray(o["dims"], dtype=float),
                    class_id=cls.id,
                    class_name=cls.name,
                    class_color=cls.color,
                )
            )
        bounds = doc["bounds"]
        ground_class = doc.get("ground_class")
        if ground_class is not None:
            if ground_class not in by_name:
                raise SceneError(f"unknown ground_class {ground_class!r}")
            ground_class_id = by_name[ground_class].id
        else:
            ground_class_id = by_name["ground"].id if "ground" in by_name else 1
        scene = Scene(
            objects=objects,
            ground_z=float(doc["ground_z"]),
            bounds_min=np.asarray(bounds["min"], dtype=float),
            bounds_max=np.asarray(bounds["max"], dtype=float),
            classes=classes,
            ground_class_id=ground_class_id,
        )
    except (KeyError, TypeError) as exc:
        raise SceneError(f"scene schema error: {exc!r}") from exc
    return _validate_scene(scene)


def save_scene(scene: Scene, path) -> None:
    by_id = {c.id: c for c in scene.classes}
    doc = {
        "ground_z": scene.ground_z,
        "bounds": {
            "min": scene.bounds_min.tolist(),
            "max": scene.bounds_max.tolist(),
        },
        "classes": [
            {"id": c.id, "name": c.name, "color": list(c.color)} for c in scene.classes
        ],
        "objects": [
            {
                "shape": o.shape,
                "center": o.center.tolist(),
                "dims": o.dims.tolist(),
                "class": o.class_name,
            }
            for o in scene.objects
        ],
    }
    if scene.ground_class_id in by_id:
        doc["ground_class"] = by_id[scene.ground_class_id].name
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


DEFAULT_CLASSES = [
    SceneClass(1, "ground", (105, 90, 60)),
    SceneClass(2, "trunk", (110, 70, 40)),
    SceneClass(3, "canopy", (45, 140, 55)),
]

TRUNK_RADIUS = 0.10
TRUNK_HEIGHT = 1.6
CANOPY_SEMI_XY = 0.6
CANOPY_SEMI_Z = 0.9


def generate_vineyard(
    rows: int,
    trees_per_row: int,
    row_spacing: float,
    tree_spacing: float,
    seed: int,
) -> Scene:
    """Deterministic vineyard: rows along +x, separated along +y.

    Each plant is a trunk cylinder plus an ellipsoid canopy.  Plants jitter
    along the row (<= 10% of tree_spacing) and canopy sizes jitter by
    <= 10%, so corridors between rows keep their nominal clear width:
    row_spacing - 2 * (largest canopy y semi-axis).
    """
    if rows < 1 or trees_per_row < 1:
        raise ValueError("rows and trees_per_row must be >= 1")
    if row_spacing <= 0.0 or tree_spacing <= 0.0:
        raise ValueError("spacings must be positive")
    rng = np.random.default_rng(seed)
    classes = list(DEFAULT_CLASSES)
    by_name = {c.name: c for c in classes}
    objects = []
    for r in range(rows):
        for k in range(trees_per_row):
            x = k * tree_spacing + rng.uniform(-0.1, 0.1) * tree_spacing
            y = r * row_spacing
            size = 1.0 + rng.uniform(-0.1, 0.1)
            trunk_h = TRUNK_HEIGHT * size
            canopy = np.array([CANOPY_SEMI_XY, CANOPY_SEMI_XY, CANOPY_SEMI_Z]) * size
            objects.append(
                SceneObject(
                    "vertical_cylinder",
                    np.array([x, y, 0.5 * trunk_h]),
                    np.array([TRUNK_RADIUS * size, trunk_h]),
                    by_name["trunk"].id,
                    "trunk",
                    by_name["trunk"].color,
                )
            )
            objects.append(
                SceneObject(
                    "ellipsoid",
                    np.array([x, y, trunk_h + 0.35 * canopy[2]]),
                    canopy,
                    by_name["canopy"].id,
                    "canopy",
                    by_name["canopy"].color,
                )
            )
    margin = 2.0 + 2.0 * max(row_spacing, tree_spacing)
    bounds_min = np.array([-margin, -margin, 0.0])
    bounds_max = np.array(
        [
            (trees_per_row - 1) * tree_spacing + margin,
            (rows - 1) * row_spacing + margin,
            8.0,
        ]
    )
    return _validate_scene(
        Scene(objects, 0.0, bounds_min, bounds_max, classes, by_name["ground"].id)
    )


def single_tree_scene(half_extent: float = 12.0) -> Scene:
    """One plant at the origin inside a square arena (capture missions)."""
    classes = list(DEFAULT_CLASSES)
    by_name = {c.name: c for c in classes}
    trunk = SceneObject(
        "vertical_cylinder",
        np.array([0.0, 0.0, 0.5 * TRUNK_HEIGHT]),
        np.array([TRUNK_RADIUS, TRUNK_HEIGHT]),
        by_name["trunk"].id,
        "trunk",
        by_name["trunk"].color,
    )
    canopy = SceneObject(
        "ellipsoid",
        np.array([0.0, 0.0, TRUNK_HEIGHT + 0.35 * CANOPY_SEMI_Z]),
        np.array([CANOPY_SEMI_XY, CANOPY_SEMI_XY, CANOPY_SEMI_Z]),
        by_name["canopy"].id,
        "canopy",
        by_name["canopy"].color,
    )
    b = half_extent
    return _validate_scene(
        Scene(
            [trunk, canopy],
            0.0,
            np.array([-b, -b, 0.0]),
            np.array([b, b, 8.0]),
            classes,
            by_name["ground"].id,
        )
    )


def empty_scene(half_extent: float = 50.0) -> Scene:
    classes = list(DEFAULT_CLASSES)
    b = half_extent
    return Scene(
        [], 0.0, np.array([-b, -b, 0.0]), np.array([b, b, 20.0]), classes, 1
    )


# --- ray intersection (batched over rays, one object at a time) -----------


def _ray_ts_sphere(origin, dirs, center, radius) -> np.ndarray:
    oc = origin - center
    b = dirs @ oc
    c0 = float(oc @ oc) - radius * radius
    disc = b * b - c0
    t = np.full(dirs.shape[0], np.inf)
    hit = disc >= 0.0
    if not np.any(hit):
        return t
    sq = np.sqrt(np.maximum(disc, 0.0))
    t1 = -b - sq
    t2 = -b + sq
    t = np.where(hit & (t1 > _EPS), t1, np.where(hit & (t2 > _EPS), t2, np.inf))
    return t


def _ray_ts_ellipsoid(origin, dirs, center, semi) -> np.ndarray:
    oc = (origin - center) / semi
    d = dirs / semi
    a = np.einsum("ij,ij->i", d, d)
    b = d @ oc
    c0 = float(oc @ oc) - 1.0
    disc = b * b - a * c0
    t = np.full(dirs.shape[0], np.inf)
    hit = disc >= 0.0
    if not np.any(hit):
        return t
    sq = np.sqrt(np.maximum(disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (-b - sq) / a
        t2 = (-b + sq) / a
    t = np.where(hit & (t1 > _EPS), t1, np.where(hit & (t2 > _EPS), t2, np.inf))
    return t


def _ray_ts_cylinder(origin, dirs, center, radius, height) -> np.ndarray:
    ox, oy, oz = origin - center
    z_half = 0.5 * height
    dx, dy, dz = dirs[:, 0], dirs[:, 1], dirs[:, 2]
    best = np.full(dirs.shape[0], np.inf)

    a = dx * dx + dy * dy
    b = ox * dx + oy * dy
    c0 = ox * ox + oy * oy - radius * radius
    disc = b * b - a * c0
    lateral_ok = (disc >= 0.0) & (a > 1e-18)
    sq = np.sqrt(np.maximum(disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        for sign in (-1.0, 1.0):
            t = (-b + sign * sq) / a
            z = oz + t * dz
            ok = lateral_ok & (t > _EPS) & (np.abs(z) <= z_half)
            best = np.where(ok & (t < best), t, best)

        for cap_z in (-z_half, z_half):
            t = (cap_z - oz) / dz
            px = ox + t * dx
            py = oy + t * dy
            ok = (np.abs(dz) > 1e-18) & (t > _EPS) & (px * px + py * py <= radius * radius)
            best = np.where(ok & (t < best), t, best)
    return best


def _ray_ts_box(origin, dirs, center, extents) -> np.ndarray:
    half = 0.5 * extents
    lo = center - half
    hi = center + half
    n = dirs.shape[0]
    tmin = np.full(n, -np.inf)
    tmax = np.full(n, np.inf)
    for ax in range(3):
        d = dirs[:, ax]
        o = origin[ax]
        degenerate = np.abs(d) < 1e-18
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (lo[ax] - o) / d
            t2 = (hi[ax] - o) / d
        near = np.minimum(t1, t2)
        far = np.maximum(t1, t2)
        inside = (o >= lo[ax]) & (o <= hi[ax])
        near = np.where(degenerate, np.where(inside, -np.inf, np.inf), near)
        far = np.where(degenerate, np.where(inside, np.inf, -np.inf), far)
        tmin = np.maximum(tmin, near)
        tmax = np.minimum(tmax, far)
    hit = tmax >= np.maximum(tmin, _EPS)
    t = np.where(tmin > _EPS, tmin, tmax)
    return np.where(hit & (t > _EPS), t, np.inf)


_RAY_FNS = {
    "sphere": lambda o, d, obj: _ray_ts_sphere(o, d, obj.center, float(obj.dims[0])),
    "ellipsoid": lambda o, d, obj: _ray_ts_ellipsoid(o, d, obj.center, obj.dims),
    "vertical_cylinder": lambda o, d, obj: _ray_ts_cylinder(
        o, d, obj.center, float(obj.dims[0]), float(obj.dims[1])
    ),
    "box": lambda o, d, obj: _ray_ts_box(o, d, obj.center, obj.dims),
}


def _raycast_batch(scene: Scene, origin, dirs, object_indices=None):
    """Nearest hit over selected objects + ground; ties keep the lower index.

    Returns (t, class_id) arrays; t is +inf and class 0 for no-hit.
    """
    origin = np.asarray(origin, dtype=float)
    dirs = np.asarray(dirs, dtype=float)
    n = dirs.shape[0]
    best_t = np.full(n, np.inf)
    best_cls = np.zeros(n, dtype=np.uint16)
    indices = range(len(scene.objects)) if object_indices is None else object_indices
    for i in indices:
        obj = scene.objects[i]
        t = _RAY_FNS[obj.shape](origin, dirs, obj)
        closer = t < best_t
        if np.any(closer):
            best_t = np.where(closer, t, best_t)
            best_cls = np.where(closer, np.uint16(obj.class_id), best_cls)
    # Ground plane last: objects win exact ties.
    dz = dirs[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        tg = (scene.ground_z - origin[2]) / dz
    ok = (np.abs(dz) > 1e-18) & (tg > _EPS) & (tg < best_t)
    best_t = np.where(ok, tg, best_t)
    best_cls = np.where(ok, np.uint16(scene.ground_class_id), best_cls)
    return best_t, best_cls


def raycast(scene: Scene, origin, direction) -> tuple[float, int]:
    """Nearest positive intersection; (+inf, 0) for no-hit."""
    direction = np.asarray(direction, dtype=float)
    n = float(np.linalg.norm(direction))
    if abs(n - 1.0) > 1e-6:
        raise ValueError("ray direction must be unit-norm within 1e-6")
    t, cls = _raycast_batch(scene, origin, direction[None, :])
    return float(t[0]), int(cls[0])


# --- cameras ----------------------------------------------------------------


@dataclass(frozen=True)
class CameraModel:
    width: int = 320
    height: int = 240
    horizontal_fov: float = math.pi / 2
    max_depth: float = 30.0
    body_to_camera_pos: tuple[float, float, float] = (0.1, 0.0, 0.0)
    # Optical frame (z forward, x right, y down) looking along body +x.
    body_to_camera_quat: tuple[float, float, float, float] = (0.5, -0.5, 0.5, -0.5)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("camera resolution must be positive")
        if not 0.0 < self.horizontal_fov < math.pi:
            raise ValueError("horizontal_fov must be in (0, pi)")
        if self.max_depth <= 0.0:
            raise ValueError("max_depth must be positive")

    @property
    def fx(self) -> float:
        return (self.width / 2.0) / math.tan(self.horizontal_fov / 2.0)

    @property
    def fy(self) -> float:
        return self.fx

    @property
    def cx(self) -> float:
        return self.width / 2.0

    @property
    def cy(self) -> float:
        return self.height / 2.0


@lru_cache(maxsize=8)
def _pixel_ray_table(width, height, fov):
    """Unnormalised camera-frame ray directions and inverse norms, row-major."""
    fx = (width / 2.0) / math.tan(fov / 2.0)
    cx, cy = width / 2.0, height / 2.0
    us = (np.arange(width) + 0.5 - cx) / fx
    vs = (np.arange(height) + 0.5 - cy) / fx
    uu, vv = np.meshgrid(us, vs)
    raw = np.stack([uu.ravel(), vv.ravel(), np.ones(uu.size)], axis=1)
    inv_norm = 1.0 / np.linalg.norm(raw, axis=1)
    return raw, inv_norm


_TILE = 16


@lru_cache(maxsize=8)
def _tile_table(width, height, fov):
    """Per-tile pixel index blocks and view cones (axis + max half-angle).

    Rays are grouped into 16x16-pixel tiles; an object only needs testing
    against the pixels of tiles whose cone intersects its bounding sphere,
    so per-frame work scales with projected area instead of rays x objects.
    """
    raw, inv_norm = _pixel_ray_table(width, height, fov)
    dirs = raw * inv_norm[:, None]
    idx = np.arange(width * height).reshape(height, width)
    tiles = []
    axes = []
    cos_half = []
    for y0 in range(0, height, _TILE):
        for x0 in range(0, width, _TILE):
            block = idx[y0 : y0 + _TILE, x0 : x0 + _TILE].ravel()
            d = dirs[block]
            axis = d.mean(axis=0)
            axis /= np.linalg.norm(axis)
            cmin = float(np.min(d @ axis))
            tiles.append(block)
            axes.append(axis)
            cos_half.append(min(1.0, cmin))
    return tiles, np.stack(axes), np.arccos(np.clip(cos_half, -1.0, 1.0)) + 1e-9


def camera_world_pose(body_pos, body_quat, model: CameraModel):
    """Compose the body pose with the camera mount; returns (pos, quat)."""
    offset = quat_rotate(body_quat, np.asarray(model.body_to_camera_pos))
    pos = np.asarray(body_pos, dtype=float) + offset
    quat = quat_multiply(body_quat, np.asarray(model.body_to_camera_quat))
    return pos, quat


def _visible_object_indices(scene, cam_pos, rot_cw, model):
    """Conservative frustum cull on bounding spheres; exact-safe."""
    if not scene.objects:
        return []
    centers = np.stack([o.center for o in scene.objects])
    radii = np.array([o.bounding_radius() for o in scene.objects])
    local = (centers - cam_pos) @ rot_cw  # camera-frame coordinates
    keep = local[:, 2] > -radii  # not entirely behind the image plane
    keep &= local[:, 2] - radii <= model.max_depth  # Z-depth could be in range
    # Side planes with one-pixel slack.
    ax = math.atan2(model.cx + 1.0, model.fx)
    ay = math.atan2(model.cy + 1.0, model.fy)
    for nrm in (
        (math.cos(ax), 0.0, math.sin(ax)),
        (-math.cos(ax), 0.0, math.sin(ax)),
        (0.0, math.cos(ay), math.sin(ay)),
        (0.0, -math.cos(ay), math.sin(ay)),
    ):
        keep &= local @ np.asarray(nrm) > -radii
    return np.nonzero(keep)[0].tolist()


def render_frames(scene: Scene, camera_pos, camera_quat, model: CameraModel):
    """Raycast one frame; returns (depth float32 (h, w), seg uint16 (h, w))."""
    raw, inv_norm = _pixel_ray_table(model.width, model.height, model.horizontal_fov)
    tiles, tile_axes, tile_half = _tile_table(
        model.width, model.height, model.horizontal_fov
    )
    rot = quat_to_matrix(camera_quat)
    dirs = (raw * inv_norm[:, None]) @ rot.T
    cam_pos = np.asarray(camera_pos, dtype=float)

    n = dirs.shape[0]
    best_t = np.full(n, np.inf)
    best_cls = np.zeros(n, dtype=np.uint16)
    for i in _visible_object_indices(scene, cam_pos, rot, model):
        obj = scene.objects[i]
        center_cam = rot.T @ (obj.center - cam_pos)
        dist = float(np.linalg.norm(center_cam))
        rb = obj.bounding_radius()
        if dist <= rb:
            sel = slice(None)  # camera inside the bounding sphere
        else:
            axis = center_cam / dist
            theta_obj = math.asin(min(1.0, rb / dist))
            ang = np.arccos(np.clip(tile_axes @ axis, -1.0, 1.0))
            hit_tiles = np.nonzero(ang <= tile_half + theta_obj)[0]
            if hit_tiles.size == 0:
                continue
            if hit_tiles.size == len(tiles):
                sel = slice(None)
            else:
                sel = np.concatenate([tiles[k] for k in hit_tiles])
        t = _RAY_FNS[obj.shape](cam_pos, dirs[sel], obj)
        closer = t < best_t[sel]
        if np.any(closer):
            if isinstance(sel, slice):
                best_t = np.where(closer, t, best_t)
                best_cls = np.where(closer, np.uint16(obj.class_id), best_cls)
            else:
                upd = sel[closer]
                best_t[upd] = t[closer]
                best_cls[upd] = obj.class_id

    dz = dirs[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        tg = (scene.ground_z - cam_pos[2]) / dz
    ok = (np.abs(dz) > 1e-18) & (tg > _EPS) & (tg < best_t)
    best_t = np.where(ok, tg, best_t)
    best_cls = np.where(ok, np.uint16(scene.ground_class_id), best_cls)

    zdepth = best_t * inv_norm
    in_range = zdepth <= model.max_depth
    depth = np.where(in_range, zdepth, np.inf).astype(np.float32)
    seg = np.where(in_range, best_cls, 0).astype(np.uint16)
    return depth.reshape(model.height, model.width), seg.reshape(
        model.height, model.width
    )


def render_depth(scene, camera_pose, model: CameraModel) -> np.ndarray:
    pos, quat = camera_pose
    return render_frames(scene, pos, quat, model)[0]


def render_segmentation(scene, camera_pose, model: CameraModel) -> np.ndarray:
    pos, quat = camera_pose
    return render_frames(scene, pos, quat, model)[1]


def render_rgb(scene, camera_pose, model: CameraModel) -> np.ndarray:
    """Flat class-colour shading from the segmentation raycast, (h, w, 3) u8."""
    seg = render_segmentation(scene, camera_pose, model)
    return scene.class_color_map()[seg]


# --- distance and collision queries ----------------------------------------


def _sd_sphere(p, center, r) -> float:
    return float(np.linalg.norm(p - center)) - r


def _sd_cylinder(p, center, r, h) -> float:
    d = p - center
    q_r = math.hypot(d[0], d[1]) - r
    q_z = abs(d[2]) - 0.5 * h
    outside = math.hypot(max(q_r, 0.0), max(q_z, 0.0))
    inside = min(max(q_r, q_z), 0.0)
    return outside + inside


def _sd_box(p, center, extents) -> float:
    q = np.abs(p - center) - 0.5 * extents
    outside = float(np.linalg.norm(np.maximum(q, 0.0)))
    inside = min(float(np.max(q)), 0.0)
    return outside + inside


def _ellipsoid_nearest_distance(p, semi) -> float:
    """Unsigned distance from |p| (component-wise) to the ellipsoid surface.

    Largest-root formulation: the closest surface point is
    x_i = a_i^2 p_i / (t + a_i^2) with t the largest root of
    sum (a_i p_i)^2 / (t + a_i^2)^2 = 1.  Axes with p_i = 0 admit off-axis
    candidates at t = -a_j^2, handled explicitly.
    """
    a = np.asarray(semi, dtype=float)
    q = np.abs(np.asarray(p, dtype=float))
    active = q > 1e-14
    if not np.any(active):
        return float(np.min(a))

    aq = a[active] * q[active]
    a2 = a[active] ** 2
    lo = -float(np.min(a2))

    def g(t):
        return float(np.sum((aq / (t + a2)) ** 2))

    # Largest root of g(t) = 1 lies in (lo, hi]; g is decreasing there.
    hi = float(np.linalg.norm(aq)) + 1e-9
    while g(hi) > 1.0:
        hi = lo + 2.0 * (hi - lo)
    lo_b = lo + 1e-15 * max(1.0, -lo)
    for _ in range(200):
        mid = 0.5 * (lo_b + hi)
        if g(mid) > 1.0:
            lo_b = mid
        else:
            hi = mid
        if hi - lo_b < 1e-14 * max(1.0, abs(hi)):
            break
    t_root = 0.5 * (lo_b + hi)
    x_act = a2 * q[active] / (t_root + a2)
    best = math.sqrt(float(np.sum((x_act - q[active]) ** 2)))

    # Off-axis candidates for inactive axes (x_j != 0 while p_j = 0).
    inactive_a = np.unique(a[~active]) if np.any(~active) else []
    for aj in inactive_a:
        t = -aj * aj
        denom = a2 + t
        if np.any(denom <= 1e-12):
            continue
        x_i = a2 * q[active] / denom
        s = float(np.sum((x_i / a[active]) ** 2))
        if s < 1.0:
            d2 = float(np.sum((x_i - q[active]) ** 2)) + aj * aj * (1.0 - s)
            best = min(best, math.sqrt(d2))
    return best


def _sd_ellipsoid(p, center, semi) -> float:
    rel = np.asarray(p, dtype=float) - center
    d = _ellipsoid_nearest_distance(rel, semi)
    inside = float(np.sum((rel / semi) ** 2)) < 1.0
    return -d if inside else d


def signed_distance(obj: SceneObject, point) -> float:
    """Exact signed distance to the object surface (negative inside)."""
    p = np.asarray(point, dtype=float)
    if obj.shape == "sphere":
        return _sd_sphere(p, obj.center, float(obj.dims[0]))
    if obj.shape == "vertical_cylinder":
        return _sd_cylinder(p, obj.center, float(obj.dims[0]), float(obj.dims[1]))
    if obj.shape == "box":
        return _sd_box(p, obj.center, obj.dims)
    return _sd_ellipsoid(p, obj.center, obj.dims)


def min_distance_to_scene(scene: Scene, point) -> float:
    """Minimum signed distance over all objects; ground excluded; +inf if empty."""
    p = np.asarray(point, dtype=float)
    best = np.inf
    for obj in scene.objects:
        # Cheap bounding-sphere lower bound before the exact query.
        lower = float(np.linalg.norm(p - obj.center)) - obj.bounding_radius()
        if lower >= best:
            continue
        best = min(best, signed_distance(obj, p))
    return best


def _overlaps_sphere(p, radius, obj: SceneObject) -> bool:
    """Direct sphere-vs-primitive overlap predicate (closest-point form)."""
    d = p - obj.center
    if obj.shape == "sphere":
        return float(np.linalg.norm(d)) - float(obj.dims[0]) < radius
    if obj.shape == "vertical_cylinder":
        q_r = max(math.hypot(d[0], d[1]) - float(obj.dims[0]), 0.0)
        q_z = max(abs(d[2]) - 0.5 * float(obj.dims[1]), 0.0)
        return math.hypot(q_r, q_z) < radius
    if obj.shape == "box":
        q = np.maximum(np.abs(d) - 0.5 * obj.dims, 0.0)
        return float(np.linalg.norm(q)) < radius
    # Ellipsoids have no simple closest-point form; use the exact distance.
    return _sd_ellipsoid(p, obj.center, obj.dims) < radius


def check_collision(scene: Scene, position, radius: float):
    """Does a sphere at position intersect any object or the ground?

    Returns (bool, class_id-or-None); first colliding class in object order,
    ground checked last.
    """
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    p = np.asarray(position, dtype=float)
    for obj in scene.objects:
        lower = float(np.linalg.norm(p - obj.center)) - obj.bounding_radius()
        if lower >= radius:
            continue
        if _overlaps_sphere(p, radius, obj):
            return True, obj.class_id
    if p[2] - scene.ground_z < radius:
        return True, scene.ground_class_id
    return False, None

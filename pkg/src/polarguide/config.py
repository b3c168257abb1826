"""Structured-text (YAML) configuration schemas for scenes and backbones.

Schema violations raise ConfigError carrying the dotted path of the
offending key. Loaders also return the parsed raw mapping so run manifests
can hash the exact configuration.
"""

from __future__ import annotations

import os

import numpy as np
import yaml

from .camera import CameraModel
from .exceptions import ConfigError
from .synth import (
    BumpySphereGeometry,
    CorruptionSpec,
    PlaneGeometry,
    SceneSpec,
    Shading,
    SpecularBand,
    SpecularLobe,
    SphereGeometry,
)


def _require(mapping, key, path, types=None):
    if not isinstance(mapping, dict) or key not in mapping:
        raise ConfigError(f"missing required key '{key}'", path)
    value = mapping[key]
    if types is not None and not isinstance(value, types):
        raise ConfigError(
            f"expected {getattr(types, '__name__', types)}, got {type(value).__name__}",
            f"{path}.{key}" if path else key,
        )
    return value


def _number(mapping, key, path, default=None):
    if key not in mapping:
        if default is None:
            raise ConfigError(f"missing required key '{key}'", path)
        return default
    value = mapping[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError("expected a number", f"{path}.{key}" if path else key)
    return float(value)


def parse_camera(node, path="camera") -> CameraModel:
    if node is None:
        return CameraModel.orthographic()
    kind = _require(node, "kind", path, str)
    if kind == "orthographic":
        return CameraModel.orthographic()
    if kind == "perspective":
        fov = _number(node, "fov_deg", path)
        width = int(_number(node, "width", path))
        height = int(_number(node, "height", path))
        cx = node.get("c_x")
        cy = node.get("c_y")
        return CameraModel.perspective(fov, width, height, c_x=cx, c_y=cy)
    raise ConfigError(f"unknown camera kind {kind!r}", f"{path}.kind")


def parse_camera_flag(value: str, width: int, height: int) -> CameraModel:
    """Parse the CLI camera flag: 'ortho' or 'fov:<degrees>'."""
    if value == "ortho":
        return CameraModel.orthographic()
    if value.startswith("fov:"):
        try:
            fov = float(value[4:])
        except ValueError as exc:
            raise ConfigError(f"bad field of view in {value!r}", "camera") from exc
        return CameraModel.perspective(fov, width, height)
    raise ConfigError(f"camera must be 'ortho' or 'fov:<deg>', got {value!r}", "camera")


def _parse_geometry(node, path):
    kind = _require(node, "kind", path, str)
    center = node.get("center")
    if center is not None:
        if not (isinstance(center, list) and len(center) == 2):
            raise ConfigError("center must be [row, col]", f"{path}.center")
        center = (float(center[0]), float(center[1]))
    if kind == "sphere":
        return SphereGeometry(radius=_number(node, "radius", path), center=center)
    if kind == "plane":
        return PlaneGeometry(tilt_deg=_number(node, "tilt_deg", path))
    if kind == "bumpy_sphere":
        return BumpySphereGeometry(
            radius=_number(node, "radius", path),
            bump_amplitude=_number(node, "bump_amplitude", path, 0.15),
            bump_frequency=_number(node, "bump_frequency", path, 4.0),
            seed=int(_number(node, "seed", path, 0.0)),
            center=center,
        )
    raise ConfigError(f"unknown geometry kind {kind!r}", f"{path}.kind")


def _parse_specular(node, path):
    if node is None:
        return None
    kind = _require(node, "kind", path, str)
    if kind == "none":
        return None
    if kind == "lobe":
        center = _require(node, "center", path, list)
        return SpecularLobe(
            center=(float(center[0]), float(center[1])),
            width=_number(node, "width", path),
            peak=_number(node, "peak", path),
        )
    if kind == "band":
        return SpecularBand(
            center_row=_number(node, "center_row", path),
            width=_number(node, "width", path),
            peak=_number(node, "peak", path),
        )
    raise ConfigError(f"unknown specular kind {kind!r}", f"{path}.kind")


def parse_scene(doc: dict) -> tuple[SceneSpec, int]:
    """Build a SceneSpec from a parsed scene document; returns (spec, seed)."""
    scene = _require(doc, "scene", "", dict)
    size = _require(scene, "size", "scene", dict)
    height = int(_number(size, "height", "scene.size"))
    width = int(_number(size, "width", "scene.size"))
    channels = int(_number(size, "channels", "scene.size", 3.0))
    if channels not in (1, 3):
        raise ConfigError("channels must be 1 or 3", "scene.size.channels")
    geometry = _parse_geometry(_require(scene, "geometry", "scene", dict), "scene.geometry")

    shading_node = scene.get("shading", {}) or {}
    defaults = Shading()
    light = shading_node.get("light", list(defaults.light))
    albedo = shading_node.get("albedo", list(defaults.albedo[:channels]))
    if not (isinstance(albedo, list) and len(albedo) == channels):
        raise ConfigError(f"albedo must list {channels} values", "scene.shading.albedo")
    shading = Shading(
        light=tuple(float(v) for v in light),
        albedo=tuple(float(v) for v in albedo),
        ambient=_number(shading_node, "ambient", "scene.shading", defaults.ambient),
        diffuse_scale=_number(
            shading_node, "diffuse_scale", "scene.shading", defaults.diffuse_scale
        ),
    )
    spec = SceneSpec(
        geometry=geometry,
        height=height,
        width=width,
        channels=channels,
        shading=shading,
        specular=_parse_specular(scene.get("specular"), "scene.specular"),
        camera=parse_camera(scene.get("camera"), "scene.camera"),
        eta=_number(scene, "eta", "scene", 1.5),
    )
    seed = int(_number(doc, "seed", "", 0.0))
    return spec, seed


def load_scene_config(path) -> tuple[SceneSpec, int, dict]:
    doc = load_yaml(path)
    spec, seed = parse_scene(doc)
    return spec, seed, doc


def load_yaml(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = yaml.safe_load(f)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: document root must be a mapping")
    return doc


def parse_corruption(node, path="corruption") -> CorruptionSpec | None:
    if node is None:
        return None
    variant = _require(node, "variant", path, str)
    if variant == "composite":
        parts = _require(node, "parts", path, list)
        return CorruptionSpec(
            variant="composite",
            parts=tuple(parse_corruption(p, f"{path}.parts[{i}]") for i, p in enumerate(parts)),
        )
    return CorruptionSpec(
        variant=variant,
        sigma=_number(node, "sigma", path, 0.0),
        sigma_deg=_number(node, "sigma_deg", path, 0.0),
        seed=int(_number(node, "seed", path, 0.0)),
    )


def parse_mixing(node, path="mixing") -> np.ndarray | None:
    if node is None:
        return None
    arr = np.asarray(node, dtype=np.float64)
    if arr.shape != (3, 3):
        raise ConfigError("mixing must be a 3x3 matrix", path)
    return arr


def resolve_path(base_file, relative) -> str:
    """Resolve a path in a config file relative to that file's directory."""
    if os.path.isabs(relative):
        return relative
    return os.path.join(os.path.dirname(os.path.abspath(base_file)), relative)

"""Command-line surface: scene synthesis, refinement, metrics and sweeps.

Every command writes its outputs into a directory together with a
``manifest.json`` recording the artifact version, a hash of the resolved
configuration and all seeds; identical manifests imply byte-identical
outputs. Float maps are stored as little-endian PFM, tables as CSV with a
header row, visualizations as PNG.

Exit codes: 0 success, 1 numeric failure, 2 I/O error, 3 configuration
error, 4 bridge failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import numpy as np

from . import __version__
from .analysis import (
    eta_sweep,
    material_sweep,
    noise_sweep,
    sensitivity_map,
    variant_ablation,
)
from .backbones import (
    BridgeBackbone,
    CorruptedOracleBackbone,
    LinearSmootherBackbone,
)
from .camera import view_field
from .config import (
    load_scene_config,
    load_yaml,
    parse_camera_flag,
    parse_corruption,
    parse_mixing,
    resolve_path,
)
from .decomposition import MetallicEdit, RecolorEdit, decompose, edit
from .exceptions import (
    BridgeError,
    ConfigError,
    EmptyMaskError,
    NumericError,
    PolarguideError,
)
from .fresnel import MaterialParams, render_stokes
from .guidance import GuidanceConfig, refine
from .metrics import angular_error_map, summarize
from .pfm import read_pfm, write_pfm
from .polarimetry import (
    IntensityCapture,
    StokesMap,
    ValidityMask,
    dolp_aolp,
    stokes_from_capture,
    validity_mask,
)
from .synth import generate
from .viz import aolp_dolp_image, error_image, normal_image, to_uint8

EXIT_NUMERIC = 1
EXIT_IO = 2
EXIT_CONFIG = 3
EXIT_BRIDGE = 4

CAPTURE_FILES = {
    "i000": "capture_i000.pfm",
    "i045": "capture_i045.pfm",
    "i090": "capture_i090.pfm",
    "i135": "capture_i135.pfm",
}
STOKES_FILES = ("stokes_s0.pfm", "stokes_s1.pfm", "stokes_s2.pfm")


def _config_hash(payload) -> str:
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _write_manifest(outdir, command, payload, seeds) -> None:
    manifest = {
        "artifact": "polarguide",
        "version": __version__,
        "command": command,
        "config_hash": _config_hash(payload),
        "config": payload,
        "seeds": seeds,
    }
    with open(os.path.join(outdir, "manifest.json"), "w", encoding="utf-8") as f:
        json.dump(manifest, f, sort_keys=True, indent=2)
        f.write("\n")


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return v


def _save_png(path, rgb_float) -> None:
    from PIL import Image

    Image.fromarray(to_uint8(rgb_float)).save(path, format="PNG")


def _write_stokes(outdir, s: StokesMap, prefix="stokes") -> None:
    write_pfm(os.path.join(outdir, f"{prefix}_s0.pfm"), s.s0)
    write_pfm(os.path.join(outdir, f"{prefix}_s1.pfm"), s.s1)
    write_pfm(os.path.join(outdir, f"{prefix}_s2.pfm"), s.s2)


def _read_stokes(indir, prefix="stokes") -> StokesMap:
    return StokesMap(
        s0=read_pfm(os.path.join(indir, f"{prefix}_s0.pfm")),
        s1=read_pfm(os.path.join(indir, f"{prefix}_s1.pfm")),
        s2=read_pfm(os.path.join(indir, f"{prefix}_s2.pfm")),
    )


def _load_observations(indir) -> StokesMap:
    """Load Stokes maps from a run directory, deriving them from the four
    angle captures when no stokes files are present."""
    if os.path.exists(os.path.join(indir, STOKES_FILES[0])):
        return _read_stokes(indir)
    capture = IntensityCapture(
        **{k: read_pfm(os.path.join(indir, v)) for k, v in CAPTURE_FILES.items()}
    )
    return stokes_from_capture(capture)


def _build_backbone(spec: str, shape, reference_image=None):
    """Instantiate a backbone from its CLI descriptor.

    Descriptors: 'smoother', 'smoother:<yaml>', 'oracle:<yaml>',
    'bridge:<command line>'.
    """
    h, w, c = shape
    if spec == "smoother":
        return LinearSmootherBackbone((h, w, c))
    kind, _, arg = spec.partition(":")
    if kind == "smoother":
        doc = load_yaml(arg)
        return LinearSmootherBackbone(
            (h, w, c),
            radius=int(doc.get("radius", 0)),
            mixing=parse_mixing(doc.get("mixing")),
        )
    if kind == "oracle":
        doc = load_yaml(arg)
        if "gt_normals" not in doc:
            raise ConfigError("oracle backbone needs gt_normals", "gt_normals")
        gt = read_pfm(resolve_path(arg, doc["gt_normals"]))
        coupling = doc.get("coupling", {}) or {}
        reference = doc.get("reference", "none")
        if reference == "from_input":
            ref = reference_image
        elif reference in (None, "none"):
            ref = None
        else:
            ref = read_pfm(resolve_path(arg, reference))
        return CorruptedOracleBackbone(
            gt,
            corruption=parse_corruption(doc.get("corruption")),
            gain=float(doc.get("gain", 0.0)),
            channels=c,
            seed=int(coupling.get("seed", 0)),
            density=float(coupling.get("density", 0.01)),
            reference=ref,
        )
    if kind == "bridge":
        if not arg:
            raise ConfigError("bridge backbone needs a command line", "backbone")
        return BridgeBackbone(arg)
    raise ConfigError(f"unknown backbone descriptor {spec!r}", "backbone")


def _guidance_config(args, height, width) -> GuidanceConfig:
    return GuidanceConfig(
        steps=args.steps,
        on_activation_step=args.activation_step,
        lr_ls=args.lr_ls,
        lr_ox=args.lr_ox,
        lr_on=args.lr_on,
        eta=args.eta,
        camera=parse_camera_flag(args.camera, width, height),
        seed=args.seed,
    )


def _add_guidance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eta", type=float, default=1.5, help="refractive index")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--activation-step", type=int, default=50, dest="activation_step")
    p.add_argument("--lr-ls", type=float, default=0.01, dest="lr_ls")
    p.add_argument("--lr-ox", type=float, default=1e-4, dest="lr_ox")
    p.add_argument("--lr-on", type=float, default=1e-3, dest="lr_on")
    p.add_argument("--camera", default="ortho", help="'ortho' or 'fov:<deg>'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=0, help="cap math threads (0 = leave as-is)")


def _apply_threads(n: int):
    if n <= 0:
        return None
    try:
        from threadpoolctl import threadpool_limits

        return threadpool_limits(limits=n)
    except ImportError:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(n)
        return None


def cmd_synth(args) -> int:
    spec, seed, doc = load_scene_config(args.scene)
    scene = generate(spec)
    os.makedirs(args.out, exist_ok=True)
    write_pfm(os.path.join(args.out, "gt_normals.pfm"), scene.gt_normals)
    # Quantize the captures to the on-disk precision first and derive the
    # stored Stokes maps from the quantized values, so recomputing Stokes
    # from the written captures reproduces the written Stokes bit-exactly.
    quantized = IntensityCapture(
        **{
            k: getattr(scene.capture, k).astype(np.float32).astype(np.float64)
            for k in CAPTURE_FILES
        }
    )
    for key, fname in CAPTURE_FILES.items():
        write_pfm(os.path.join(args.out, fname), getattr(quantized, key))
    disk_stokes = stokes_from_capture(quantized)
    _write_stokes(args.out, disk_stokes)
    write_pfm(
        os.path.join(args.out, "mask.pfm"),
        validity_mask(disk_stokes).m.astype(np.float64),
    )
    write_pfm(os.path.join(args.out, "ls_gt.pfm"), scene.l_s)
    _write_manifest(args.out, "synth", doc, {"scene": seed})
    return 0


def cmd_stokes(args) -> int:
    capture = IntensityCapture(
        **{k: read_pfm(os.path.join(args.indir, v)) for k, v in CAPTURE_FILES.items()}
    )
    s = stokes_from_capture(capture)
    pol = dolp_aolp(s)
    mask = validity_mask(s)
    os.makedirs(args.out, exist_ok=True)
    _write_stokes(args.out, s)
    write_pfm(os.path.join(args.out, "dolp.pfm"), pol.dolp)
    write_pfm(os.path.join(args.out, "aolp.pfm"), pol.aolp)
    write_pfm(os.path.join(args.out, "mask.pfm"), mask.m.astype(np.float64))
    _save_png(os.path.join(args.out, "polarization.png"), aolp_dolp_image(s))
    _write_manifest(args.out, "stokes", {"indir": os.path.abspath(args.indir)}, {})
    return 0


def _metrics_payload(pred, gt, mask: ValidityMask):
    err = angular_error_map(pred, gt, mask)
    return err, summarize(err, mask)


def cmd_refine(args) -> int:
    limiter = _apply_threads(args.threads)
    try:
        s_obs = _load_observations(args.indir)
        h, w, c = s_obs.shape
        backbone = _build_backbone(args.backbone, (h, w, c), reference_image=s_obs.s0)
        cfg = _guidance_config(args, h, w)
        gt = read_pfm(args.gt) if args.gt else None
        gt_path = args.gt
        if gt is None:
            candidate = os.path.join(args.indir, "gt_normals.pfm")
            if os.path.exists(candidate):
                gt = read_pfm(candidate)
                gt_path = candidate
        with backbone:
            result = refine(s_obs, backbone, cfg, gt=gt)

        os.makedirs(args.out, exist_ok=True)
        write_pfm(os.path.join(args.out, "refined_normals.pfm"), result.normals)
        write_pfm(os.path.join(args.out, "radiance_ld.pfm"), result.split.l_d)
        write_pfm(os.path.join(args.out, "radiance_ls.pfm"), result.split.l_s)
        vf = view_field(cfg.camera, h, w)
        pred = render_stokes(result.normals, result.split.l_s, s_obs.s0, vf,
                             MaterialParams(eta=cfg.eta))
        _write_stokes(args.out, pred, prefix="pred_stokes")
        _save_png(os.path.join(args.out, "refined_normals.png"), normal_image(result.normals))

        trace = result.trace
        if trace.mae_deg is not None:
            header = ["step", "loss", "mae_deg"]
            rows = list(zip(range(len(trace)), trace.loss, trace.mae_deg))
        else:
            header = ["step", "loss"]
            rows = list(zip(range(len(trace)), trace.loss))
        _write_csv(os.path.join(args.out, "trace.csv"), header, rows)

        if gt is not None:
            err, stats = _metrics_payload(result.normals, gt, result.mask)
            write_pfm(os.path.join(args.out, "error_map.pfm"), np.nan_to_num(err, nan=-1.0))
            _save_png(os.path.join(args.out, "error_map.png"), error_image(err, result.mask))
            with open(os.path.join(args.out, "metrics.json"), "w", encoding="utf-8") as f:
                json.dump(stats.as_dict(), f, sort_keys=True, indent=2)
                f.write("\n")

        payload = {
            "indir": os.path.abspath(args.indir),
            "backbone": args.backbone,
            "gt": os.path.abspath(gt_path) if gt_path else None,
            "guidance": {
                "steps": cfg.steps,
                "on_activation_step": cfg.on_activation_step,
                "lr_ls": cfg.lr_ls,
                "lr_ox": cfg.lr_ox,
                "lr_on": cfg.lr_on,
                "eta": cfg.eta,
                "camera": args.camera,
            },
            "threads": args.threads,
        }
        _write_manifest(args.out, "refine", payload, {"guidance": cfg.seed})
        return 0
    finally:
        if limiter is not None:
            limiter.unregister()


def cmd_metrics(args) -> int:
    pred = read_pfm(args.pred)
    gt = read_pfm(args.gt)
    if args.mask:
        mask = ValidityMask(read_pfm(args.mask)[:, :, 0] > 0.5)
    else:
        mask = ValidityMask(np.ones(pred.shape[:2], dtype=bool))
    err, stats = _metrics_payload(pred, gt, mask)
    os.makedirs(args.out, exist_ok=True)
    write_pfm(os.path.join(args.out, "error_map.pfm"), np.nan_to_num(err, nan=-1.0))
    _save_png(os.path.join(args.out, "error_map.png"), error_image(err, mask))
    with open(os.path.join(args.out, "metrics.json"), "w", encoding="utf-8") as f:
        json.dump(stats.as_dict(), f, sort_keys=True, indent=2)
        f.write("\n")
    _write_manifest(
        args.out,
        "metrics",
        {"pred": os.path.abspath(args.pred), "gt": os.path.abspath(args.gt)},
        {},
    )
    return 0


def cmd_jacobian(args) -> int:
    x = read_pfm(args.image)
    h, w, c = x.shape
    backbone = _build_backbone(args.backbone, (h, w, c), reference_image=x)
    try:
        pi, pj = (int(v) for v in args.pixel.split(","))
    except ValueError as exc:
        raise ConfigError(f"--pixel must be 'row,col', got {args.pixel!r}", "pixel") from exc
    with backbone:
        sens = sensitivity_map(backbone, x, (pi, pj), normalize_p99=args.normalize)
    os.makedirs(args.out, exist_ok=True)
    write_pfm(os.path.join(args.out, "sensitivity.pfm"), sens)
    peak = sens.max()
    _save_png(
        os.path.join(args.out, "sensitivity.png"),
        np.repeat((sens / peak if peak > 0 else sens)[:, :, np.newaxis], 3, axis=2),
    )
    _write_manifest(
        args.out,
        "jacobian",
        {"image": os.path.abspath(args.image), "backbone": args.backbone,
         "pixel": [pi, pj], "normalize": args.normalize},
        {},
    )
    return 0


def _plot_sweep(path, xs, series, xlabel, ylabel) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for label, ys in series.items():
        ax.plot(xs, ys, marker="o", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def cmd_sweep(args) -> int:
    limiter = _apply_threads(args.threads)
    try:
        spec, scene_seed, doc = load_scene_config(args.scene)
        scene = generate(spec)
        h, w, c = scene.stokes.shape
        cfg = _guidance_config(args, h, w)
        os.makedirs(args.out, exist_ok=True)

        if args.kind == "noise":
            backbone = _build_backbone(args.backbone, (h, w, c), reference_image=scene.stokes.s0)
            sigmas = [float(v) for v in args.sigmas.split(",")]
            with backbone:
                rows = noise_sweep(scene, backbone, cfg, sigmas, seed=args.seed)
            _write_csv(
                os.path.join(args.out, "noise_sweep.csv"),
                ["sigma", "mae_unguided", "mae_guided"],
                [(r.sigma, r.mae_unguided, r.mae_guided) for r in rows],
            )
            _plot_sweep(
                os.path.join(args.out, "noise_sweep.png"),
                [r.sigma for r in rows],
                {"unguided": [r.mae_unguided for r in rows],
                 "guided": [r.mae_guided for r in rows]},
                "noise sigma", "MAE (deg)",
            )
            payload_extra = {"sigmas": sigmas}
        elif args.kind == "eta":
            backbone = _build_backbone(args.backbone, (h, w, c), reference_image=scene.stokes.s0)
            etas = [float(v) for v in args.etas.split(",")]
            with backbone:
                rows = eta_sweep(scene, backbone, cfg, etas)
            _write_csv(
                os.path.join(args.out, "eta_sweep.csv"),
                ["eta", "mae_final", "loss_final"],
                [(r.eta, r.mae_final, r.loss_final) for r in rows],
            )
            _plot_sweep(
                os.path.join(args.out, "eta_sweep.png"),
                [r.eta for r in rows],
                {"refined": [r.mae_final for r in rows]},
                "refractive index", "MAE (deg)",
            )
            if len(rows) >= 3:
                maes = [r.mae_final for r in rows]
                if all(b >= a for a, b in zip(maes, maes[1:])):
                    trend = "monotone_increasing"
                elif all(b <= a for a, b in zip(maes, maes[1:])):
                    trend = "monotone_decreasing"
                else:
                    trend = "non_monotone"
                with open(os.path.join(args.out, "eta_monotonicity.txt"), "w",
                          encoding="utf-8") as f:
                    f.write(trend + "\n")
            payload_extra = {"etas": etas}
        elif args.kind == "ablation":
            backbone = _build_backbone(args.backbone, (h, w, c), reference_image=scene.stokes.s0)
            with backbone:
                rows = variant_ablation(scene, backbone, cfg)
            _write_csv(
                os.path.join(args.out, "ablation.csv"),
                ["variant", "mae_final", "loss_final"],
                [(r.variant, r.mae_final, r.loss_final) for r in rows],
            )
            payload_extra = {}
        elif args.kind == "material":
            corruption = parse_corruption(
                load_yaml(args.corruption) if args.corruption else None
            )
            rows = material_sweep(spec, cfg, corruption, gain=args.gain, coupling_seed=args.seed)
            _write_csv(
                os.path.join(args.out, "material_sweep.csv"),
                ["material", "mae_unguided", "mae_guided"],
                [(r.material, r.mae_unguided, r.mae_guided) for r in rows],
            )
            payload_extra = {"gain": args.gain}
        else:
            raise ConfigError(f"unknown sweep kind {args.kind!r}", "kind")

        payload = {
            "scene": doc,
            "backbone": args.backbone,
            "kind": args.kind,
            "guidance": {"steps": cfg.steps, "eta": cfg.eta, "camera": args.camera},
            **payload_extra,
        }
        _write_manifest(args.out, f"sweep-{args.kind}", payload,
                        {"scene": scene_seed, "sweep": args.seed})
        return 0
    finally:
        if limiter is not None:
            limiter.unregister()


def cmd_decompose(args) -> int:
    s_obs = _load_observations(args.indir)
    h, w, _ = s_obs.shape
    normals = read_pfm(args.normals)
    l_s = read_pfm(args.ls)
    vf = view_field(parse_camera_flag(args.camera, w, h), h, w)
    result = decompose(s_obs, normals, l_s, vf, MaterialParams(eta=args.eta))
    os.makedirs(args.out, exist_ok=True)
    write_pfm(os.path.join(args.out, "radiance_ld.pfm"), result.split.l_d)
    write_pfm(os.path.join(args.out, "radiance_ls.pfm"), result.split.l_s)
    _write_stokes(args.out, result.diffuse_stokes, prefix="diffuse_stokes")
    _write_stokes(args.out, result.specular_stokes, prefix="specular_stokes")
    _save_png(os.path.join(args.out, "polarization_diffuse.png"), result.diffuse_polarization)
    _save_png(os.path.join(args.out, "polarization_specular.png"), result.specular_polarization)
    _save_png(os.path.join(args.out, "polarization_combined.png"), result.combined_polarization)
    if args.gt_ls:
        from .metrics import psnr

        gt_ls = read_pfm(args.gt_ls)
        mask = validity_mask(s_obs)
        scores = {
            "psnr_ls_db": psnr(result.split.l_s, gt_ls, mask),
            "psnr_ld_db": psnr(result.split.l_d, s_obs.s0 - gt_ls, mask),
        }
        with open(os.path.join(args.out, "decomposition_metrics.json"), "w",
                  encoding="utf-8") as f:
            json.dump(scores, f, sort_keys=True, indent=2)
            f.write("\n")
    _write_manifest(
        args.out,
        "decompose",
        {"indir": os.path.abspath(args.indir), "normals": os.path.abspath(args.normals),
         "ls": os.path.abspath(args.ls), "eta": args.eta},
        {},
    )
    return 0


def cmd_edit(args) -> int:
    from .fresnel import RadianceSplit

    split = RadianceSplit(l_d=read_pfm(args.ld), l_s=read_pfm(args.ls))
    if args.op == "recolor":
        op = RecolorEdit(scale=tuple(float(v) for v in args.scale.split(",")))
    elif args.op == "metallic":
        tint = tuple(float(v) for v in args.tint.split(","))
        op = MetallicEdit(tint=tint, gain=args.gain)
    else:
        raise ConfigError(f"unknown edit op {args.op!r}", "op")
    edited = edit(split, op)
    os.makedirs(args.out, exist_ok=True)
    write_pfm(os.path.join(args.out, "edited_ld.pfm"), edited.l_d)
    write_pfm(os.path.join(args.out, "edited_ls.pfm"), edited.l_s)
    write_pfm(os.path.join(args.out, "edited_s0.pfm"), edited.s0)
    _save_png(os.path.join(args.out, "edited_s0.png"), np.clip(edited.s0, 0, 1))
    _write_manifest(
        args.out,
        "edit",
        {"ld": os.path.abspath(args.ld), "ls": os.path.abspath(args.ls),
         "op": args.op, "scale": getattr(args, "scale", None),
         "tint": getattr(args, "tint", None), "gain": getattr(args, "gain", None)},
        {},
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polarguide",
        description="Polarization-guided refinement of surface-normal maps",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic polarimetric scene")
    p.add_argument("scene", help="scene config (YAML)")
    p.add_argument("out", help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("stokes", help="compute Stokes maps from angle captures")
    p.add_argument("indir", help="directory with capture_i*.pfm files")
    p.add_argument("out")
    p.set_defaults(func=cmd_stokes)

    p = sub.add_parser("refine", help="run test-time guidance on observations")
    p.add_argument("indir", help="directory with stokes_*.pfm or capture_i*.pfm")
    p.add_argument("--backbone", required=True,
                   help="smoother[:yaml] | oracle:<yaml> | bridge:<command>")
    p.add_argument("--out", required=True)
    p.add_argument("--gt", default=None, help="ground-truth normals PFM (for metrics)")
    _add_guidance_flags(p)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("metrics", help="angular-error statistics for a normal map")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--mask", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("jacobian", help="input-to-normal sensitivity map")
    p.add_argument("--backbone", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--pixel", required=True, help="row,col of the probed input pixel")
    p.add_argument("--normalize", action="store_true", help="normalize by 99th percentile")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_jacobian)

    p = sub.add_parser("sweep", help="noise / eta / ablation / material sweeps")
    p.add_argument("kind", choices=["noise", "eta", "ablation", "material"])
    p.add_argument("--scene", required=True, help="scene config (YAML)")
    p.add_argument("--backbone", default="smoother")
    p.add_argument("--sigmas", default="0,0.05,0.1,0.2")
    p.add_argument("--etas", default="1.5,3.2")
    p.add_argument("--gain", type=float, default=0.0, help="oracle coupling gain (material sweep)")
    p.add_argument("--corruption", default=None, help="corruption YAML (material sweep)")
    p.add_argument("--out", required=True)
    _add_guidance_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("decompose", help="diffuse/specular appearance decomposition")
    p.add_argument("indir", help="directory with observed stokes or captures")
    p.add_argument("--normals", required=True)
    p.add_argument("--ls", required=True)
    p.add_argument("--gt-ls", default=None, dest="gt_ls",
                   help="known specular radiance; reports decomposition PSNR")
    p.add_argument("--eta", type=float, default=1.5)
    p.add_argument("--camera", default="ortho")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("edit", help="appearance edits on a radiance split")
    p.add_argument("--ld", required=True)
    p.add_argument("--ls", required=True)
    p.add_argument("--op", required=True, choices=["recolor", "metallic"])
    p.add_argument("--scale", default="1,1,1", help="per-channel diffuse scale (recolor)")
    p.add_argument("--tint", default="1,1,1", help="per-channel specular tint (metallic)")
    p.add_argument("--gain", type=float, default=1.0, help="specular gain (metallic)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_edit)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"polarguide: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BridgeError as exc:
        print(f"polarguide: bridge error: {exc}", file=sys.stderr)
        return EXIT_BRIDGE
    except (NumericError, EmptyMaskError) as exc:
        print(f"polarguide: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except PolarguideError as exc:
        print(f"polarguide: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"polarguide: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"polarguide: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

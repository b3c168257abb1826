import hashlib
import json
import os

import numpy as np
import pytest
import yaml

from polarguide.cli import main
from polarguide.pfm import read_pfm, write_pfm

SCENE_DOC = {
    "scene": {
        "geometry": {"kind": "sphere", "radius": 24.0},
        "size": {"height": 64, "width": 64, "channels": 3},
        "specular": {"kind": "lobe", "center": [24, 28], "width": 8.0, "peak": 0.2},
        "camera": {"kind": "orthographic"},
        "eta": 1.5,
    },
    "seed": 0,
}


def write_scene(tmp_path, doc=None):
    path = tmp_path / "scene.yaml"
    path.write_text(yaml.safe_dump(doc or SCENE_DOC))
    return str(path)


def write_oracle(tmp_path, scene_dir, sigma=2.0, gain=0.0, extra=None):
    doc = {
        "kind": "oracle",
        "gt_normals": os.path.join(scene_dir, "gt_normals.pfm"),
        "corruption": {"variant": "gaussian_blur", "sigma": sigma},
        "gain": gain,
    }
    doc.update(extra or {})
    path = tmp_path / "backbone.yaml"
    path.write_text(yaml.safe_dump(doc))
    return str(path)


def tree_digest(root, skip=()):
    """Digest of every file under root, stable across runs."""
    digest = hashlib.sha256()
    for name in sorted(os.listdir(root)):
        if name in skip:
            continue
        digest.update(name.encode())
        with open(os.path.join(root, name), "rb") as f:
            digest.update(f.read())
    return digest.hexdigest()


@pytest.fixture(scope="module")
def scene_dir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("scene")
    scene = write_scene(tmp)
    out = str(tmp / "out")
    assert main(["synth", scene, out]) == 0
    return out


class TestSynth:
    def test_writes_documented_files(self, scene_dir):
        expected = {
            "gt_normals.pfm", "capture_i000.pfm", "capture_i045.pfm",
            "capture_i090.pfm", "capture_i135.pfm", "stokes_s0.pfm",
            "stokes_s1.pfm", "stokes_s2.pfm", "mask.pfm", "ls_gt.pfm",
            "manifest.json",
        }
        assert expected <= set(os.listdir(scene_dir))

    def test_rerun_byte_identical(self, tmp_path, scene_dir):
        scene = write_scene(tmp_path)
        out = str(tmp_path / "again")
        assert main(["synth", scene, out]) == 0
        assert tree_digest(out) == tree_digest(scene_dir)

    def test_invalid_fov_is_config_error(self, tmp_path):
        doc = {
            "scene": {
                "geometry": {"kind": "sphere", "radius": 10.0},
                "size": {"height": 32, "width": 32},
                "camera": {"kind": "perspective", "fov_deg": 200, "width": 32, "height": 32},
            }
        }
        assert main(["synth", write_scene(tmp_path, doc), str(tmp_path / "o")]) == 3

    def test_missing_scene_file_is_io_error(self, tmp_path):
        assert main(["synth", str(tmp_path / "nope.yaml"), str(tmp_path / "o")]) == 2


class TestStokesCmd:
    def test_reproduces_stored_stokes_exactly(self, tmp_path, scene_dir):
        out = str(tmp_path / "stokes")
        assert main(["stokes", scene_dir, out]) == 0
        for comp in ("s0", "s1", "s2"):
            a = read_pfm(os.path.join(out, f"stokes_{comp}.pfm"))
            b = read_pfm(os.path.join(scene_dir, f"stokes_{comp}.pfm"))
            np.testing.assert_array_equal(a, b)

    def test_missing_capture_is_io_error(self, tmp_path):
        assert main(["stokes", str(tmp_path), str(tmp_path / "o")]) == 2


class TestRefineCmd:
    def test_zero_steps_passthrough(self, tmp_path, scene_dir):
        backbone = write_oracle(tmp_path, scene_dir, sigma=2.0)
        out = str(tmp_path / "run0")
        assert main([
            "refine", scene_dir, "--backbone", f"oracle:{backbone}",
            "--out", out, "--steps", "0",
        ]) == 0
        refined = read_pfm(os.path.join(out, "refined_normals.pfm"))
        from polarguide.backbones import CorruptedOracleBackbone
        from polarguide.synth import CorruptionSpec

        gt = read_pfm(os.path.join(scene_dir, "gt_normals.pfm"))
        bb = CorruptedOracleBackbone(gt, CorruptionSpec("gaussian_blur", sigma=2.0), gain=0.0)
        s0 = read_pfm(os.path.join(scene_dir, "stokes_s0.pfm"))
        expected = bb.forward(s0).astype(np.float32)
        np.testing.assert_allclose(refined, expected, atol=1e-6)
        assert np.all(read_pfm(os.path.join(out, "radiance_ls.pfm")) == 0.0)

    def test_metrics_written_when_gt_present(self, tmp_path, scene_dir):
        backbone = write_oracle(tmp_path, scene_dir)
        out = str(tmp_path / "run")
        assert main([
            "refine", scene_dir, "--backbone", f"oracle:{backbone}",
            "--out", out, "--steps", "5",
        ]) == 0
        stats = json.load(open(os.path.join(out, "metrics.json")))
        assert "mean_deg" in stats and stats["n_valid"] > 0
        trace = open(os.path.join(out, "trace.csv")).read().splitlines()
        assert trace[0] == "step,loss,mae_deg"
        assert len(trace) == 1 + 6  # header + steps+1 rows

    def test_missing_input_is_io_error(self, tmp_path):
        assert main([
            "refine", str(tmp_path / "absent"), "--backbone", "smoother",
            "--out", str(tmp_path / "o"),
        ]) == 2

    def test_unknown_backbone_is_config_error(self, tmp_path, scene_dir):
        assert main([
            "refine", scene_dir, "--backbone", "magic",
            "--out", str(tmp_path / "o"),
        ]) == 3


class TestMetricsCmd:
    def test_pred_equals_gt_all_zero(self, tmp_path, scene_dir):
        out = str(tmp_path / "m")
        gt = os.path.join(scene_dir, "gt_normals.pfm")
        assert main([
            "metrics", "--pred", gt, "--gt", gt,
            "--mask", os.path.join(scene_dir, "mask.pfm"), "--out", out,
        ]) == 0
        stats = json.load(open(os.path.join(out, "metrics.json")))
        assert stats["mean_deg"] == 0.0 and stats["acc_30"] == 1.0


class TestJacobianCmd:
    def test_smoother_sensitivity(self, tmp_path, scene_dir):
        out = str(tmp_path / "jac")
        assert main([
            "jacobian", "--backbone", "smoother",
            "--image", os.path.join(scene_dir, "stokes_s0.pfm"),
            "--pixel", "32,32", "--out", out,
        ]) == 0
        sens = read_pfm(os.path.join(out, "sensitivity.pfm"))
        assert sens.shape == (64, 64, 1)
        assert sens[32, 32, 0] > 0.0

    def test_bad_pixel_is_config_error(self, tmp_path, scene_dir):
        assert main([
            "jacobian", "--backbone", "smoother",
            "--image", os.path.join(scene_dir, "stokes_s0.pfm"),
            "--pixel", "zz", "--out", str(tmp_path / "o"),
        ]) == 3


class TestSweepCmd:
    def test_noise_sweep_rows(self, tmp_path, scene_dir):
        scene = write_scene(tmp_path)
        backbone = write_oracle(tmp_path, scene_dir)
        out = str(tmp_path / "sweep")
        assert main([
            "sweep", "noise", "--scene", scene, "--backbone", f"oracle:{backbone}",
            "--sigmas", "0,0.05,0.1", "--steps", "4", "--activation-step", "2",
            "--out", out,
        ]) == 0
        rows = open(os.path.join(out, "noise_sweep.csv")).read().splitlines()
        assert rows[0] == "sigma,mae_unguided,mae_guided"
        assert len(rows) == 4
        assert os.path.exists(os.path.join(out, "noise_sweep.png"))


class TestDecomposeEditCmds:
    def test_decompose_and_identity_edit(self, tmp_path, scene_dir):
        dec = str(tmp_path / "dec")
        assert main([
            "decompose", scene_dir,
            "--normals", os.path.join(scene_dir, "gt_normals.pfm"),
            "--ls", os.path.join(scene_dir, "ls_gt.pfm"),
            "--out", dec,
        ]) == 0
        edited = str(tmp_path / "edit")
        assert main([
            "edit", "--ld", os.path.join(dec, "radiance_ld.pfm"),
            "--ls", os.path.join(dec, "radiance_ls.pfm"),
            "--op", "recolor", "--scale", "1,1,1", "--out", edited,
        ]) == 0
        s0_edit = read_pfm(os.path.join(edited, "edited_s0.pfm"))
        ld = read_pfm(os.path.join(dec, "radiance_ld.pfm"))
        ls = read_pfm(os.path.join(dec, "radiance_ls.pfm"))
        np.testing.assert_array_equal(s0_edit, (ld + ls).astype(np.float32))

    def test_negative_edit_is_numeric_error(self, tmp_path, scene_dir):
        dec = str(tmp_path / "dec2")
        main([
            "decompose", scene_dir,
            "--normals", os.path.join(scene_dir, "gt_normals.pfm"),
            "--ls", os.path.join(scene_dir, "ls_gt.pfm"),
            "--out", dec,
        ])
        code = main([
            "edit", "--ld", os.path.join(dec, "radiance_ld.pfm"),
            "--ls", os.path.join(dec, "radiance_ls.pfm"),
            "--op", "recolor", "--scale=-1,1,1", "--out", str(tmp_path / "bad"),
        ])
        assert code == 1


class TestManifest:
    def test_manifest_contents(self, scene_dir):
        manifest = json.load(open(os.path.join(scene_dir, "manifest.json")))
        assert manifest["artifact"] == "polarguide"
        assert manifest["command"] == "synth"
        assert len(manifest["config_hash"]) == 64


class TestEtaSweepCmd:
    def test_eta_grid_emits_monotonicity_report(self, tmp_path, scene_dir):
        scene = write_scene(tmp_path)
        backbone = write_oracle(tmp_path, scene_dir)
        out = str(tmp_path / "eta")
        assert main([
            "sweep", "eta", "--scene", scene, "--backbone", f"oracle:{backbone}",
            "--etas", "1.3,1.5,2.0,3.2", "--steps", "4", "--activation-step", "2",
            "--out", out,
        ]) == 0
        rows = open(os.path.join(out, "eta_sweep.csv")).read().splitlines()
        assert len(rows) == 5
        trend = open(os.path.join(out, "eta_monotonicity.txt")).read().strip()
        assert trend in {"monotone_increasing", "monotone_decreasing", "non_monotone"}


class TestDecomposePsnr:
    def test_gt_split_scores_reported(self, tmp_path, scene_dir):
        out = str(tmp_path / "dec3")
        assert main([
            "decompose", scene_dir,
            "--normals", os.path.join(scene_dir, "gt_normals.pfm"),
            "--ls", os.path.join(scene_dir, "ls_gt.pfm"),
            "--gt-ls", os.path.join(scene_dir, "ls_gt.pfm"),
            "--out", out,
        ]) == 0
        scores = json.load(open(os.path.join(out, "decomposition_metrics.json")))
        assert scores["psnr_ls_db"] == float("inf") or scores["psnr_ls_db"] > 80

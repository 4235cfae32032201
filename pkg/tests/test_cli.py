import json
from pathlib import Path

import numpy as np
import pytest

from beeseg import (
    build_histogram,
    histogram_from_csv,
    load_grayscale_image,
    model_from_dict,
    model_to_dict,
    write_pgm,
)
from beeseg.cli import main
from beeseg.manifest import load_manifest
from conftest import make_model, sample_image


@pytest.fixture
def workspace(tmp_path):
    truth = make_model([0.35, 0.40, 0.25], [70.0, 130.0, 200.0], [12.0, 15.0, 10.0])
    truth_path = tmp_path / "truth.json"
    truth_path.write_text(json.dumps(model_to_dict(truth)))

    img, _ = sample_image(truth, 64, 64, seed=5)
    image_path = tmp_path / "image.pgm"
    image_path.write_bytes(write_pgm(img))

    model_path = tmp_path / "model.json"
    model_path.write_text(json.dumps(model_to_dict(truth)))
    return {"dir": tmp_path, "truth": truth_path, "image": image_path,
            "model": model_path, "truth_model": truth}


def read_tree(root: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(root.iterdir()) if p.is_file()}


FAST = ["--pop", "10", "--iters", "30", "--limit", "20", "--no-figures"]


class TestSynthCommand:
    def test_exact_histogram(self, workspace):
        out = workspace["dir"] / "synth"
        rc = main(["synth", "--truth", str(workspace["truth"]), "--out-dir", str(out),
                   "--pixels", "10000", "--no-figures"])
        assert rc == 0
        hist = histogram_from_csv((out / "histogram.csv").read_text())
        assert abs(hist.bins.sum() - 1.0) <= 1e-12
        assert (out / "manifest.json").exists()

    def test_multinomial_seeded(self, workspace):
        out1 = workspace["dir"] / "m1"
        out2 = workspace["dir"] / "m2"
        base = ["synth", "--truth", str(workspace["truth"]), "--pixels", "5000",
                "--noise", "multinomial", "--seed", "3", "--no-figures"]
        assert main(base + ["--out-dir", str(out1)]) == 0
        assert main(base + ["--out-dir", str(out2)]) == 0
        assert read_tree(out1) == read_tree(out2)


class TestFitCommand:
    def test_fit_on_csv_and_determinism(self, workspace):
        synth_out = workspace["dir"] / "synth"
        main(["synth", "--truth", str(workspace["truth"]), "--out-dir", str(synth_out),
              "--no-figures"])
        csv_path = synth_out / "histogram.csv"
        out1 = workspace["dir"] / "fit1"
        out2 = workspace["dir"] / "fit2"
        args = ["fit", "--input", str(csv_path), "--k", "3"] + FAST
        assert main(args + ["--out-dir", str(out1)]) == 0
        assert main(args + ["--out-dir", str(out2)]) == 0
        assert read_tree(out1) == read_tree(out2)

        model = model_from_dict(json.loads((out1 / "model.json").read_text()))
        means = [c.mean for c in model.classes]
        assert means == sorted(means)
        # the consumed histogram is re-emitted bit-exactly
        assert (out1 / "histogram.csv").read_bytes() == csv_path.read_bytes()

    def test_fit_on_image_writes_figures(self, workspace):
        out = workspace["dir"] / "fit_img"
        rc = main(["fit", "--input", str(workspace["image"]), "--k", "3",
                   "--pop", "10", "--iters", "10", "--out-dir", str(out)])
        assert rc == 0
        assert (out / "fit.png").stat().st_size > 0
        assert (out / "convergence.png").stat().st_size > 0
        trace_lines = (out / "trace.csv").read_text().splitlines()
        assert trace_lines[0] == "iteration,best_J,scout_count"
        assert len(trace_lines) == 11

    def test_k_out_of_range_is_usage_error(self, workspace):
        rc = main(["fit", "--input", str(workspace["image"]), "--k", "1",
                   "--out-dir", str(workspace["dir"] / "x")] )
        assert rc == 1
        rc = main(["fit", "--input", str(workspace["image"]), "--k", "9",
                   "--out-dir", str(workspace["dir"] / "x")])
        assert rc == 1

    def test_missing_input_is_input_error(self, workspace):
        rc = main(["fit", "--input", str(workspace["dir"] / "nope.pgm"),
                   "--out-dir", str(workspace["dir"] / "x")] + FAST)
        assert rc == 2

    def test_malformed_pgm_is_input_error(self, workspace):
        bad = workspace["dir"] / "bad.pgm"
        bad.write_bytes(b"P5\n4 4\n255\nxx")
        rc = main(["fit", "--input", str(bad),
                   "--out-dir", str(workspace["dir"] / "x")] + FAST)
        assert rc == 2

    def test_missing_out_dir_is_usage_error(self, workspace):
        with pytest.raises(SystemExit) as info:
            main(["fit", "--input", str(workspace["image"])])
        assert info.value.code == 1

    def test_abc_config_file_and_flag_precedence(self, workspace):
        cfg = workspace["dir"] / "abc.json"
        cfg.write_text(json.dumps({"population": 8, "iterations": 5, "limit": 10}))
        out = workspace["dir"] / "cfg_fit"
        rc = main(["fit", "--input", str(workspace["image"]), "--k", "2",
                   "--abc-config", str(cfg), "--iters", "7", "--no-figures",
                   "--out-dir", str(out)])
        assert rc == 0
        manifest = load_manifest(out / "manifest.json")
        assert manifest.args["pop"] == 8       # from the file
        assert manifest.args["iters"] == 7     # flag wins
        assert len((out / "trace.csv").read_text().splitlines()) == 8

    def test_abc_config_rejects_wrong_dimension(self, workspace):
        cfg = workspace["dir"] / "abc.json"
        cfg.write_text(json.dumps({"dimension": 5}))
        rc = main(["fit", "--input", str(workspace["image"]), "--k", "2",
                   "--abc-config", str(cfg), "--no-figures",
                   "--out-dir", str(workspace["dir"] / "x")])
        assert rc == 1

    def test_bounds_file_constrains_search(self, workspace):
        bounds = workspace["dir"] / "bounds.json"
        bounds.write_text(json.dumps({"mean": [100.0, 140.0]}))
        out = workspace["dir"] / "bounded_fit"
        rc = main(["fit", "--input", str(workspace["image"]), "--k", "2",
                   "--bounds-file", str(bounds), "--out-dir", str(out)] + FAST)
        assert rc == 0
        model = model_from_dict(json.loads((out / "model.json").read_text()))
        assert all(100.0 <= c.mean <= 140.0 for c in model.classes)

    @pytest.mark.xfail(reason="the default-budget colony search stalls around "
                              "J~1e-5, above 10x the discretization floor of "
                              "exact-mode histograms", strict=False)
    def test_fit_reaches_discretization_floor(self, workspace):
        from beeseg import ObjectiveSpec, objective_j
        from beeseg.synth import SynthSpec, synth_histogram

        truth = workspace["truth_model"]
        hist = synth_histogram(SynthSpec(truth, 10000))
        floor = objective_j(truth, ObjectiveSpec(hist, 3, omega=1.0))
        synth_out = workspace["dir"] / "floor_synth"
        main(["synth", "--truth", str(workspace["truth"]),
              "--out-dir", str(synth_out), "--no-figures"])
        out = workspace["dir"] / "floor_fit"
        rc = main(["fit", "--input", str(synth_out / "histogram.csv"), "--k", "3",
                   "--no-figures", "--out-dir", str(out)])
        assert rc == 0
        model_data = json.loads((out / "model.json").read_text())
        assert model_data["objective"] <= 10 * floor


class TestSegmentCommand:
    def test_with_supplied_model(self, workspace):
        out = workspace["dir"] / "seg"
        rc = main(["segment", "--image", str(workspace["image"]),
                   "--model", str(workspace["model"]),
                   "--out-dir", str(out), "--no-figures"])
        assert rc == 0
        cuts = json.loads((out / "thresholds.json").read_text())
        assert set(cuts) == {"cuts", "errors"}
        assert len(cuts["cuts"]) == 2
        labels = load_grayscale_image((out / "labels.pgm").read_bytes())
        assert set(np.unique(labels.pixels)) <= {0, 1, 2}
        rendered = load_grayscale_image((out / "segmented.pgm").read_bytes())
        assert set(np.unique(rendered.pixels)) <= {70, 130, 200}

    def test_two_class_pipeline_matches_generating_components(self, workspace):
        truth = make_model([0.5, 0.5], [60.0, 190.0], [10.0, 10.0])
        img, comp = sample_image(truth, 96, 96, seed=1000)
        image_path = workspace["dir"] / "two.pgm"
        image_path.write_bytes(write_pgm(img))
        out = workspace["dir"] / "seg2"
        rc = main(["segment", "--image", str(image_path), "--k", "2", "--seed", "0",
                   "--out-dir", str(out), "--no-figures"])
        assert rc == 0
        labels = load_grayscale_image((out / "labels.pgm").read_bytes())
        agreement = np.mean(labels.pixels.ravel() == comp)
        assert max(agreement, 1 - agreement) >= 0.99

    def test_infeasible_model_exit_code(self, workspace):
        bad = make_model([0.01, 0.99], [100.0, 110.0], [1.0, 30.0])
        bad_path = workspace["dir"] / "bad_model.json"
        bad_path.write_text(json.dumps(model_to_dict(bad)))
        rc = main(["segment", "--image", str(workspace["image"]),
                   "--model", str(bad_path),
                   "--out-dir", str(workspace["dir"] / "x"), "--no-figures"])
        assert rc == 3

    def test_single_class_model_rejected(self, workspace):
        one = make_model([1.0], [100.0], [10.0])
        one_path = workspace["dir"] / "one.json"
        one_path.write_text(json.dumps(model_to_dict(one)))
        rc = main(["segment", "--image", str(workspace["image"]),
                   "--model", str(one_path),
                   "--out-dir", str(workspace["dir"] / "x"), "--no-figures"])
        assert rc == 2


class TestCompareCommand:
    def _inits_file(self, workspace):
        near = make_model([1 / 3] * 3, [60.0, 125.0, 195.0], [15.0] * 3)
        far = make_model([0.2, 0.3, 0.5], [10.0, 30.0, 50.0], [5.0] * 3)
        path = workspace["dir"] / "inits.json"
        path.write_text(json.dumps([model_to_dict(near), model_to_dict(far)]))
        return path

    def test_rows_and_abc_init_independence(self, workspace):
        inits = self._inits_file(workspace)
        out = workspace["dir"] / "cmp"
        rc = main(["compare", "--input", str(workspace["image"]), "--k", "3",
                   "--inits", str(inits), "--out-dir", str(out)] + FAST)
        assert rc == 0
        lines = (out / "comparison.csv").read_text().splitlines()
        assert lines[0] == "method,init_id,final_J,log_likelihood,iterations"
        rows = [dict(zip(lines[0].split(","), l.split(","))) for l in lines[1:]]
        assert len(rows) == 4
        abc_rows = [r for r in rows if r["method"] == "abc"]
        assert abc_rows[0]["final_J"] == abc_rows[1]["final_J"]
        em_rows = [r for r in rows if r["method"] == "em"]
        assert all(int(r["iterations"]) >= 1 for r in em_rows)
        for idx in range(2):
            assert (out / f"model_em_init{idx}.json").exists()
            assert (out / f"model_abc_init{idx}.json").exists()

    def test_mismatched_init_k(self, workspace):
        bad = workspace["dir"] / "bad_inits.json"
        bad.write_text(json.dumps([model_to_dict(make_model([1.0], [5.0], [2.0]))]))
        rc = main(["compare", "--input", str(workspace["image"]), "--k", "3",
                   "--inits", str(bad),
                   "--out-dir", str(workspace["dir"] / "x")] + FAST)
        assert rc == 2


class TestReplay:
    def test_fit_replay_bit_identical(self, workspace):
        out = workspace["dir"] / "orig"
        main(["fit", "--input", str(workspace["image"]), "--k", "2",
              "--pop", "10", "--iters", "15", "--out-dir", str(out)])
        replay_out = workspace["dir"] / "replayed"
        rc = main(["replay", "--manifest", str(out / "manifest.json"),
                   "--out-dir", str(replay_out)])
        assert rc == 0
        assert read_tree(out) == read_tree(replay_out)

    def test_replay_detects_input_drift(self, workspace):
        out = workspace["dir"] / "orig2"
        main(["fit", "--input", str(workspace["image"]), "--k", "2",
              "--out-dir", str(out)] + FAST)
        workspace["image"].write_bytes(write_pgm(
            load_grayscale_image(workspace["image"].read_bytes()), binary=False))
        rc = main(["replay", "--manifest", str(out / "manifest.json"),
                   "--out-dir", str(workspace["dir"] / "x")])
        assert rc == 2

    def test_replay_bad_manifest(self, workspace):
        bad = workspace["dir"] / "manifest.json"
        bad.write_text("{not json")
        rc = main(["replay", "--manifest", str(bad),
                   "--out-dir", str(workspace["dir"] / "x")])
        assert rc == 2

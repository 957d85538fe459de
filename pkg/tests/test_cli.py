"""CLI integration: commands, exit codes, output files."""

from __future__ import annotations

import json
import re
import subprocess
import sys
import time

import httpx
import pytest
from click.testing import CliRunner

from ambiprune.ambiguity import score_dataset
from ambiprune.cli import main
from ambiprune.evaluation import evaluate
from ambiprune.model import (
    AnnotatorAnswers,
    load_dataset,
    load_detections,
    save_dataset,
)
from ambiprune.pruning import prune
from conftest import detection_for, make_dataset, make_instance


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def answer_dataset_path(tmp_path):
    dataset = make_dataset([[
        make_instance("a", answers=AnnotatorAnswers(5, 0, 0)),
        make_instance("b", x0=100, answers=AnnotatorAnswers(3, 1, 1)),
        make_instance("c", x0=200, answers=AnnotatorAnswers(2, 2, 0)),
    ]])
    path = tmp_path / "dataset.json"
    save_dataset(dataset, path)
    return path


@pytest.fixture
def eval_fixture_paths(tmp_path):
    per_image = [[make_instance(f"gt{i}", ambiguity=0.1 * i)]
                 for i in range(10)]
    dataset = make_dataset(per_image)
    detections = [detection_for(f"img{i}", per_image[i][0], confidence=0.9)
                  for i in range(5)]
    dataset_path = tmp_path / "eval_dataset.json"
    save_dataset(dataset, dataset_path)
    detections_path = tmp_path / "detections.jsonl"
    lines = [json.dumps({"image_id": d.image_id, "bbox": d.bbox.as_list(),
                         "confidence": d.confidence, "identity": d.identity})
             for d in detections]
    lines.append(json.dumps({"image_id": "img9",
                             "bbox": [300, 300, 340, 400],
                             "confidence": 0.8, "identity": "pedestrian"}))
    detections_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return dataset_path, detections_path


class TestScore:
    def test_score_with_answers(self, runner, answer_dataset_path, tmp_path):
        out = tmp_path / "scored.json"
        result = runner.invoke(main, ["score", "--input",
                                      str(answer_dataset_path),
                                      "--output", str(out)])
        assert result.exit_code == 0, result.output
        assert "scored 3 instances" in result.output
        scored = load_dataset(out)
        values = [i.ambiguity for _, i in scored.iter_instances()]
        assert values == [0.0, 0.6, 1.0]

    def test_missing_answers_exits_1(self, runner, tmp_path):
        dataset = make_dataset([[make_instance("orphan")]])
        path = tmp_path / "bare.json"
        save_dataset(dataset, path)
        result = runner.invoke(main, ["score", "--input", str(path),
                                      "--output", str(tmp_path / "o.json")])
        assert result.exit_code == 1
        assert "orphan" in result.output

    def test_score_file_import_equals_engine(self, runner, tmp_path):
        dataset = make_dataset([[make_instance("a"),
                                 make_instance("b", x0=100)]])
        path = tmp_path / "bare.json"
        save_dataset(dataset, path)
        scores = tmp_path / "scores.jsonl"
        scores.write_text(
            json.dumps({"instance_id": "a", "ambiguity": 0.25}) + "\n"
            + json.dumps({"instance_id": "b",
                          "answers": {"yes": 1, "no": 4, "unsure": 0}}) + "\n",
            encoding="utf-8")
        out = tmp_path / "scored.json"
        result = runner.invoke(main, ["score", "--input", str(path),
                                      "--scores", str(scores),
                                      "--output", str(out)])
        assert result.exit_code == 0, result.output
        values = {i.id: i.ambiguity
                  for _, i in load_dataset(out).iter_instances()}
        assert values == {"a": 0.25, "b": pytest.approx(0.4)}

    def test_missing_input_exits_2(self, runner, tmp_path):
        result = runner.invoke(main, ["score", "--input",
                                      str(tmp_path / "nope.json"),
                                      "--output", str(tmp_path / "o.json")])
        assert result.exit_code == 2


class TestReport:
    def test_outputs_and_peak_line(self, runner, tmp_path):
        from ambiprune.model import TagLevel
        instances = [
            make_instance(f"hi{i}", x0=10.0 * i, ambiguity=0.76 + i * 0.01,
                          occlusion=TagLevel.GT80)
            for i in range(4)
        ] + [
            make_instance(f"lo{i}", x0=200 + 10.0 * i,
                          ambiguity=0.1 + i * 0.05)
            for i in range(8)
        ]
        path = tmp_path / "scored.json"
        save_dataset(make_dataset([instances]), path)
        out_dir = tmp_path / "report"
        result = runner.invoke(main, ["report", "--input", str(path),
                                      "--output", str(out_dir),
                                      "--top", "5"])
        assert result.exit_code == 0, result.output
        payload = json.loads((out_dir / "histogram.json").read_text())
        assert len(payload["counts"]) == 20
        assert (out_dir / "histogram.csv").exists()
        assert (out_dir / "histogram.svg").exists()
        # The bin containing 0.79 is [0.75, 0.80).
        assert re.search(r"peak bin occlusion gt80: \[0\.750, 0\.800\)",
                         result.output)
        top_lines = result.output.split("most ambiguous instances:")[1]
        ids = re.findall(r"(hi\d|lo\d)", top_lines)
        assert len(ids) == 5
        assert ids[:4] == ["hi3", "hi2", "hi1", "hi0"]


class TestPruneCommand:
    def scored_path(self, tmp_path):
        dataset = make_dataset([[
            make_instance("a", ambiguity=0.2),
            make_instance("b", x0=100, ambiguity=0.5),
            make_instance("c", x0=200, ambiguity=0.7),
            make_instance("d", x0=300, ambiguity=0.9),
        ]])
        path = tmp_path / "scored.json"
        save_dataset(dataset, path)
        return path

    def test_threshold_065(self, runner, tmp_path):
        path = self.scored_path(tmp_path)
        out = tmp_path / "pruned.json"
        result = runner.invoke(main, ["prune", "--input", str(path),
                                      "--output", str(out),
                                      "--threshold", "0.65",
                                      "--mode", "delete"])
        assert result.exit_code == 0, result.output
        report = json.loads((tmp_path / "pruned.json.report.json").read_text())
        assert report["removed_count"] == 2
        assert load_dataset(out).instance_count() == 2

    def test_threshold_zero_removes_all(self, runner, tmp_path):
        path = self.scored_path(tmp_path)
        out = tmp_path / "pruned.json"
        result = runner.invoke(main, ["prune", "--input", str(path),
                                      "--output", str(out),
                                      "--threshold", "0",
                                      "--mode", "delete"])
        assert result.exit_code == 0
        assert load_dataset(out).instance_count() == 0

    def test_ignore_mode_keeps_count(self, runner, tmp_path):
        path = self.scored_path(tmp_path)
        out = tmp_path / "pruned.json"
        result = runner.invoke(main, ["prune", "--input", str(path),
                                      "--output", str(out),
                                      "--threshold", "0.5"])
        assert result.exit_code == 0
        assert load_dataset(out).instance_count() == 4


class TestEvalCommand:
    def test_lamr_half_fixture(self, runner, eval_fixture_paths, tmp_path):
        dataset_path, detections_path = eval_fixture_paths
        out = tmp_path / "result.json"
        result = runner.invoke(main, ["eval", "--input", str(dataset_path),
                                      "--detections", str(detections_path),
                                      "--output", str(out),
                                      "--subset", "all"])
        assert result.exit_code == 0, result.output
        payload = json.loads(out.read_text())
        assert payload["lamr"] == pytest.approx(0.5, abs=1e-9)
        assert "LAMR=0.5" in result.output

    def test_subset_changes_accounting(self, runner, tmp_path):
        tall = make_instance("tall", height=50)
        short = make_instance("short", x0=100, height=35)
        dataset_path = tmp_path / "d.json"
        save_dataset(make_dataset([[tall, short]]), dataset_path)
        detections_path = tmp_path / "dets.jsonl"
        detections_path.write_text(
            json.dumps({"image_id": "img0", "bbox": tall.bbox.as_list(),
                        "confidence": 0.9, "identity": "pedestrian"}) + "\n",
            encoding="utf-8")
        counts = {}
        for subset in ("reasonable", "all"):
            out = tmp_path / f"{subset}.json"
            result = runner.invoke(main, ["eval", "--input",
                                          str(dataset_path),
                                          "--detections",
                                          str(detections_path),
                                          "--output", str(out),
                                          "--subset", subset])
            assert result.exit_code == 0, result.output
            payload = json.loads(out.read_text())
            counts[subset] = payload["tp"] + payload["fn"]
        assert counts == {"reasonable": 1, "all": 2}

    def test_rerun_is_byte_identical(self, runner, eval_fixture_paths,
                                     tmp_path):
        dataset_path, detections_path = eval_fixture_paths
        outputs = []
        for name in ("r1.json", "r2.json"):
            out = tmp_path / name
            result = runner.invoke(main, ["eval", "--input",
                                          str(dataset_path),
                                          "--detections",
                                          str(detections_path),
                                          "--output", str(out)])
            assert result.exit_code == 0
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]

    def test_pruned_file_matches_in_memory(self, runner, eval_fixture_paths,
                                           tmp_path):
        dataset_path, detections_path = eval_fixture_paths
        pruned_path = tmp_path / "pruned.json"
        result = runner.invoke(main, ["prune", "--input", str(dataset_path),
                                      "--output", str(pruned_path),
                                      "--threshold", "0.5",
                                      "--mode", "ignore"])
        assert result.exit_code == 0
        out = tmp_path / "eval.json"
        result = runner.invoke(main, ["eval", "--input", str(pruned_path),
                                      "--detections", str(detections_path),
                                      "--output", str(out),
                                      "--subset", "all"])
        assert result.exit_code == 0
        payload = json.loads(out.read_text())

        dataset = load_dataset(dataset_path)
        pruned, _ = prune(dataset, 0.5, mode="ignore")
        expected = evaluate(pruned, load_detections(detections_path),
                            subset="all").to_dict()
        assert payload == json.loads(json.dumps(expected))


class TestServe:
    def test_ephemeral_port_and_healthz(self, answer_dataset_path):
        process = subprocess.Popen(
            [sys.executable, "-m", "ambiprune.cli", "serve",
             "--input", str(answer_dataset_path), "--port", "0"],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
        try:
            line = process.stdout.readline()
            match = re.search(r"http://([\d.]+):(\d+)", line)
            assert match, f"no address line: {line!r}"
            port = int(match.group(2))
            assert port != 0
            for _ in range(50):
                try:
                    response = httpx.get(
                        f"http://127.0.0.1:{port}/healthz", timeout=1.0)
                    break
                except httpx.TransportError:
                    time.sleep(0.1)
            assert response.status_code == 200
            assert response.text == "ok"
        finally:
            process.terminate()
            process.wait(timeout=10)

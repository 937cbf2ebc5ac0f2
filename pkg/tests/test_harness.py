import csv
import io
import json

import numpy as np
import pytest

from oracleboost.errors import ConfigurationError
from oracleboost.harness import ExperimentConfig, compare_boosting, crossover_k, estimate_error, wilson_interval
from oracleboost.harness.cli import main
from oracleboost.harness.experiments import distinct_positions, flip_at_distance
from oracleboost.harness.reports import flatten, to_csv


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_wilson_contains_rate():
    lo, hi = wilson_interval(25, 100)
    assert lo < 0.25 < hi
    assert wilson_interval(0, 100)[0] == 0.0


def test_config_validation():
    with pytest.raises(ConfigurationError):
        ExperimentConfig("hd1-bsearch", 8, trials=0)
    with pytest.raises(ConfigurationError):
        ExperimentConfig("hd1-bsearch", 8, delta=0.6)
    with pytest.raises(ConfigurationError):
        ExperimentConfig("bogus", 8)
    with pytest.raises(ConfigurationError):
        ExperimentConfig("hd1-bsearch", 8, dist="fixed")


def test_distinct_positions():
    rng = np.random.default_rng(0)
    for n, m in ((50, 3), (10, 9)):
        pos = distinct_positions(rng, 200, n, m)
        assert pos.shape == (200, m)
        assert all(len(set(row)) == m for row in pos.tolist())
        assert pos.min() >= 0 and pos.max() < n


def test_flip_at_distance():
    rng = np.random.default_rng(1)
    x = rng.integers(0, 2, (100, 30)).astype(np.uint8)
    d = rng.integers(0, 5, 100)
    y = flip_at_distance(rng, x, d)
    assert np.array_equal((x != y).sum(axis=1), d)


def test_trials_one():
    rep = estimate_error(ExperimentConfig("hd1-bsearch", 16, trials=1))
    assert rep.trials == 1 and rep.bits_min == rep.bits_max == rep.expected_bits


def test_noisy_report_fields():
    rep = estimate_error(ExperimentConfig("gt", 32, trials=2000, delta=0.1, seed=4))
    assert rep.ok
    assert rep.bits_min == rep.bits_max == rep.expected_bits
    assert rep.mean_good + rep.mean_bad == pytest.approx(rep.extra["rounds"])
    assert rep.ci_high <= 0.1


def test_flatten():
    assert flatten({"a": {"b": 1}, "c": [1, 2]}) == {"a.b": 1, "c": "[1, 2]"}


def test_cli_byte_identical(capsys):
    args = ("noisytree", "--workload", "hd1-bsearch", "--n", "32", "--trials", "300", "--seed", "9", "--format", "json")
    code1, out1, _ = _run(capsys, *args)
    code2, out2, _ = _run(capsys, *args)
    assert code1 == code2 == 0
    assert out1 == out2
    data = json.loads(out1)
    assert data["schema_version"] == 1 and data["trials"] == 300
    assert "wall_clock" not in data


def test_cli_timing_flag(capsys):
    code, out, _ = _run(capsys, "noisytree", "--n", "8", "--trials", "10", "--format", "json", "--timing")
    assert code == 0 and "wall_clock" in json.loads(out)


def test_cli_csv_and_per_run(capsys, tmp_path):
    per = tmp_path / "runs.csv"
    code, out, _ = _run(capsys, "noisytree", "--workload", "gt", "--n", "16", "--trials", "50", "--per-run", str(per))
    assert code == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert int(row["trials"]) == 50
    runs = list(csv.DictReader(per.open()))
    assert len(runs) == 50
    assert set(runs[0]) == {"seed", "d", "delta", "C", "R", "bits", "good", "bad", "mistakes", "correct"}
    assert all(int(r["good"]) + int(r["bad"]) == int(r["R"]) for r in runs)


def test_cli_naive_variant(capsys):
    code, out, _ = _run(capsys, "noisytree", "--variant", "naive", "--n", "16", "--trials", "100", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["bits_max"] == data["expected_bits"]


def test_cli_usage_errors(capsys):
    assert _run(capsys, "noisytree")[0] == 2  # missing --n
    assert _run(capsys, "noisytree", "--n", "8", "--delta", "0.7")[0] == 2
    assert _run(capsys, "noisytree", "--n", "0")[0] == 2
    assert _run(capsys, "hdreduce", "--n", "8", "--dist", "fixed")[0] == 2
    assert _run(capsys, "blocky", "/nonexistent/grid.txt")[0] == 2


def test_cli_hdreduce_trace(capsys, tmp_path):
    trace = tmp_path / "t.jsonl"
    code, out, _ = _run(capsys, "hdreduce", "--n", "128", "--k", "8", "--trials", "20", "--mode", "oracle",
                        "--format", "json", "--trace", str(trace))
    assert code == 0
    data = json.loads(out)
    assert data["errors"] == 0 and data["extra"]["iteration_bound"] == 20
    lines = [json.loads(line) for line in trace.read_text().splitlines()]
    assert lines


def test_cli_subproto(capsys):
    code, out, _ = _run(capsys, "subproto", "--proto", "hd1", "--n", "64", "--delta", "0.05", "--trials", "200",
                        "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["bits_min"] == data["bits_max"] == data["expected_bits"]


def test_cli_grid_commands(capsys, tmp_path):
    g = tmp_path / "g.txt"
    g.write_text("100\n010\n001\n")
    assert _run(capsys, "blocky", str(g))[1].startswith("blocky: yes")
    assert _run(capsys, "vc", str(g))[1] == "vc: 1\n"
    code, out, _ = _run(capsys, "embed", str(g))
    assert code == 0 and out.strip().endswith("verified: yes")
    g.write_text("11\n10\n")
    assert "conflict rows: 0 1" in _run(capsys, "blocky", str(g))[1]


def test_compare_numbers():
    small = compare_boosting("hd1-tensor", 256, 16, 0.25, measure=False)
    assert (small.queries, small.naive_bits, small.noisy_bits) == (272, 6256, 6528)
    assert not small.noisy_wins
    res = compare_boosting("hd1-tensor", 256, 64, 0.25, measure=True)
    assert res.queries == 1088 and res.naive_repetitions == 13
    assert (res.naive_bits, res.noisy_bits) == (29376, 26112)
    assert res.naive_measured == res.naive_bits and res.noisy_measured == res.noisy_bits
    assert res.noisy_wins and res.crossover_k == 31


def test_crossover():
    assert crossover_k(17, 0.25) == 31
    assert crossover_k(17, 0.25, limit=10) is None


def test_cli_compare(capsys):
    code, out, _ = _run(capsys, "compare", "--n", "256", "--k", "64", "--no-measure", "--trials", "0", "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert data["naive_bits"] > data["noisy_bits"] and data["crossover_k"] == 31


def test_to_csv_empty():
    assert to_csv([]) == ""

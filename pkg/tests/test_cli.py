import json

import pytest

from leafgp import bench
from leafgp.cli import _seeds, main


class TestCli:
    def test_seed_ranges(self):
        assert _seeds("101-103") == [101, 102, 103]
        assert _seeds("1,5-6") == [1, 5, 6]

    def test_bench_list(self, capsys):
        assert main(["bench-list"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == len(bench.names())
        assert any(ln.startswith("pressure_vessel\tdim=4") for ln in lines)

    def test_run_and_aggregate(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"benchmark": "g6", "n_iter": 2, "gbdt": {"max_depth": 2, "num_boost_rounds": 5}}))
        hist = tmp_path / "h.csv"
        assert main(["run", str(cfg), "--seed", "3", "--out", str(hist)]) == 0
        rows = hist.read_text().splitlines()
        assert rows[0].startswith("seed,iter,x_0,x_1,objective")
        assert len(rows) == 1 + 5 + 2
        agg = tmp_path / "a.csv"
        assert main(["aggregate", str(hist), "--out", str(agg)]) == 0
        lines = agg.read_text().splitlines()
        assert lines[1] == "iter,median,q1,q3,n_runs" and len(lines) == 2 + 3

    def test_sweep(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"benchmark": "g6", "n_iter": 1, "algorithm": "feas-random"}))
        assert main(["sweep", str(cfg), "--seeds", "1-2", "--out-dir", str(tmp_path / "r")]) == 0
        assert (tmp_path / "r" / "g6_feas-random_aggregate.csv").exists()

    def test_uncertainty(self, tmp_path):
        out = tmp_path / "u.csv"
        assert main(["uncertainty", "--seeds", "1", "--r-grid", "0.9,1.0", "--n-train", "10", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "R,seed,error,mean" and len(lines) == 3

    @pytest.mark.parametrize("content", ['{"benchmark": "g6", "bogus": 1}', '{"benchmark": "nope"}'])
    def test_bad_config_exit_code(self, tmp_path, content, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(content)
        assert main(["run", str(cfg)]) == 2
        assert capsys.readouterr().err.startswith("error:")

    def test_missing_file(self):
        assert main(["run", "/nonexistent.json"]) == 2

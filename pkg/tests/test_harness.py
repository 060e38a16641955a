import json
import math

import numpy as np
import pytest
from pydantic import ValidationError

from ltbridge.bridge import ExponentialLaw, GammaLaw
from ltbridge.common.errors import ConfigError, SampleSizeError
from ltbridge.harness import ExperimentConfig, cmd_validate, parse_law
from ltbridge.harness import validate_suites
from ltbridge.harness.cli import main
from ltbridge.harness.validate_suites import Profile, SuiteCheck, SuiteContext, resolve_profile, run_check
from ltbridge.harness.write_outputs import _clean, csv_columns, write_outputs
from ltbridge.stats import TestReportEntry

KBM = {"model": "killed_bm", "params": {"b": 1}}


def verdict(passed: bool, name: str = "fake check") -> TestReportEntry:
    return TestReportEntry(name=name, oracle="fake", statistic=0.5, p_value=0.5, n=100, passed=passed)


class TestParseLaw:
    def test_parameters(self):
        law = parse_law("gamma:shape=2,rate=1")
        assert isinstance(law, GammaLaw)
        assert law.mean() == 2.0
        assert parse_law("exponential:rate=0.5") == ExponentialLaw(rate=0.5)

    @pytest.mark.parametrize("text", ["exponential:rate", "exponential:rate=x", "weird", "exponential:rate=-1"])
    def test_invalid(self, text):
        with pytest.raises(ConfigError):
            parse_law(text)


class TestExperimentConfig:
    def test_seed_required(self):
        with pytest.raises(ValidationError):
            ExperimentConfig()

    def test_level_and_law_exclusive(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(seed=0, a=1.0, g=ExponentialLaw(rate=1.0))

    def test_profiles(self):
        assert resolve_profile(ExperimentConfig(seed=0, scale="quick")) == Profile(n=2000, dt=1e-3)
        assert resolve_profile(ExperimentConfig(seed=0, scale="quick", n=50)) == Profile(n=50, dt=1e-3)
        assert resolve_profile(ExperimentConfig(seed=0, dt=1e-2)) == Profile(n=10_000, dt=1e-2)


class TestWriteOutputs:
    def test_clean(self):
        cleaned = _clean({"a": np.float64(1.5), "b": [math.inf, np.int64(2)], 3: (math.nan,)})
        assert cleaned == {"a": 1.5, "b": [None, 2], "3": [None]}

    def test_csv(self):
        assert csv_columns(("t", "x"), [0.0, 0.5], [1.0, 2.0]) == "t,x\n0.0,1.0\n0.5,2.0\n"

    def test_write_and_overwrite(self, tmp_path):
        write_outputs(tmp_path, {"nested/a.txt": "first"})
        written = write_outputs(tmp_path, {"nested/a.txt": "second", "b.txt": "b"})
        assert (tmp_path / "nested" / "a.txt").read_text() == "second"
        assert len(written) == 2


class TestCli:
    def test_inspect(self, spec_path, capsys):
        assert main(["inspect", "--spec", str(spec_path(KBM)), "--y", "0", "--seed", "0"]) == 0
        lines = [line.split() for line in capsys.readouterr().out.splitlines()]
        assert ["rho(y)", "1"] in lines
        assert ["lambda(y)", "0.5"] in lines
        assert ["mean", "L^y_inf", "2"] in lines

    def test_inspect_sq_bessel(self, spec_path, capsys):
        path = spec_path({"model": "sq_bessel", "params": {"delta": 4}})
        assert main(["inspect", "--spec", str(path), "--y", "1", "--seed", "0"]) == 0
        lines = [line.split() for line in capsys.readouterr().out.splitlines()]
        assert ["s(y)", "0"] in lines

    def test_invalid_spec_exit_code(self, spec_path):
        assert main(["inspect", "--spec", str(spec_path({"model": "heston"})), "--seed", "0"]) == 2

    def test_level_outside_state_space(self, spec_path):
        assert main(["inspect", "--spec", str(spec_path(KBM)), "--y", "3", "--seed", "0"]) == 2

    def test_usage_errors(self, spec_path):
        with pytest.raises(SystemExit) as e:
            main(["validate", "--suite", "nonsense", "--seed", "0"])
        assert e.value.code == 2
        with pytest.raises(SystemExit) as e:
            main(["inspect", "--spec", str(spec_path(KBM))])
        assert e.value.code == 2
        with pytest.raises(SystemExit) as e:
            main(["bridge", "--spec", str(spec_path(KBM)), "--seed", "0", "--g", "gamma:shape"])
        assert e.value.code == 2

    def test_bridge_at_zero_level(self, spec_path, tmp_path, capsys):
        out = tmp_path / "bridge"
        args = ["bridge", "--spec", str(spec_path(KBM)), "--y", "0", "--a", "0", "--n", "20", "--dt", "1e-3", "--seed", "1"]
        assert main([*args, "--out", str(out)]) == 0
        records = [json.loads(line) for line in (out / "bridge.jsonl").read_text().splitlines()]
        assert len(records) == 20
        assert all(r["theta"] == 1 and r["tau"] == 0.0 for r in records)
        summary = json.loads(capsys.readouterr().out)
        assert summary["switched_fraction"] == 1.0
        assert summary["rho"] == 1.0

    def test_same_seed_same_files(self, spec_path, tmp_path):
        args = ["simulate", "--spec", str(spec_path(KBM)), "--y", "0", "--n", "20", "--dt", "1e-3", "--horizon", "0.2", "--seed", "4", "--paths"]
        for name in ("one", "two"):
            assert main([*args, "--out", str(tmp_path / name)]) == 0
        for rel in ("simulate.jsonl", "summary.json", "paths/path_000003.csv", "trackers/tracker_000003.csv"):
            assert (tmp_path / "one" / rel).read_bytes() == (tmp_path / "two" / rel).read_bytes()

    def test_simulate_transform(self, spec_path, capsys):
        path = spec_path({**KBM, "transform": {"kind": "bessel_high", "y": 0}})
        assert main(["simulate", "--spec", str(path), "--x0", "0.5", "--n", "20", "--dt", "1e-3", "--horizon", "0.5", "--seed", "2"]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["transform"] == {"kind": "bessel_high", "y": 0.0}
        assert summary["n_paths"] == 20


class TestValidate:
    def test_vote(self):
        check = SuiteCheck("fake", lambda ctx, seed: [verdict(seed != 1)])
        ctx = SuiteContext(profile=Profile(n=10, dt=1e-2), alpha=0.01, workers=1)
        [entry] = run_check(check, ctx, [0, 1, 2])
        assert entry.passed
        assert entry.notes.startswith("2/3 seeds passed")

    def test_unvoted_runs_once(self):
        seen = []

        def record(ctx, seed):
            seen.append(seed)
            return [verdict(True)]

        ctx = SuiteContext(profile=Profile(n=10, dt=1e-2), alpha=0.01, workers=1)
        run_check(SuiteCheck("once", record, voted=False), ctx, [5, 6, 7])
        assert seen == [5]

    def test_inconclusive(self):
        def too_small(ctx, seed):
            raise SampleSizeError("too few samples")

        ctx = SuiteContext(profile=Profile(n=10, dt=1e-2), alpha=0.01, workers=1)
        [entry] = run_check(SuiteCheck("small", too_small), ctx, [0, 1, 2])
        assert entry.inconclusive
        assert not entry.passed

    def test_report_written(self, monkeypatch, tmp_path):
        monkeypatch.setitem(validate_suites.SUITES, "core", [SuiteCheck("fake", lambda ctx, seed: [verdict(True), verdict(False, "other")])])
        report = cmd_validate(ExperimentConfig(seed=3, suite="core", scale="quick", out=tmp_path))
        assert [e.name for e in report.entries] == ["fake check", "other"]
        assert not report.passed
        data = json.loads((tmp_path / "report.json").read_text())
        assert len(data["entries"]) == 2

    def test_failure_exit_code(self, monkeypatch):
        monkeypatch.setitem(validate_suites.SUITES, "core", [SuiteCheck("fake", lambda ctx, seed: [verdict(False)])])
        assert main(["validate", "--suite", "core", "--seed", "0"]) == 1

    def test_scale_quadrature_suite(self):
        ctx = SuiteContext(profile=Profile(n=10, dt=1e-2), alpha=0.01, workers=1)
        entries = validate_suites.numerics_scale(ctx, 0)
        assert all(e.passed for e in entries)

    @pytest.mark.slow
    def test_first_passage_suite(self):
        ctx = SuiteContext(profile=Profile(n=2000, dt=1e-3), alpha=0.01, workers=1)
        entries = run_check(SuiteCheck("first passage", validate_suites.core_first_passage), ctx, [7, 8, 9])
        assert len(entries) == 2
        assert all(e.passed for e in entries)

    def test_occupation_formula(self):
        ctx = SuiteContext(profile=Profile(n=200, dt=1e-3), alpha=0.01, workers=1)
        [entry] = validate_suites.numerics_occupation(ctx, 0)
        assert entry.passed
        assert entry.statistic <= 1e-6

    @pytest.mark.slow
    def test_entrance_launchers_agree(self):
        ctx = SuiteContext(profile=Profile(n=2000, dt=1e-3), alpha=0.01, workers=1)
        entries = run_check(SuiteCheck("entrance", validate_suites.entrance_launchers), ctx, [3, 4, 5])
        assert len(entries) == 3
        assert all(e.passed for e in entries)

    @pytest.mark.slow
    def test_ou_local_time_independent_of_exit_side_only_from_level(self):
        ctx = SuiteContext(profile=Profile(n=10_000, dt=1e-3), alpha=0.01, workers=1)
        at_level, displaced = run_check(SuiteCheck("independence", validate_suites.independence_ou), ctx, [11, 12, 13])
        assert at_level.passed
        assert displaced.passed
        assert "x=0.707" in displaced.name

    @pytest.mark.slow
    def test_bridge_pinning_suite(self):
        ctx = SuiteContext(profile=Profile(n=300, dt=1e-3), alpha=0.01, workers=1)
        entries = validate_suites.bridge_pinning(ctx, 2)
        reentry = [e for e in entries if "re-entry" in e.name]
        assert len(reentry) == 4
        assert all(e.passed and e.statistic == 0.0 for e in reentry)

import csv
import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from hankel_spectra import checks, cli
from hankel_spectra.checks import CheckResult
from hankel_spectra.cli import ConfigError, ExperimentConfig, dump_json, main, run_experiment


configs = st.builds(
    ExperimentConfig,
    experiment=st.sampled_from(["spectrum", "fit", "besov", "weak-besov"]),
    kernel=st.sampled_from(["log-model", "hilbert", "widom", "lacunary"]),
    alpha=st.one_of(st.none(), st.floats(0.01, 10, allow_nan=False)),
    gamma=st.one_of(st.none(), st.floats(1.01, 10, allow_nan=False)),
    N=st.one_of(st.none(), st.integers(1, 2 ** 20)),
    sizes=st.one_of(st.none(), st.lists(st.integers(1, 2 ** 20), max_size=5)),
    top=st.integers(1, 500),
    p=st.floats(0.01, 10, allow_nan=False),
    n_max=st.integers(4, 30),
    seed=st.integers(0, 2 ** 31),
)


@settings(max_examples=100, deadline=None)
@given(configs)
def test_config_round_trip(cfg):
    text = cfg.dumps()
    back = ExperimentConfig.loads(text)
    assert back == cfg
    assert back.dumps() == text


def test_config_rejects_unknown_fields():
    with pytest.raises(ConfigError):
        ExperimentConfig.loads('{"experiment": "spectrum", "kernal": "hilbert"}')
    with pytest.raises(ConfigError):
        ExperimentConfig.loads('{"kernel": "hilbert"}')
    with pytest.raises(ConfigError):
        ExperimentConfig.loads('{"experiment": "teleport"}')
    with pytest.raises(ConfigError):
        ExperimentConfig.loads("not json")
    with pytest.raises(ConfigError):
        ExperimentConfig.loads('{"experiment": "spectrum", "N": 2.5}')
    with pytest.raises(ConfigError):
        ExperimentConfig.loads('{"experiment": "besov", "kernel": "hilbert"}')


def test_bad_kernel_params_are_usage_errors(capsys):
    assert main(["spectrum", "--kernel", "hilbert", "--alpha", "1.0"]) == 1
    assert main(["spectrum", "--kernel", "nonexistent"]) == 1
    assert main(["spectrum", "--kernel", "log-model", "--alpha", "-1"]) == 1
    assert "error" in capsys.readouterr().err


def test_dump_json_17_digits():
    text = dump_json({"x": 0.1, "y": [1 / 3, math.inf, math.nan], "z": True, "k": 3})
    doc = json.loads(text)
    assert float(doc["x"]) == 0.1
    assert doc["y"][0] == 1 / 3
    assert doc["z"] is True and doc["k"] == 3
    assert "0.33333333333333331" in text


def test_spectrum_table(tmp_path):
    out = tmp_path / "run"
    code = main(["spectrum", "--kernel", "log-model", "--alpha", "1.0", "--N", "256",
                 "--top", "20", "--out", str(out)])
    assert code == 0
    rows = list(csv.reader((out / "spectrum.csv").open()))
    assert rows[0] == ["n", "s_n", "converged"]
    assert len(rows) == 21
    assert [r[0] for r in rows[1:]] == [str(i) for i in range(1, 21)]
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["N"] == 256
    assert report["status"] == "ok"
    assert float(rows[1][1]) == report["payload"]["s"][0]


def test_config_file_and_inline_are_exclusive(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(ExperimentConfig("spectrum", kernel="hilbert", N=64, top=5).dumps())
    assert main(["spectrum", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["spectrum", "--config", str(cfg), "--N", "32"]) == 1
    assert main(["besov", "--config", str(cfg)]) == 1
    assert main(["spectrum", "--config", str(tmp_path / "missing.json")]) == 1


def test_fit_reports_target(tmp_path):
    cfg = ExperimentConfig("fit", kernel="log-model", alpha=1.0, N=512, top=60, window=[5, 40])
    rep = run_experiment(cfg)
    assert rep.payload["v_alpha"] == pytest.approx(0.5, rel=1e-14)
    assert "power_fit" in rep.payload


def test_besov_and_weak_experiments():
    rep = run_experiment(ExperimentConfig("besov", kernel="lacunary", gamma=0.8, p=1.25, n_max=10))
    terms = rep.payload["terms"]
    assert all(0.99 <= b / a <= 1.01 for a, b in zip(terms[4:10], terms[5:11]))
    rep = run_experiment(ExperimentConfig("weak-besov", kernel="lacunary", gamma=0.8, p=1.25,
                                          n_max=10))
    assert rep.payload["value"] > 12.0


def _fake(status):
    def check():
        return CheckResult("fake", "AC-0", "fake gate", status, {"x": 1.0}, "")
    return check


@pytest.mark.parametrize("status,code", [("pass", 0), ("fail", 2), ("inconclusive", 3)])
def test_verify_exit_codes(monkeypatch, capsys, status, code):
    monkeypatch.setitem(checks.CHECKS, "fake", _fake(status))
    assert main(["verify", "--check", "fake"]) == code
    assert "[AC-0]" in capsys.readouterr().out


def test_verify_real_check(capsys):
    assert main(["verify", "--check", "constants"]) == 0
    out = capsys.readouterr().out
    assert "[AC-12] PASS" in out
    doc = json.loads(out[out.index("{"):])
    assert doc["payload"]["constants"]["status"] == "pass"


def test_verify_unknown_check():
    assert main(["verify", "--check", "nope"]) == 1
    assert main(["verify"]) == 1


def test_every_check_has_distinct_tag():
    tags = {checks.run_check(n).tag for n in ("constants", "hs-identity", "rank-one")}
    assert tags == {"AC-12", "AC-3", "AC-4"}


def test_no_subcommand_is_usage_error():
    assert main([]) == 1


def test_bench_contract():
    res = cli.bench_matvec([2 ** 10, 2 ** 12, 2 ** 13, 2 ** 14, 2 ** 15, 2 ** 16], repeats=3)
    rows = res["rows"]
    assert [r["N"] for r in rows] == [2 ** 10, 2 ** 12, 2 ** 13, 2 ** 14, 2 ** 15, 2 ** 16]
    assert all(r["dense"] is None for r in rows if r["N"] > 4096)
    assert all(r["dense"] is not None for r in rows if r["N"] <= 4096)
    if res["crossover"] is not None:
        first = next(r for r in rows if r["dense"] is not None and r["fast"] < r["dense"])
        assert first["N"] == res["crossover"]
    assert res["scaling_exponent"] is not None
    with pytest.raises(ConfigError):
        cli.bench_matvec([2 ** 23])


def test_bench_writes_table(tmp_path):
    assert main(["bench", "--sizes", "1024", "2048", "--out", str(tmp_path)]) == 0
    rows = list(csv.reader((tmp_path / "bench.csv").open()))
    assert rows[0] == ["N", "fast_seconds", "dense_seconds"]
    assert len(rows) == 3


def test_reports_are_deterministic():
    cfg = ExperimentConfig("spectrum", kernel="log-model", alpha=1.0, N=8192, top=30)
    a, b = run_experiment(cfg), run_experiment(cfg)
    assert a.numeric_payload() == b.numeric_payload()

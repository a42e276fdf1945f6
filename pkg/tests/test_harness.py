import json

import pytest

from biharm_pml.errors import ConfigError
from biharm_pml.harness import (
    CSV_COLUMNS,
    StudySpec,
    build_spec,
    fit_slope,
    fmt,
    load_spec,
    read_config,
    run_study,
    study_csv,
    verify,
)
from biharm_pml.modal import ProblemConfig
from biharm_pml.pml import PmlProfile


def rows(text):
    return [line.split(",") for line in text.strip().splitlines()]


def test_fmt_full_precision():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(None) == ""
    assert fmt(float("nan")) == ""


@pytest.mark.parametrize(
    "kw",
    [dict(values=()), dict(values=(1.0, 1.0)), dict(values=(2.0, 1.0)), dict(axis="h1"),
     dict(scenario="Cavity"), dict(norms=("err_l2",)), dict(axis="delta", values=(-1.0, 1.0)),
     dict(axis="m", values=(2.5,)), dict(axis="theta", values=(1.0, 2.0)), dict(h0=2.0)],
)
def test_spec_validation(kw):
    with pytest.raises(ConfigError):
        StudySpec(**kw)


def test_config_roundtrip(tmp_path):
    path = tmp_path / "study.ini"
    path.write_text("[study]\nkappa = 1.5\ntruncation = 4\nsigma0 = 5\nm = 3\naxis = sigma0\n"
                    "values = 1, 2, 4\nscenario = EmptyStrip\nseed = 7\namplitude = 2+1j\n")
    spec = load_spec(path)
    assert spec.cfg.kappa == 1.5 and spec.cfg.truncation == 4 and spec.cfg.amplitude == 2 + 1j
    assert spec.profile == PmlProfile(sigma0=5.0, m=3)
    assert spec.axis == "sigma0" and spec.values == (1.0, 2.0, 4.0)
    assert spec.scenario == "EmptyStrip" and spec.seed == 7
    over = load_spec(path, {"kappa": "2", "values": None})
    assert over.cfg.kappa == 2.0 and over.values == (1.0, 2.0, 4.0)


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        read_config(tmp_path / "missing.ini")
    bad = tmp_path / "bad.ini"
    bad.write_text("[other]\nkappa = 1\n")
    with pytest.raises(ConfigError):
        read_config(bad)
    bad.write_text("[study]\nkapa = 1\n")
    with pytest.raises(ConfigError):
        read_config(bad)
    with pytest.raises(ConfigError):
        build_spec({"kappa": "one"})
    with pytest.raises(ConfigError):
        build_spec({"truncation": "2.5"})


def test_fit_slope():
    assert fit_slope([1, 2, 3], [1e-1, 1e-2, 1e-3]) == pytest.approx(-2.302585092994046)
    assert fit_slope([1], [0.1]) is None
    assert fit_slope([1, 2, 3], [1e-1, 1e-14, 1e-15]) is None
    assert fit_slope([1, 2, 3, 4], [1e-1, 1e-2, 1e-3, 1e-20]) == pytest.approx(-2.302585092994046)


def test_default_sweep_shape():
    res = run_study(StudySpec())
    text = study_csv(res)
    table = rows(text)
    assert tuple(table[0]) == CSV_COLUMNS
    assert len(table) == 1 + 6 + 1
    assert all(r[CSV_COLUMNS.index("status")] == "ok" for r in table[1:-1])
    assert all(r[CSV_COLUMNS.index("wall_ms")] == "" for r in table[1:])
    summary = table[-1]
    assert summary[CSV_COLUMNS.index("status")] == "summary"
    assert float(summary[CSV_COLUMNS.index("predicted_slope")]) == pytest.approx(-2 * 1.25**0.5)
    assert float(summary[CSV_COLUMNS.index("slope")]) < 0


def test_single_point_sweep_has_no_slope():
    res = run_study(StudySpec(values=(1.0,)))
    assert res.slope is None
    assert len(rows(study_csv(res))) == 3


def test_resonant_row_isolated():
    spec = StudySpec(cfg=ProblemConfig(truncation=3), axis="theta", values=(0.0, 0.3, 0.5))
    res = run_study(spec)
    assert [r.status for r in res.records] == ["resonance", "ok", "ok"]
    assert res.predicted_slope is None


def test_degenerate_row_isolated():
    spec = StudySpec(cfg=ProblemConfig(truncation=3), values=(1e-6, 1.0))
    res = run_study(spec)
    assert [r.status for r in res.records] == ["degenerate_denominator", "ok"]


def test_timing_flag():
    calls = iter(range(100))
    res = run_study(StudySpec(values=(1.0,), timing=True, cfg=ProblemConfig(truncation=1)), clock=lambda: next(calls))
    assert res.records[0].wall_ms == 1000.0


def test_sweep_is_deterministic():
    spec = StudySpec(cfg=ProblemConfig(truncation=5))
    assert study_csv(run_study(spec)) == study_csv(run_study(spec))


@pytest.mark.parametrize("cfg", [ProblemConfig(), ProblemConfig(mu=0.0)])
def test_verify_passes(cfg):
    rep = verify(cfg, PmlProfile())
    assert rep.ok, rep.to_json()
    payload = json.loads(rep.to_json())
    assert payload["ok"] and len(payload["checks"]) == 6


def test_verify_degenerate_profile_named_failure():
    rep = verify(ProblemConfig(), PmlProfile(delta1=1e-6, delta2=1e-6))
    assert not rep.ok
    assert "closed_form_vs_solve" in rep.failures()
    failed = {c.name: c.detail for c in rep.checks if not c.passed}
    assert failed["closed_form_vs_solve"].startswith("DegenerateDenominatorError")

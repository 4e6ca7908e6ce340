import io
import json
import math

import numpy as np
import pytest

from overdamp import study
from overdamp.errors import ConfigError, DomainError, SingularityError
from overdamp.model import ExternalPotential, InteractionKernel, SimConfig
from overdamp.study import (
    CSV_HEADER,
    GammaPoint,
    RateFitResult,
    RateStudySpec,
    emit_records,
    emit_summary,
    fit_loglog_slope,
    read_csv,
    render_csv,
    render_summary,
    run_rate_study,
)

SMALL = SimConfig(n_particles=150, dim=1, t_final=0.5, dt=0.01, seed=5,
                  potential=ExternalPotential.harmonic(1), kernel=InteractionKernel.smooth())


# --- fitting -----------------------------------------------------------------

def test_fit_examples():
    slope, _, _ = fit_loglog_slope([(1, 4), (2, 1)])
    assert slope == pytest.approx(-2.0, abs=1e-14)
    slope, _, r2 = fit_loglog_slope([(1, 7), (2, 7), (4, 7)])
    assert slope == 0.0 and r2 == 1.0
    xs = [1.0, 2.0, 3.5, 8.0, 20.0]
    slope, intercept, r2 = fit_loglog_slope([(x, 3 * x**1.5) for x in xs])
    assert slope == pytest.approx(1.5, abs=1e-12)
    assert intercept == pytest.approx(math.log(3), abs=1e-12)
    assert r2 == pytest.approx(1.0, abs=1e-12)


def test_fit_exact_inverse_square():
    grid = [2.0, 4.0, 8.0, 16.0, 32.0]
    slope, _, _ = fit_loglog_slope([(g, 0.37 / g**2) for g in grid])
    assert abs(slope + 2) <= 1e-12


@pytest.mark.parametrize("pts", [[(1, 1)], [(0, 1), (1, 2)], [(1, -1), (2, 1)], [(2, 1), (2, 3)]])
def test_fit_rejects_bad_points(pts):
    with pytest.raises(DomainError):
        fit_loglog_slope(pts)


# --- grid validation ---------------------------------------------------------

@pytest.mark.parametrize("grid", [(2, 4), (4, 2, 8), (0.5, 2, 4), (2, 2, 4)])
def test_spec_rejects_bad_grids(grid):
    with pytest.raises(ConfigError):
        RateStudySpec(SMALL, grid)


def test_spec_normalizes_replicas():
    spec = RateStudySpec(SMALL, (2, 4, 8), replicas=3)
    assert spec.base.replicas == 3


# --- serialization -----------------------------------------------------------

def synthetic_result():
    pts = [GammaPoint(g, 0.1 / g**2 + 1e-17 * g, 0.1 / 3**0.5 / g**2, 1.0, 1.0) for g in (2.0, 4.0, 8.0)]
    slope, icpt, r2 = fit_loglog_slope([(p.gamma, p.sup_msd) for p in pts])
    return RateFitResult(slope, icpt, r2, pts, SMALL.with_(kernel=InteractionKernel.newtonian(1, 0.3)))


def test_csv_shape_and_round_trip():
    res = synthetic_result()
    text = render_csv(res)
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 4
    back = read_csv(io.StringIO(text))
    for row, p in zip(back, res.per_gamma):
        assert (row["gamma"], row["sup_msd"], row["mc_stderr"]) == (p.gamma, p.sup_msd, p.mc_stderr)
        assert (row["n"], row["dim"], row["T"], row["dt"], row["integrator"], row["eps"]) == (
            150, 1, 0.5, 0.01, "exp", 0.3)


def test_summary_round_trip(tmp_path):
    res = synthetic_result()
    path = tmp_path / "s.json"
    emit_summary(res, path)
    doc = json.loads(path.read_text())
    assert set(doc) == {"slope", "intercept", "r_squared", "per_gamma"}
    assert doc["slope"] == res.slope
    assert [p["sup_msd"] for p in doc["per_gamma"]] == [p.sup_msd for p in res.per_gamma]


def test_empty_result_is_rejected():
    empty = RateFitResult(0.0, 0.0, 1.0, [], SMALL)
    with pytest.raises(DomainError):
        render_csv(empty)
    with pytest.raises(DomainError):
        render_summary(empty)


def test_write_failure_names_path(tmp_path):
    bad = tmp_path / "missing" / "out.csv"
    with pytest.raises(OSError, match="missing"):
        emit_records(synthetic_result(), bad)


# --- running -----------------------------------------------------------------

def test_study_is_deterministic():
    spec = RateStudySpec(SMALL, (2, 4, 8), replicas=2, record_count=8)
    a, b = run_rate_study(spec), run_rate_study(spec)
    assert render_csv(a) == render_csv(b)
    assert render_summary(a) == render_summary(b)


def test_small_study_decreases_in_gamma():
    spec = RateStudySpec(SMALL, (2, 4, 8, 16), replicas=4, record_count=16)
    res = run_rate_study(spec)
    e = [p.sup_msd for p in res.per_gamma]
    assert all(b < a for a, b in zip(e, e[1:]))
    assert len(res.per_gamma) == 4
    assert -2.6 <= res.slope <= -1.4


def test_replica_count_changes_estimate_within_noise():
    grid = (2, 4, 8)
    small = run_rate_study(RateStudySpec(SMALL, grid, replicas=4, record_count=16))
    large = run_rate_study(RateStudySpec(SMALL, grid, replicas=8, record_count=16))
    for p, q in zip(small.per_gamma, large.per_gamma):
        assert abs(p.sup_msd - q.sup_msd) < 3 * math.hypot(p.mc_stderr, q.mc_stderr)


def test_noise_dominated_estimate_warns(monkeypatch):
    values = iter([(1.0, 1, 1), (1.1, 1, 1), (0.5, 1, 1), (0.6, 1, 1), (1e-9, 1, 1), (0.3, 1, 1)])
    monkeypatch.setattr(study, "replica_gap", lambda cfg, r, count: next(values))
    with pytest.warns(RuntimeWarning, match="increase replicas"):
        run_rate_study(RateStudySpec(SMALL, (2, 4, 8), replicas=2))


def test_simulation_abort_reports_gamma_and_replica():
    base = SMALL.with_(dim=2, n_particles=3, x0_var=0.0, kernel=InteractionKernel.newtonian(1, 0.0))
    with pytest.raises(SingularityError) as info:
        run_rate_study(RateStudySpec(base, (2, 4, 8), replicas=2))
    assert info.value.gamma == 2.0 and info.value.replica == 0
    assert "gamma=2.0" in str(info.value)


def test_second_moments_recorded():
    res = run_rate_study(RateStudySpec(SMALL, (2, 4, 8), replicas=2, record_count=4))
    for p in res.per_gamma:
        assert 0 < p.sup_moment2_kinetic < 10
        assert 0 < p.sup_moment2_overdamped < 10
        assert np.isfinite(p.mc_stderr) and p.mc_stderr >= 0

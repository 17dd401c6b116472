import numpy as np
import pytest
from scipy.special import gamma

from check_report import CheckReport
from errors import QuadratureError, TailBoundError
from lax import transmission_amplitude
from thermo import (
    AMPLITUDE_COLUMNS,
    PROFILE_COLUMNS,
    KernelTable,
    _cutoff,
    a_n_realspace,
    amplitude_log_derivative,
    amplitude_regularized,
    amplitude_rows_to_csv,
    amplitude_scan,
    bulk_cumulative,
    bulk_density_closed_form,
    bulk_quantile,
    check_amplitude_chain,
    check_fourier_convention,
    check_gamma_identity,
    check_quantization_phase,
    density,
    hole_dispersion,
    hole_momentum_closed_form,
    inverse_even,
    kernel,
    log_amplitude_closed_form,
    log_derivative_closed_form,
    profile_to_csv,
    profile_to_dict,
    realspace_component,
    trapezoid,
)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_a_n_realspace_is_inverse_of_its_kernel(n):
    table = KernelTable(2)
    for lam in (0.0, 0.7, -2.5):
        got = inverse_even(lambda w: float(table.a(n, w)), lam)
        assert got == pytest.approx(float(a_n_realspace(n, lam)), rel=1e-8)


@pytest.mark.parametrize("rank", [2, 3, 4])
def test_sigma0_zero_mode(rank):
    table = KernelTable(rank)
    for k in range(1, rank):
        assert float(table.sigma0(k, 0.0)) == pytest.approx((rank - k) / rank)


def test_kernel_dispatch():
    table = KernelTable(3)
    assert kernel(table, "a", 2.0, n=2) == pytest.approx(np.exp(-2.0))
    assert float(kernel(table, "frak_a", 1.0, sign="+")) == 0.0
    assert float(kernel(table, "R", 0.7, j=1, jp=3)) == 0.0
    with pytest.raises(ValueError):
        kernel(table, "nope", 1.0)
    with pytest.raises(ValueError):
        table.sigma0(3, 0.1)


@pytest.mark.parametrize("rank,k", [(2, 1), (3, 1), (3, 2)])
def test_bulk_density_matches_closed_form(rank, k):
    table = KernelTable(rank)
    for lam in (0.0, 0.7, 2.0):
        got = realspace_component(table, "sigma0", lam, k).real
        assert got == pytest.approx(bulk_density_closed_form(rank, k, lam), abs=1e-9)


@pytest.mark.parametrize("rank", [2, 3, 4])
def test_bulk_density_integrates_to_filling(rank):
    grid = np.linspace(-40, 40, 8001)
    for k in range(1, rank):
        total = trapezoid(bulk_density_closed_form(rank, k, grid), grid)
        assert total == pytest.approx((rank - k) / rank, abs=1e-6)
        assert float(KernelTable(rank).sigma0(k, 0.0)) == pytest.approx(total, abs=1e-6)


def test_rank4_bulk_density_matches_closed_form():
    table = KernelTable(4)
    for k in (1, 2, 3):
        for lam in (0.0, 1.3):
            got = realspace_component(table, "sigma0", lam, k).real
            assert got == pytest.approx(bulk_density_closed_form(4, k, lam), abs=1e-8)


def test_bulk_cumulative_and_quantile():
    for rank, k in ((2, 1), (3, 1), (3, 2)):
        total = (rank - k) / rank
        assert bulk_cumulative(rank, k, 60.0) == pytest.approx(total, abs=1e-12)
        assert bulk_cumulative(rank, k, -60.0) == pytest.approx(0.0, abs=1e-12)
        for q in (0.1 * total, 0.5 * total, 0.9 * total):
            assert bulk_cumulative(rank, k, bulk_quantile(rank, k, q)) == pytest.approx(q, abs=1e-12)
    with pytest.raises(ValueError):
        bulk_quantile(2, 1, 0.5)


def test_bulk_column_normalization():
    table = KernelTable(3)
    grid = np.linspace(-12, 12, 241)
    bulk = [realspace_component(table, "sigma0", x, 1).real for x in grid]
    assert trapezoid(bulk, grid) == pytest.approx(2 / 3, abs=1e-6)


def test_hole_momentum_matches_cumulative():
    table = KernelTable(2)
    energy, p = hole_dispersion(table, 1, 0.8)
    assert energy == pytest.approx(bulk_density_closed_form(2, 1, 0.8), abs=1e-9)
    assert p == pytest.approx(hole_momentum_closed_form(2, 1, 0.8), abs=1e-7)
    assert hole_dispersion(table, 1, -0.8)[1] == pytest.approx(-p, abs=1e-9)
    assert hole_dispersion(table, 1, 0.0) == (pytest.approx(0.5, abs=1e-9), 0.0)


def test_fourier_convention():
    assert check_fourier_convention(1, [0.0, 0.7, 2.5]).passed
    assert check_fourier_convention(2, [0.3, 1.0]).passed


@pytest.mark.parametrize("mu", [0.5, 1.0, 2.0, 5.0, 20.0])
def test_gamma_identity(mu):
    report = check_gamma_identity(mu)
    assert report.passed, report.details
    assert report.block == "normalized"


def test_gamma_identity_needs_positive_mu():
    with pytest.raises(ValueError):
        check_gamma_identity(-1.0)


@pytest.mark.parametrize("rank", [2, 3])
@pytest.mark.parametrize("sign", ["+", "-"])
def test_regularized_integral_reproduces_gamma_ratio(rank, sign):
    table = KernelTable(rank)
    for lam in (-1.5, 0.0, 0.4, 3.0):
        closed = transmission_amplitude(rank, sign, lam)
        assert np.exp(log_amplitude_closed_form(rank, sign, lam)) == pytest.approx(closed, rel=1e-12)
        assert np.exp(amplitude_regularized(table, sign, lam)) == pytest.approx(closed, rel=1e-6)
        d = amplitude_log_derivative(table, sign, lam)
        assert d == pytest.approx(log_derivative_closed_form(rank, sign, lam), abs=1e-6)


def test_rank3_transmission_at_zero():
    value = np.exp(amplitude_regularized(KernelTable(3), "+", 0.0))
    assert value == pytest.approx(gamma(1 / 6) / gamma(5 / 6), rel=1e-6)


@pytest.mark.parametrize("sign", ["+", "-"])
def test_rank4_amplitudes_match_closed_form(sign):
    rows = amplitude_scan(4, sign, list(np.linspace(-5, 5, 11)))
    assert [r["flag"] for r in rows] == ["ok"] * 11
    assert max(r["amplitude_residual"] for r in rows) <= 1e-6


@pytest.mark.parametrize("sign", ["+", "-"])
def test_log_derivative_decays_like_inverse_lambda(sign):
    rank, lam = 2, 20.0
    bound = 2 / (rank * lam)
    assert abs(log_derivative_closed_form(rank, sign, lam)) <= bound
    assert abs(amplitude_log_derivative(KernelTable(rank), sign, lam)) <= bound


def test_complex_lambda_inside_strip():
    table = KernelTable(2)
    lam = 0.3 + 0.2j
    for sign in ("+", "-"):
        closed = transmission_amplitude(2, sign, lam)
        assert np.exp(amplitude_regularized(table, sign, lam)) == pytest.approx(closed, rel=1e-6)


@pytest.mark.parametrize("sign", ["+", "-"])
def test_amplitude_chain(sign):
    report = check_amplitude_chain(KernelTable(2), sign, 0.5)
    assert isinstance(report, CheckReport)
    assert report.passed, report.details


def test_quantization_phase():
    report = check_quantization_phase(KernelTable(2), "-", -1.0, 1.0)
    assert report.passed, report.residual


def test_tail_bound_failure():
    with pytest.raises(TailBoundError) as info:
        _cutoff(lambda w: 1.0 / (1.0 + w), "slow tail")
    assert isinstance(info.value, QuadratureError)


def test_amplitude_scan_flags_pole(tmp_path):
    rows = amplitude_scan(2, "+", [-0.5j, 0.5, 1.0])
    assert rows[0]["flag"] == "pole"
    assert [r["flag"] for r in rows[1:]] == ["ok", "ok"]
    path = amplitude_rows_to_csv(rows, tmp_path / "amp.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(AMPLITUDE_COLUMNS)
    assert lines[1].endswith(",+,,pole")
    assert len(lines) == 4


def test_density_with_hole_and_defect(tmp_path):
    table = KernelTable(2)
    minus = density(table, 1, "-", [0.0, 0.5], hole=0.0, theta=0.0, sites=100)
    plus = density(table, 1, "+", [0.0, 0.5], hole=0.0, theta=0.0, sites=100)
    assert minus.bulk[0] == pytest.approx(0.5, abs=1e-9)
    expected = 0.5 + (minus.backflow[0] + minus.defect[0]) / 100
    assert minus.values[0] == pytest.approx(expected, abs=1e-9)
    assert np.array_equal(minus.bulk, plus.bulk)
    assert np.array_equal(minus.backflow, plus.backflow)
    assert not np.allclose(minus.defect, plus.defect)
    doc = profile_to_dict(minus)
    assert doc["sites"] == 100 and len(doc["rows"]) == 2
    path = profile_to_csv(minus, tmp_path / "density.csv")
    assert path.read_text().splitlines()[0] == ",".join(PROFILE_COLUMNS)


def test_density_rejects_bad_input():
    with pytest.raises(ValueError):
        density(KernelTable(2), 1, "-", [0.0], sites=0)
    with pytest.raises(ValueError):
        density(KernelTable(2), 1, "-", [np.inf])


def test_amplitude_scan_honours_pole_epsilon():
    # T+ at lambda=-0.3i sits 0.1 away from the Gamma pole at zero
    assert amplitude_scan(2, "+", [-0.3j])[0]["flag"] != "pole"
    assert amplitude_scan(2, "+", [-0.3j], eps=0.5)[0]["flag"] == "pole"

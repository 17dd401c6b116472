import json

import numpy as np
import pytest

from bethe import (
    BetheState,
    BetheVariant,
    SolveOptions,
    bae_jacobian,
    bae_residual,
    counting_density,
    counting_function,
    defect_factor,
    elementary_function,
    fermi_sea_state,
    load_state,
    save_state,
    solve_bae,
    state_from_json,
    state_to_json,
)
from errors import BranchTrackingError, PoleProximityError, RootCollisionError, StateFormatError
from thermo import bulk_density_closed_form

ONE_MAGNON = np.roots([1, 1j - 1, 0.5j - 0.25])


def one_magnon(seed=-0.3 + 0.1j):
    return BetheState(2, 1, 0j, BetheVariant.L_DEFECT, ((seed,),), ((0.0,),))


def test_elementary_and_defect_factors():
    assert elementary_function(0, 3.0) == 1
    assert elementary_function(2, 0.0) == pytest.approx(-1)
    assert defect_factor("+", 1.0) == pytest.approx(1 + 0.5j)
    assert defect_factor("-", 1.0) == pytest.approx(1 / (1 - 0.5j))
    with pytest.raises(PoleProximityError):
        elementary_function(2, 1j)
    with pytest.raises(PoleProximityError):
        defect_factor("-", 0.5j)


def test_level_bookkeeping():
    state = BetheState(3, 4, variant=BetheVariant.LHAT_DEFECT, roots=((0.1, 0.2), (0.3,)))
    assert state.counts == [2, 1]
    assert state.defect_level == 2
    assert state.level(0) == (0j,) * 4
    assert state.level(3) == ()
    assert state.with_flat([1, 2, 3]).roots == ((1 + 0j, 2 + 0j), (3 + 0j,))


def test_state_validation():
    with pytest.raises(StateFormatError):
        BetheState(1, 2)
    with pytest.raises(StateFormatError):
        BetheState(3, 2, roots=((0.1,),))
    with pytest.raises(StateFormatError):
        BetheState(2, 2, roots=((0.1,),), quantum_numbers=((0.5, 1.5),))
    with pytest.raises(StateFormatError):
        BetheState(2, 1, roots=((0.1,),), quantum_numbers=(("x",),))
    with pytest.raises(StateFormatError):
        BetheState(2, 1, roots=(("x",),))
    doc = {"schema": 1, "rank": 2, "sites": 1, "levels": [{"k": 1, "roots": [[0.1, 0.0]], "quantum_numbers": ["x"]}]}
    with pytest.raises(StateFormatError):
        state_from_json(doc)


def test_one_magnon_converges_to_quadratic_root():
    result = solve_bae(one_magnon())
    root = result.state.roots[0][0]
    assert min(abs(root - r) for r in ONE_MAGNON) < 1e-9
    assert result.residual.max_abs <= 1e-10
    assert bae_residual(result.state).max_abs <= 1e-10
    assert result.trace[-1] == result.residual.max_abs


def test_two_magnons_on_four_sites():
    result = solve_bae(BetheState(2, 4, roots=((0.5, -0.5),)))
    assert result.residual.max_abs <= 1e-10
    assert bae_residual(result.state).max_abs <= 1e-10
    a, b = result.state.roots[0]
    assert abs(a - b) > 1e-3


def test_residual_modes_agree():
    state = solve_bae(BetheState(2, 4, roots=((0.5, -0.5),))).state
    with_self = bae_residual(state, include_self=True).values
    without = bae_residual(state, include_self=False).values
    assert np.allclose(with_self, without, atol=1e-12)
    off = state.with_flat([0.4, -0.7 + 0.1j])
    assert np.allclose(
        np.exp(bae_residual(off, include_self=True).values), np.exp(bae_residual(off, include_self=False).values)
    )


def test_solved_seed_needs_no_more_than_two_steps():
    solved = solve_bae(one_magnon()).state
    again = solve_bae(solved)
    assert again.iterations <= 2
    assert again.residual.max_abs <= 1e-10


def test_exact_root_has_zero_residual():
    for r in ONE_MAGNON:
        assert bae_residual(one_magnon(complex(r))).max_abs < 1e-12


def test_least_squares_fallback_agrees():
    newton = solve_bae(one_magnon()).state.roots[0][0]
    lm = solve_bae(one_magnon(), method="lm").state.roots[0][0]
    assert abs(newton - lm) < 1e-9


def test_empty_state_is_trivially_solved():
    result = solve_bae(BetheState(3, 5))
    assert result.iterations == 0
    assert result.residual.max_abs == 0.0


def test_coalesced_pair_reports_collision():
    state = BetheState(2, 4, roots=((0.25, 0.25),))
    with pytest.raises(RootCollisionError) as info:
        solve_bae(state, SolveOptions(delta=1e-9))
    assert str(info.value).startswith("Jacobian singular: roots 0,1 at distance < 1e-09")
    assert info.value.pair == (0, 1)


def test_unknown_method():
    with pytest.raises(ValueError):
        solve_bae(one_magnon(), method="bisect")


@pytest.mark.parametrize("variant", list(BetheVariant))
def test_jacobian_matches_finite_differences(variant):
    state = BetheState(3, 3, 0.2, variant, ((0.4 + 0.1j, -0.6), (0.1 - 0.2j,)))
    jac = bae_jacobian(state)
    x = state.flat()
    h = 1e-6
    for col in range(x.size):
        step = np.zeros_like(x)
        step[col] = h
        plus = np.array(bae_residual(state.with_flat(x + step)).values)
        minus = np.array(bae_residual(state.with_flat(x - step)).values)
        diff = plus - minus
        diff = diff.real + 1j * (diff.imag - 2 * np.pi * np.round(diff.imag / (2 * np.pi)))
        assert np.allclose(diff / (2 * h), jac[:, col], atol=1e-6)


def test_json_round_trip(tmp_path):
    state = solve_bae(one_magnon()).state
    path = save_state(state, tmp_path / "state.json", metadata={"note": "x"})
    doc = json.loads(path.read_text())
    assert doc["schema"] == 1 and doc["metadata"] == {"note": "x"}
    back = load_state(path)
    assert back.roots == state.roots
    assert back.quantum_numbers == ((0.0,),)
    assert state_from_json(state_to_json(back)).variant is BetheVariant.L_DEFECT


def test_bad_documents_are_rejected(tmp_path):
    with pytest.raises(StateFormatError):
        state_from_json({"schema": 2, "rank": 2, "sites": 1, "levels": []})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(StateFormatError):
        load_state(bad)


def test_fermi_sea_filling():
    state = fermi_sea_state(3, 12)
    assert state.counts == [8, 4]
    assert all(x.imag == 0 for level in state.roots for x in level)
    assert state.quantum_numbers[1] == (-1.5, -0.5, 0.5, 1.5)


@pytest.mark.parametrize("rank,sites", [(2, 3), (2, 7), (4, 2), (3, 5)])
def test_fermi_sea_odd_fillings_stay_inside_the_density(rank, sites):
    state = fermi_sea_state(rank, sites)
    assert state.counts == [sites * (rank - k) // rank for k in range(1, rank)]
    assert all(np.isfinite(x.real) for level in state.roots for x in level)


def test_counting_function_odd_and_increasing():
    state = fermi_sea_state(2, 40)
    grid = np.linspace(-3, 3, 31)
    h = np.array([counting_function(state, 1, x) for x in grid])
    assert np.all(np.diff(h) > 0)
    assert np.allclose(h, -h[::-1], atol=1e-12)


def test_counting_density_approaches_bulk_density():
    state = fermi_sea_state(2, 200)
    assert state.counts == [100]
    for lam in (0.5, 1.0):
        assert counting_density(state, 1, lam) == pytest.approx(bulk_density_closed_form(2, 1, lam), abs=2e-3)


def test_counting_function_branch_cut():
    state = BetheState(2, 2, roots=((0.2 + 1.5j,),))
    with pytest.raises(BranchTrackingError):
        counting_function(state, 1, 0.2)

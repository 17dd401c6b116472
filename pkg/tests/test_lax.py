import numpy as np
import pytest
from scipy.special import gamma

from errors import DimensionCapError, DimensionError, IndexRangeError, PoleProximityError
from lax import (
    ChainSpec,
    LaxSpec,
    LaxVariant,
    NbarReference,
    bulk_blocks,
    closed_sector_mask,
    conjugate_transmission_matrix,
    defect_blocks,
    defect_operator,
    l_hat_matrix,
    l_matrix,
    monodromy,
    monodromy_blocks,
    nbar_operator,
    r_matrix,
    s_amplitude,
    s_matrix,
    transfer_matrix,
    transmission_amplitude,
    transmission_matrix,
    two_aux,
    vacuum_weights,
)
from tensor_core import FockSpace, Ordering, chebyshev, embed, identity, kron, matrix_to_blocks, permutation_op


def test_r_matrix_inversion_relation():
    lam = 0.3 - 0.7j
    prod = r_matrix(3, lam) @ r_matrix(3, -lam)
    assert chebyshev(prod + (1 + lam * lam) * identity(9)) < 1e-13
    assert chebyshev(r_matrix(2, 0) - 1j * permutation_op(2)) == 0.0


def test_bulk_blocks_reassemble_r_matrix():
    lam = 1.1 + 0.2j
    for n in (2, 3):
        blocks = bulk_blocks(n, lam)
        # R acts on aux (x) site, the block (a, b) being <a| R |b> on the aux factor
        assert np.allclose(matrix_to_blocks(r_matrix(n, lam), n), blocks)


def test_transmission_amplitude_closed_forms():
    assert transmission_amplitude(3, "+", 0) == pytest.approx(gamma(1 / 6) / gamma(5 / 6))
    assert transmission_amplitude(2, "-", 0) == pytest.approx(gamma(0.75) / gamma(0.25))
    with pytest.raises(ValueError):
        transmission_amplitude(2, "x", 0)


def test_transmission_amplitude_pole_guard():
    with pytest.raises(PoleProximityError) as info:
        transmission_amplitude(2, "+", -0.5j)
    assert info.value.distance < 1e-8


def test_s_amplitude_unimodular_on_real_line():
    for lam in (-3.0, -0.4, 0.0, 0.9, 4.2):
        assert abs(s_amplitude(3, lam)) == pytest.approx(1.0, abs=1e-12)
    assert s_amplitude(2, 0.0) == pytest.approx(1.0)
    with pytest.raises(PoleProximityError):
        s_matrix(2, 1j)


def test_lax_variant_guards():
    fock = FockSpace(1, 3)
    with pytest.raises(DimensionError):
        l_matrix(LaxSpec(2, LaxVariant.DEFECT_LHAT), fock, 0.1)
    with pytest.raises(DimensionError):
        l_hat_matrix(LaxSpec(2, LaxVariant.DEFECT_L), fock, 0.1)
    with pytest.raises(DimensionError):
        l_matrix(LaxSpec(3), fock, 0.1)


def test_effective_shift_counts_antinormal_constant():
    assert LaxSpec(3, ordering=Ordering.ANTINORMAL, shift=0.0).effective_shift == 2.0
    assert LaxSpec(3, shift=1.0).effective_shift == 1.0


@pytest.mark.parametrize("variant", list(LaxVariant))
@pytest.mark.parametrize("ordering", list(Ordering))
def test_vacuum_weights_match_operator(variant, ordering):
    fock = FockSpace(2, 3)
    spec = LaxSpec(3, variant, ordering, 1.0, rapidity=0.4 - 0.1j)
    lam = -0.8 + 0.3j
    blocks = defect_blocks(spec, fock, lam)
    diag = np.array([blocks[a, a][0, 0] for a in range(3)])
    assert np.allclose(diag, vacuum_weights(spec, lam))


def test_chain_spec_validation():
    fock = FockSpace(1, 2)
    with pytest.raises(IndexRangeError):
        ChainSpec(2, 2, fock, defect_site=4)
    with pytest.raises(DimensionError):
        ChainSpec(3, 1, fock)
    chain = ChainSpec(2, 2, fock, theta=0.5)
    assert chain.lax.rapidity == 0.5
    assert chain.site_dims == [2, 2, fock.dim]
    assert chain.quantum_dim == 4 * fock.dim


def test_monodromy_without_bulk_is_the_defect():
    fock = FockSpace(1, 3)
    chain = ChainSpec(2, 0, fock, theta=0.2)
    lam = 0.7 + 0.1j
    assert np.allclose(monodromy(chain, lam), defect_operator(chain.lax, fock, lam))


def test_monodromy_orders_factors_by_position():
    fock = FockSpace(1, 2)
    lam = -0.3 + 0.4j
    chain = ChainSpec(2, 1, fock, defect_site=1)
    dims = chain.site_dims
    bulk = bulk_blocks(2, lam)
    defect = defect_blocks(chain.lax, fock, lam)
    t = monodromy_blocks(chain, lam)
    for a in range(2):
        for b in range(2):
            want = sum(embed(bulk[a, c], 0, dims) @ embed(defect[c, b], 1, dims) for c in range(2))
            assert np.allclose(t[a, b], want)
    assert np.allclose(transfer_matrix(chain, lam), t[0, 0] + t[1, 1])


def test_monodromy_dimension_cap():
    chain = ChainSpec(2, 3, FockSpace(1, 4))
    with pytest.raises(DimensionCapError) as info:
        monodromy_blocks(chain, 0.1, cap=10)
    assert info.value.dimension == 8 * 5


def test_closed_sector_mask():
    fock = FockSpace(1, 2)
    assert closed_sector_mask(ChainSpec(2, 0, fock)).all()
    mask = closed_sector_mask(ChainSpec(2, 2, fock, lax=LaxSpec(2)))
    # both sites in colour 1 plus one boson exceeds the cutoff
    assert not mask[0 * fock.dim + 1] and not mask[0 * fock.dim + 2]
    assert mask[3 * fock.dim + 2]


def test_two_aux_slots():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(2, 2)) + 0j
    y = rng.normal(size=(3, 3)) + 0j
    op = kron(x, y)
    assert np.allclose(two_aux(op, 2, 1, 3), kron(x, identity(2), y))
    assert np.allclose(two_aux(op, 2, 2, 3), kron(identity(2), x, y))


def test_nbar_reference_shift():
    fock = FockSpace(2, 2)
    normal = nbar_operator(3, fock, NbarReference.NORMAL)
    anti = nbar_operator(3, fock, NbarReference.ANTINORMAL)
    assert chebyshev(anti - normal - 2 * identity(fock.dim)) == 0.0
    assert normal[0, 0] == pytest.approx(0.0)


def test_transmission_prefactor_switch():
    fock = FockSpace(1, 3)
    lam = 0.6
    bare = transmission_matrix(2, fock, lam, prefactor=False)
    full = transmission_matrix(2, fock, lam)
    c = transmission_amplitude(2, "-", lam) / (1j * lam + 0.5)
    assert np.allclose(full, c * bare)
    tbar = conjugate_transmission_matrix(2, fock, lam, prefactor=False)
    assert tbar[fock.dim, fock.dim] == pytest.approx(-1j * lam - 0.5)

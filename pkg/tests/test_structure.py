"""Tests for block algebras, automorphism extraction, and peripheral splits."""

import numpy as np
import pytest

from muchan.channels import (
    Channel,
    InvalidChannelError,
    ad_unitary,
    apply,
    compose,
    depolarizing,
    holevo_werner,
    identity_channel,
    superop_of,
    verify,
)
from muchan.matcore import dag, hs_inner
from muchan.structure import (
    AutomorphismError,
    BlockAlgebra,
    asymptotic_parts,
    automorphism_unitary,
    block_algebra_from_dict,
    block_algebra_to_dict,
    conditional_expectation,
    mu_index,
    mu_index_to_dict,
    peripheral_split,
)

from conftest import haar


# ---------------------------------------------------------------------------
# BlockAlgebra basics
# ---------------------------------------------------------------------------


def test_block_algebra_validation():
    with pytest.raises(ValueError):
        BlockAlgebra(blocks=[])
    with pytest.raises(ValueError):
        BlockAlgebra(blocks=[(0, 2)])
    with pytest.raises(ValueError):
        BlockAlgebra(blocks=[(1, 2)], basis_change=np.ones((2, 2)))
    alg = BlockAlgebra(blocks=[(2, 1), (1, 1)])
    assert alg.dim == 3 and alg.linear_dim == 2


def test_block_algebra_basis_orthonormal():
    w = haar(4, seed=7)
    alg = BlockAlgebra(blocks=[(1, 2), (2, 1)], basis_change=w)
    basis = alg.basis()
    assert len(basis) == alg.linear_dim == 5
    gram = np.array([[hs_inner(a, b) for b in basis] for a in basis])
    assert np.linalg.norm(gram - np.eye(5)) < 1e-12
    # basis elements multiply within the algebra span
    span = np.stack([b.reshape(-1, order="F") for b in basis], axis=1)
    proj = span @ dag(span)
    for a in basis:
        for b in basis:
            v = (a @ b).reshape(-1, order="F")
            assert np.linalg.norm(v - proj @ v) < 1e-12


def test_block_algebra_json_roundtrip():
    w = haar(3, seed=3)
    alg = BlockAlgebra(blocks=[(1, 1), (2, 1)], basis_change=w)
    back = block_algebra_from_dict(block_algebra_to_dict(alg))
    assert back.blocks == alg.blocks
    assert np.allclose(back.basis_change, alg.basis_change)
    plain = block_algebra_from_dict({"blocks": [[1, 2]]})
    assert plain.basis_change is None


# ---------------------------------------------------------------------------
# Conditional expectation
# ---------------------------------------------------------------------------


def test_conditional_expectation_full_algebra_is_identity():
    e = conditional_expectation(BlockAlgebra(blocks=[(1, 3)]))
    assert np.linalg.norm(e.superop - np.eye(9)) < 1e-12


def test_conditional_expectation_scalars_is_depolarizing():
    e = conditional_expectation(BlockAlgebra(blocks=[(3, 1)]))
    assert np.linalg.norm(e.superop - depolarizing(3).superop) < 1e-12


def test_conditional_expectation_diagonal_is_pinching(rng):
    e = conditional_expectation(BlockAlgebra(blocks=[(1, 1)] * 3))
    x = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    assert np.linalg.norm(apply(e, x) - np.diag(np.diag(x))) < 1e-12


def test_conditional_expectation_properties(rng):
    w = haar(4, seed=11)
    alg = BlockAlgebra(blocks=[(1, 2), (2, 1)], basis_change=w)
    e = conditional_expectation(alg)
    rep = verify(e)
    assert rep.is_unital_channel
    s = e.superop
    # idempotent and self-dual (HS-orthogonal projection)
    assert np.linalg.norm(s @ s - s) < 1e-10
    assert np.linalg.norm(s - dag(s)) < 1e-10
    # bimodule property E(A X B) = A E(X) B for algebra elements A, B
    basis = alg.basis()
    coeff = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
    a = sum(c * b for c, b in zip(coeff, basis))
    coeff = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
    b = sum(c * m for c, m in zip(coeff, basis))
    x = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    lhs = apply(e, a @ x @ b)
    rhs = a @ apply(e, x) @ b
    assert np.linalg.norm(lhs - rhs) < 1e-9
    # fixes the algebra
    for m in basis:
        assert np.linalg.norm(apply(e, m) - m) < 1e-10


# ---------------------------------------------------------------------------
# Automorphism unitaries
# ---------------------------------------------------------------------------


def test_automorphism_full_algebra_recovers_conjugation():
    v = haar(3, seed=21)
    alg = BlockAlgebra(blocks=[(1, 3)])
    u = automorphism_unitary(alg, ad_unitary(v))
    assert np.linalg.norm(superop_of(ad_unitary(u)) - superop_of(ad_unitary(v))) < 1e-9


def test_automorphism_diagonal_cycle_is_permutation():
    # psi permutes the diagonal matrix units cyclically
    d = 3
    s = np.zeros((9, 9), dtype=complex)
    for k in range(d):
        e_in = np.zeros((d, d), dtype=complex)
        e_in[k, k] = 1.0
        e_out = np.zeros((d, d), dtype=complex)
        e_out[(k + 1) % d, (k + 1) % d] = 1.0
        s += np.outer(e_out.reshape(-1, order="F"), e_in.reshape(-1, order="F"))
    alg = BlockAlgebra(blocks=[(1, 1)] * d)
    u = automorphism_unitary(alg, s)
    for k in range(d):
        e_in = np.zeros((d, d), dtype=complex)
        e_in[k, k] = 1.0
        e_out = np.zeros((d, d), dtype=complex)
        e_out[(k + 1) % d, (k + 1) % d] = 1.0
        assert np.linalg.norm(dag(u) @ e_in @ u - e_out) < 1e-10
    assert np.allclose(np.abs(u), np.abs(u).astype(bool).astype(float))


def test_automorphism_rejects_trace_breaking_swap():
    # a (E11 + E22) + b E33  ->  b (E11 + E22) + a E33 is an algebra
    # isomorphism but changes the trace, so no unitary can implement it
    alg = BlockAlgebra(blocks=[(2, 1), (1, 1)])
    b1 = np.diag([1.0, 1.0, 0.0]).astype(complex) / np.sqrt(2)
    b2 = np.diag([0.0, 0.0, 1.0]).astype(complex)
    s = np.outer((b2 / np.sqrt(2)).reshape(-1, order="F"),
                 b1.reshape(-1, order="F"))
    s += np.outer((np.sqrt(2) * b1).reshape(-1, order="F"),
                  b2.reshape(-1, order="F"))
    with pytest.raises(AutomorphismError, match="trace"):
        automorphism_unitary(alg, s)


def test_automorphism_rejects_non_multiplicative_map():
    alg = BlockAlgebra(blocks=[(1, 2)])
    with pytest.raises(AutomorphismError, match="multiplicative"):
        automorphism_unitary(alg, depolarizing(2))


def _random_block_automorphism(alg, seed):
    """Superoperator acting on the algebra by a signature-preserving block
    permutation composed with per-block unitary conjugations."""
    rng = np.random.default_rng(seed)
    nb = len(alg.blocks)
    # random permutation preserving (m, n) signatures
    order = rng.permutation(nb)
    perm = np.empty(nb, dtype=int)
    used = set()
    for k in order:
        for j in rng.permutation(nb):
            if j not in used and alg.blocks[int(j)] == alg.blocks[int(k)]:
                perm[int(k)] = int(j)
                used.add(int(j))
                break
    vs = [haar(n, seed=seed + 100 + k) for k, (_, n) in enumerate(alg.blocks)]
    d = alg.dim
    s = np.zeros((d * d, d * d), dtype=complex)
    for k, (m, n) in enumerate(alg.blocks):
        v = vs[k]
        for i in range(n):
            for j in range(n):
                e = np.zeros((n, n), dtype=complex)
                e[i, j] = 1.0
                src = alg.embed(k, e) / np.sqrt(m)
                dst = alg.embed(int(perm[k]), v @ e @ dag(v)) / np.sqrt(m)
                s += np.outer(dst.reshape(-1, order="F"),
                              src.conj().reshape(-1, order="F"))
    return s


@pytest.mark.parametrize("blocks,dim,seed", [
    ([(1, 2), (1, 2)], 4, 0),
    ([(2, 1), (1, 1), (1, 1)], 4, 1),
    ([(1, 2), (1, 1)], 3, 2),
    ([(1, 3), (2, 1)], 5, 3),
])
def test_automorphism_random_block_maps(blocks, dim, seed):
    w = haar(dim, seed=50 + seed)
    alg = BlockAlgebra(blocks=blocks, basis_change=w)
    s = _random_block_automorphism(alg, seed=seed)
    u = automorphism_unitary(alg, s)
    worst = 0.0
    for b in alg.basis():
        img = (s @ b.reshape(-1, order="F")).reshape(dim, dim, order="F")
        worst = max(worst, np.linalg.norm(img - dag(u) @ b @ u))
    assert worst < 1e-9


# ---------------------------------------------------------------------------
# Peripheral split
# ---------------------------------------------------------------------------


def test_peripheral_split_unitary_channel_is_everything():
    u = haar(3, seed=5)
    split = peripheral_split(ad_unitary(u))
    assert split.peripheral_dim == 9
    assert split.decaying_dim == 0
    assert np.linalg.norm(split.projector.superop - np.eye(9)) < 1e-10
    assert np.allclose(np.abs(split.peripheral_eigenvalues), 1.0, atol=1e-10)


def test_peripheral_split_depolarizing_is_scalars():
    split = peripheral_split(depolarizing(3))
    assert split.peripheral_dim == 1
    assert split.decaying_dim == 8
    b = split.peripheral_basis[0]
    assert np.linalg.norm(b - np.trace(b) / 3 * np.eye(3)) < 1e-10
    assert np.linalg.norm(split.projector.superop - depolarizing(3).superop) < 1e-10


def test_peripheral_split_holevo_werner():
    split = peripheral_split(holevo_werner(3))
    assert split.peripheral_dim == 1
    assert split.decaying_dim == 8
    assert np.allclose(split.peripheral_eigenvalues, [1.0], atol=1e-12)


def test_peripheral_split_pinching_is_diagonal_algebra():
    e = conditional_expectation(BlockAlgebra(blocks=[(1, 1)] * 3))
    split = peripheral_split(e)
    assert split.peripheral_dim == 3
    proj = split.projector.superop
    assert np.linalg.norm(proj @ proj - proj) < 1e-10
    assert np.linalg.norm(proj - dag(proj)) < 1e-10


def test_peripheral_split_rejects_non_unital():
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(0.5)]], dtype=complex)
    k1 = np.array([[0.0, np.sqrt(0.5)], [0.0, 0.0]], dtype=complex)
    damping = Channel(2, kraus=[k0, k1])
    with pytest.raises(InvalidChannelError):
        peripheral_split(damping)


def test_peripheral_split_random_mixed_unitary_invariants(rng):
    u1, u2 = haar(3, seed=31), haar(3, seed=32)
    ch = Channel(3, superop=0.5 * superop_of(ad_unitary(u1))
                 + 0.5 * superop_of(ad_unitary(u2)))
    split = peripheral_split(ch)
    proj = split.projector.superop
    assert np.linalg.norm(proj @ proj - proj) < 1e-10
    assert np.linalg.norm(proj - dag(proj)) < 1e-10
    assert split.peripheral_dim + split.decaying_dim == 9
    # identity is always peripheral for a unital channel
    v = np.eye(3).reshape(-1, order="F") / np.sqrt(3)
    assert np.linalg.norm(v - proj @ v) < 1e-8


# ---------------------------------------------------------------------------
# Asymptotic decomposition
# ---------------------------------------------------------------------------


def test_asymptotic_parts_unitary_channel():
    u0 = haar(3, seed=41)
    alpha, beta, u = asymptotic_parts(ad_unitary(u0))
    assert np.linalg.norm(beta.superop) < 1e-10
    assert np.linalg.norm(alpha.superop - superop_of(ad_unitary(u0))) < 1e-10
    assert np.linalg.norm(superop_of(ad_unitary(u)) - superop_of(ad_unitary(u0))) < 1e-9


def test_asymptotic_parts_depolarizing():
    alpha, beta, u = asymptotic_parts(depolarizing(3))
    assert np.linalg.norm(alpha.superop - depolarizing(3).superop) < 1e-10
    assert np.linalg.norm(beta.superop) < 1e-10
    assert np.linalg.norm(u - np.eye(3)) < 1e-9


def test_asymptotic_parts_holevo_werner_halving():
    ch = holevo_werner(3)
    alpha, beta, u = asymptotic_parts(ch)
    assert np.linalg.norm(alpha.superop - depolarizing(3).superop) < 1e-10
    norms = []
    power = np.eye(9, dtype=complex)
    for _ in range(6):
        power = power @ beta.superop
        norms.append(np.linalg.norm(power, 2))
    ratios = np.array(norms[1:]) / np.array(norms[:-1])
    assert np.allclose(ratios, 0.5, atol=1e-8)


def test_asymptotic_parts_pinching_cycle():
    # Phi = (cyclic relabel) o (pinching): peripheral algebra is the diagonal,
    # the automorphism cycles the diagonal entries, beta kills off-diagonals
    d = 3
    perm = np.zeros((d, d), dtype=complex)
    for k in range(d):
        perm[(k + 1) % d, k] = 1.0
    pinch = conditional_expectation(BlockAlgebra(blocks=[(1, 1)] * d))
    ch = compose(ad_unitary(perm), pinch)
    alpha, beta, u = asymptotic_parts(ch)
    split = peripheral_split(ch)
    assert split.peripheral_dim == 3
    # tau_n = Ad_{(U*)^n} o Phi^n fixes the peripheral algebra elementwise
    s_phi = superop_of(ch)
    for n in (1, 2, 5):
        un = np.linalg.matrix_power(dag(u), n)
        tau = superop_of(ad_unitary(un)) @ np.linalg.matrix_power(s_phi, n)
        for b in split.peripheral_basis:
            v = b.reshape(-1, order="F")
            assert np.linalg.norm(tau @ v - v) < 1e-8
    # alpha = Phi o E_P and beta decays
    assert np.linalg.norm(alpha.superop - (s_phi @ split.projector.superop)) < 1e-12
    assert np.linalg.norm(np.linalg.matrix_power(beta.superop, 2)) < 1e-10


def test_asymptotic_parts_tau_converges_to_projector():
    ch = holevo_werner(3)
    alpha, beta, u = asymptotic_parts(ch)
    split = peripheral_split(ch)
    s_phi = superop_of(ch)
    errs = []
    for n in (1, 2, 4, 8):
        un = np.linalg.matrix_power(dag(u), n)
        tau = superop_of(ad_unitary(un)) @ np.linalg.matrix_power(s_phi, n)
        errs.append(np.linalg.norm(tau - split.projector.superop, 2))
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-2


# ---------------------------------------------------------------------------
# Mixed-unitary index
# ---------------------------------------------------------------------------


def test_mu_index_unitary_channel_is_one():
    report = mu_index(ad_unitary(haar(2, seed=61)), n_max=3)
    assert report.index == 1
    assert report.found
    assert [n for n, _, _ in report.per_power] == [1, 2, 3]
    assert all(v == "MixedUnitary" for _, v, _ in report.per_power)
    assert all(r < 1e-8 for _, _, r in report.per_power)


def test_mu_index_depolarizing_qutrit():
    report = mu_index(depolarizing(3), n_max=2)
    assert report.index == 1


def test_mu_index_holevo_werner_found():
    report = mu_index(holevo_werner(3), n_max=6)
    assert report.index is not None and report.index >= 2
    verdicts = {n: v for n, v, _ in report.per_power}
    assert verdicts[1] != "MixedUnitary"
    for n in range(report.index, 7):
        assert verdicts[n] == "MixedUnitary"
    doc = mu_index_to_dict(report)
    assert doc["index"] == report.index
    assert len(doc["per_power"]) == 6


def test_mu_index_rejects_non_unital():
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(0.5)]], dtype=complex)
    k1 = np.array([[0.0, np.sqrt(0.5)], [0.0, 0.0]], dtype=complex)
    with pytest.raises(InvalidChannelError):
        mu_index(Channel(2, kraus=[k0, k1]), n_max=2)

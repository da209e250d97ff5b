"""Acceptance suite: one test per headline guarantee of the package.

Each test is a single pass/fail line covering one end-to-end claim, at the
stated tolerances, using only public API. Run with ``pytest -v
tests/test_acceptance.py`` to get the per-criterion report.
"""

import numpy as np
import pytest

from conftest import B_EXAMPLES, haar, random_hermitian
from test_structure import _random_block_automorphism

from muchan.channels import (
    Channel,
    ad_unitary,
    apply,
    choi_of,
    compose,
    depolarizing,
    holevo_werner,
    kraus_of,
    superop_of,
    verify,
)
from muchan.dynamics import (
    closed_form_g,
    eventual_mu_scan,
    evolve,
    example59_generator,
    find_root_t0,
    generator_peripheral_split,
    gkls_data,
    gkls_superop,
    validate_generator,
)
from muchan.matcore import dag
from muchan.mucone import (
    fw_decompose,
    min_trace_a_abar,
    transpose_witness,
    witness_search,
    witness_value,
)
from muchan.structure import (
    AutomorphismError,
    BlockAlgebra,
    automorphism_unitary,
    peripheral_split,
)
from muchan.weyl import (
    is_weyl_covariant,
    mixed_weyl_decompose,
    weyl_cone_membership,
    weyl_system,
)

B2 = B_EXAMPLES[1]


# ---------------------------------------------------------------------------
# Shared generators of random test objects
# ---------------------------------------------------------------------------


def random_unital_qubit_channel(seed):
    """Generic unital TP qubit channel via alternating projections.

    Starts from a random full-rank Choi matrix and alternates the two
    marginal corrections (both partial traces to I/2) with the PSD cone
    projection until all defects are below 1e-13.
    """
    d = 2
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(d * d, d * d)) + 1j * rng.normal(size=(d * d, d * d))
    j = g @ dag(g)
    j /= np.trace(j).real
    eye = np.eye(d) / d
    for _ in range(3000):
        t1 = np.einsum("ikil->kl", j.reshape(d, d, d, d))
        j += np.kron(np.eye(d) / d, eye - t1)
        t2 = np.einsum("kili->kl", j.reshape(d, d, d, d))
        j += np.kron(eye - t2, np.eye(d) / d)
        j = 0.5 * (j + dag(j))
        w, v = np.linalg.eigh(j)
        if w[0] > -1e-14:
            t1 = np.einsum("ikil->kl", j.reshape(d, d, d, d))
            t2 = np.einsum("kili->kl", j.reshape(d, d, d, d))
            if max(np.linalg.norm(t1 - eye), np.linalg.norm(t2 - eye)) < 1e-13:
                return Channel(d, choi=j)
        j = (v * np.clip(w, 0.0, None)) @ dag(v)
    raise RuntimeError("channel sampler did not converge")


def random_weyl_cone_generator(d, seed):
    rng = np.random.default_rng(seed)
    ws = weyl_system(d)
    c = rng.uniform(0.0, 2.0, size=(d, d)) * (rng.random(size=(d, d)) < 0.7)
    c[0, 0] = 0.0
    s = np.zeros((d * d, d * d), dtype=complex)
    for a in range(d):
        for b in range(d):
            s += c[a, b] * (superop_of(ad_unitary(ws.table[a, b])) - np.eye(d * d))
    return s, c, ws


def random_gkls(d, seed, n_jumps=2):
    rng = np.random.default_rng(seed)
    jumps = [random_hermitian(d, rng) for _ in range(n_jumps)]
    return gkls_superop(gkls_data(hamiltonian=random_hermitian(d, rng),
                                  jumps=jumps))


# ---------------------------------------------------------------------------
# Criteria
# ---------------------------------------------------------------------------


def test_criterion_01_transpose_witness_pairs_to_minus_one_ninth():
    for b in B_EXAMPLES:
        gamma = transpose_witness(b)
        value = witness_value(gamma, example59_generator(b))
        assert value == pytest.approx(-1.0 / 9.0, abs=1e-10)


def test_criterion_02_witness_curve_matches_closed_form_with_root():
    lmap = example59_generator(B2)
    gamma = transpose_witness(B2)
    grid = np.linspace(0.0, 3.0, 100)
    values = np.array([witness_value(gamma, evolve(lmap, t)) for t in grid])
    assert np.max(np.abs(values - closed_form_g(grid))) <= 1e-9
    t0 = find_root_t0()
    assert t0 == pytest.approx(1.4034, abs=5e-4)
    inside = (grid >= 0.01) & (grid <= t0 - 0.01)
    assert inside.sum() >= 40
    assert np.all(values[inside] < 0.0)
    for t in (0.01, t0 - 0.01):
        assert witness_value(gamma, evolve(lmap, t)) < 0.0


def test_criterion_03_holevo_werner_separated_from_mixed_unitaries():
    ch = holevo_werner(3)
    assert verify(ch).is_unital_channel
    dec = fw_decompose(ch)
    assert dec.residual > 0.01
    wit = witness_search(ch)
    assert wit.separating
    assert wit.value_on_target <= -1e-3
    assert wit.min_unitary_value >= -1e-8


def test_criterion_04_every_random_unital_qubit_channel_decomposes():
    for seed in range(50):
        ch = random_unital_qubit_channel(seed)
        assert verify(ch).is_unital_channel
        dec = fw_decompose(ch)
        assert dec.residual < 1e-6, f"seed {seed}: residual {dec.residual:.3e}"


def test_criterion_05_depolarizing_is_the_uniform_weyl_mixture():
    for d in range(2, 6):
        ws = weyl_system(d)
        mix = sum(choi_of(ad_unitary(ws.table[a, b]))
                  for a in range(d) for b in range(d)) / d**2
        dist = np.linalg.norm(choi_of(depolarizing(d)) - mix)
        assert dist < 1e-12, f"d={d}: distance {dist:.3e}"


def test_criterion_06_weyl_cone_covariance_evolution_equivalence():
    for seed in range(20):
        s, c, ws = random_weyl_cone_generator(3, seed=seed)
        res = weyl_cone_membership(s, ws)
        assert res.is_member
        assert np.linalg.norm(res.coefficients.reshape(3, 3) - c) < 1e-8
        assert is_weyl_covariant(s, ws)
        for t in (0.5, 2.0):
            dec = mixed_weyl_decompose(evolve(s, t), ws)
            assert dec.verdict == "MixedUnitary"
    ws = weyl_system(3)
    for seed in range(20):
        s = random_gkls(3, seed=1000 + seed)
        assert validate_generator(s).is_valid
        assert not is_weyl_covariant(s, ws)
        assert weyl_cone_membership(s, ws).verdict == "NotMember"


def test_criterion_07_eventual_mixed_unitarity_scan():
    lmap = example59_generator(B2)
    grid = np.linspace(0.2, 9.8, 15)
    scan = eventual_mu_scan(lmap, grid, witness=transpose_witness(B2))
    assert scan.t1_estimate is not None
    assert scan.t1_estimate <= 10.0
    for t, verdict, residual in zip(scan.grid, scan.mu_verdicts, scan.residuals):
        if t >= scan.t1_estimate:
            assert verdict == "MixedUnitary"
            assert residual < 1e-6
        if 0.0 < t < 1.4:
            assert verdict == "NotMixedUnitary-Analytic"


def test_criterion_08_no_power_uniform_index_certificates():
    lmap = example59_generator(B2)
    gamma = transpose_witness(B2)
    target = closed_form_g(1.0)
    assert target < -1e-3
    for n in (2, 5):
        phi = evolve(lmap, 1.0 / n)
        assert verify(phi).is_unital_channel
        power = Channel(3, superop=np.linalg.matrix_power(phi.superop, n))
        assert witness_value(gamma, power) == pytest.approx(target, abs=1e-10)
        assert witness_value(gamma, power) < -1e-3


def test_criterion_09_block_automorphisms_recover_their_unitary():
    signatures = [
        [(1, 2), (1, 2)],
        [(2, 1), (1, 1), (1, 1)],
        [(1, 2), (1, 1)],
        [(1, 3), (2, 1)],
        [(1, 4)],
    ]
    for seed in range(20):
        blocks = signatures[seed % len(signatures)]
        dim = sum(m * n for m, n in blocks)
        alg = BlockAlgebra(blocks=blocks, basis_change=haar(dim, seed=700 + seed))
        s = _random_block_automorphism(alg, seed=seed)
        u = automorphism_unitary(alg, s)
        worst = 0.0
        for basis_element in alg.basis():
            img = (s @ basis_element.reshape(-1, order="F")).reshape(
                dim, dim, order="F")
            worst = max(worst, np.linalg.norm(img - dag(u) @ basis_element @ u))
        assert worst < 1e-9, f"seed {seed}: basis error {worst:.3e}"
    # trace-breaking block swap: an algebra isomorphism no unitary implements
    alg = BlockAlgebra(blocks=[(2, 1), (1, 1)])
    b1 = np.diag([1.0, 1.0, 0.0]).astype(complex) / np.sqrt(2)
    b2 = np.diag([0.0, 0.0, 1.0]).astype(complex)
    swap = np.outer((b2 / np.sqrt(2)).reshape(-1, order="F"),
                    b1.reshape(-1, order="F"))
    swap += np.outer((np.sqrt(2) * b1).reshape(-1, order="F"),
                     b2.reshape(-1, order="F"))
    with pytest.raises(AutomorphismError, match="trace"):
        automorphism_unitary(alg, swap)


def test_criterion_10_peripheral_structure_of_channels_and_generators():
    assert peripheral_split(ad_unitary(haar(2, seed=1))).peripheral_dim == 4
    assert peripheral_split(ad_unitary(haar(3, seed=2))).peripheral_dim == 9
    assert peripheral_split(depolarizing(3)).peripheral_dim == 1
    assert peripheral_split(holevo_werner(3)).peripheral_dim == 1

    lmap = example59_generator(B2)
    proj = generator_peripheral_split(lmap).projector.superop
    norms = []
    for t in (1.0, 2.0, 4.0, 8.0):
        s = evolve(lmap, t).superop
        norms.append(np.linalg.norm(s - s @ proj, 2))
    assert all(a > b for a, b in zip(norms, norms[1:]))

    generators = [example59_generator(b) for b in B_EXAMPLES]
    generators += [random_gkls(3, seed=k) for k in (3, 4, 5)]
    generators += [random_weyl_cone_generator(3, seed=k)[0] for k in (6, 7)]
    for s in generators:
        assert np.max(np.linalg.eigvals(s).real) <= 1e-8

    channels = [ad_unitary(haar(3, seed=8)), depolarizing(3),
                holevo_werner(3), evolve(lmap, 1.0)]
    for ch in channels:
        split = peripheral_split(ch)
        assert len(split.peripheral_eigenvalues) == split.peripheral_dim
        assert np.max(np.abs(np.abs(split.peripheral_eigenvalues) - 1.0)) <= 1e-8


def test_criterion_11_conjugation_floor_formula_vs_sampling():
    rng = np.random.default_rng(55)
    for trial in range(10):
        d = 2 + trial % 3
        mu = np.sort(rng.uniform(0.1, 3.0, size=d))[::-1]
        floor = min_trace_a_abar(mu)

        samples = 10_000
        gl = rng.normal(size=(samples, d, d)) + 1j * rng.normal(size=(samples, d, d))
        gr = rng.normal(size=(samples, d, d)) + 1j * rng.normal(size=(samples, d, d))
        ql = np.linalg.qr(gl)[0]
        qr = np.linalg.qr(gr)[0]
        a = ql * mu[None, None, :] @ np.conj(np.transpose(qr, (0, 2, 1)))
        traces = np.einsum("nij,nji->n", a, np.conj(a)).real
        assert floor <= traces.min() + 1e-6

        paired = np.zeros((d, d), dtype=complex)
        for k in range(0, d - 1, 2):
            paired[k, k + 1] = mu[k]
            paired[k + 1, k] = -mu[k + 1]
        if d % 2 == 1:
            paired[d - 1, d - 1] = mu[d - 1]
        assert np.allclose(np.sort(np.linalg.svd(paired, compute_uv=False)),
                           np.sort(mu), atol=1e-12)
        attained = np.trace(paired @ np.conj(paired)).real
        assert attained == pytest.approx(floor, abs=1e-9)


def test_criterion_12_representation_round_trips_and_semigroup_law():
    rng = np.random.default_rng(77)
    for trial in range(50):
        d = 2 + trial % 3
        n_kraus = 1 + trial % 3
        ks = [rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
              for _ in range(n_kraus)]
        ch = Channel(d, kraus=ks)
        back = Channel(d, kraus=kraus_of(Channel(d, choi=choi_of(ch))))
        worst = 0.0
        for _ in range(3):
            x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            worst = max(worst, np.linalg.norm(apply(ch, x) - apply(back, x)))
        assert worst < 1e-10, f"trial {trial}: action error {worst:.3e}"

    for seed in range(10):
        d = 2 + seed % 2
        lmap = random_gkls(d, seed=500 + seed)
        for s, t in ((0.3, 0.9), (1.1, 0.4)):
            lhs = choi_of(evolve(lmap, s + t))
            rhs = choi_of(compose(evolve(lmap, s), evolve(lmap, t)))
            assert np.linalg.norm(lhs - rhs) < 1e-10

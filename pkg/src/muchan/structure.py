"""Algebraic structure of unital channels.

Block *-subalgebras of d x d matrices and their trace-preserving conditional
expectations; extraction of the implementing unitary for trace-preserving
*-automorphisms; peripheral/decaying splits of channels (and, through a shared
engine, of semigroup generators); the asymptotic conditional-automorphism
decomposition; and the mixed-unitary index of the discrete semigroup of
channel powers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .channels import (
    Channel,
    InvalidChannelError,
    compose,
    matrix_from_lists,
    matrix_to_lists,
    superop_of,
    verify,
)
from .config import TOL_CLUSTER, TOL_RANK, FWConfig
from .matcore import cmat, dag, eig_general, hs_inner
from .mucone import fw_decompose

__all__ = [
    "BlockAlgebra",
    "PeripheralSplit",
    "MUIndexReport",
    "AutomorphismError",
    "conditional_expectation",
    "automorphism_unitary",
    "peripheral_split",
    "asymptotic_parts",
    "mu_index",
    "block_algebra_to_dict",
    "block_algebra_from_dict",
    "mu_index_to_dict",
]


# ---------------------------------------------------------------------------
# Block algebras
# ---------------------------------------------------------------------------


class AutomorphismError(ValueError):
    """The supplied map is not a trace-preserving *-automorphism."""


@dataclass
class BlockAlgebra:
    """The *-subalgebra ``W (⊕_k I_{m_k} ⊗ M_{n_k}) W*`` of d x d matrices.

    ``blocks`` lists the pairs ``(m_k, n_k)`` (multiplicity, factor size) in
    block-diagonal order of the reference presentation; ``basis_change`` is
    the unitary ``W`` carrying the reference presentation onto the working
    coordinates (``None`` means the identity).
    """

    blocks: List[Tuple[int, int]]
    basis_change: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("block algebra needs at least one block")
        blocks = []
        for pair in self.blocks:
            m, n = int(pair[0]), int(pair[1])
            if m < 1 or n < 1:
                raise ValueError(f"block sizes must be positive, got {(m, n)}")
            blocks.append((m, n))
        self.blocks = blocks
        d = self.dim
        if self.basis_change is not None:
            w = cmat(self.basis_change)
            if w.shape != (d, d):
                raise ValueError(f"basis change shape {w.shape} != {(d, d)}")
            if np.linalg.norm(dag(w) @ w - np.eye(d)) > 1e-10 * d:
                raise ValueError("basis change is not unitary")
            self.basis_change = w

    @property
    def dim(self) -> int:
        """Dimension of the underlying matrix space, ``sum m_k n_k``."""
        return sum(m * n for m, n in self.blocks)

    @property
    def linear_dim(self) -> int:
        """Linear dimension of the algebra, ``sum n_k^2``."""
        return sum(n * n for _, n in self.blocks)

    def block_slices(self) -> List[slice]:
        out, start = [], 0
        for m, n in self.blocks:
            out.append(slice(start, start + m * n))
            start += m * n
        return out

    def central_projections(self) -> List[np.ndarray]:
        """Minimal central projections, in working coordinates."""
        d = self.dim
        out = []
        for sl in self.block_slices():
            z = np.zeros((d, d), dtype=complex)
            z[sl, sl] = np.eye(sl.stop - sl.start)
            out.append(self._to_working(z))
        return out

    def basis(self) -> List[np.ndarray]:
        """HS-orthonormal basis of the algebra, in working coordinates."""
        d = self.dim
        out = []
        for (m, n), sl in zip(self.blocks, self.block_slices()):
            for i in range(n):
                for j in range(n):
                    e = np.zeros((n, n), dtype=complex)
                    e[i, j] = 1.0 / np.sqrt(m)
                    b = np.zeros((d, d), dtype=complex)
                    b[sl, sl] = np.kron(np.eye(m), e)
                    out.append(self._to_working(b))
        return out

    def embed(self, k: int, y: np.ndarray) -> np.ndarray:
        """Algebra element carrying ``y in M_{n_k}`` on block ``k``, zero elsewhere."""
        m, n = self.blocks[k]
        y = cmat(y)
        if y.shape != (n, n):
            raise ValueError(f"block {k} takes {n} x {n} matrices")
        d = self.dim
        b = np.zeros((d, d), dtype=complex)
        sl = self.block_slices()[k]
        b[sl, sl] = np.kron(np.eye(m), y)
        return self._to_working(b)

    def _to_working(self, x: np.ndarray) -> np.ndarray:
        if self.basis_change is None:
            return x
        return self.basis_change @ x @ dag(self.basis_change)

    def _to_reference(self, x: np.ndarray) -> np.ndarray:
        if self.basis_change is None:
            return x
        return dag(self.basis_change) @ x @ self.basis_change


def conditional_expectation(alg: BlockAlgebra) -> Channel:
    """The unique trace-preserving conditional expectation onto the algebra.

    Equals the HS-orthogonal projection onto the algebra: in the reference
    presentation it restricts to the diagonal blocks and replaces each block
    ``A_kk`` by ``(I_{m_k}/m_k) ⊗ ptr_m(A_kk)``.
    """
    d = alg.dim
    s = np.zeros((d * d, d * d), dtype=complex)
    for b in alg.basis():
        v = b.reshape(-1, order="F")
        s += np.outer(v, v.conj())
    return Channel(d, superop=s)


# ---------------------------------------------------------------------------
# Automorphism unitaries
# ---------------------------------------------------------------------------


def _canonical_phase(m: np.ndarray) -> np.ndarray:
    """Scale by the unit phase making the largest-magnitude entry real positive."""
    flat = m.reshape(-1)
    lead = flat[int(np.argmax(np.abs(flat)))]
    if abs(lead) == 0.0:
        return m
    return m * (abs(lead) / lead)


def _unitary_of_factor_automorphism(phi_choi: np.ndarray, n: int,
                                    tol: float) -> np.ndarray:
    """Unitary v with ``phi = v . v*`` from the rank-one Choi of ``phi``."""
    evals, evecs = np.linalg.eigh((phi_choi + dag(phi_choi)) / 2.0)
    if evals[-1] < 1.0 - 1e-6 or (n > 1 and evals[-2] > tol):
        raise AutomorphismError(
            "block action is not a conjugation (Choi matrix is not rank one)")
    w = np.sqrt(n) * evecs[:, -1]
    v = w.reshape(n, n).T
    v = _canonical_phase(v)
    if np.linalg.norm(dag(v) @ v - np.eye(n)) > 1e-6 * n:
        raise AutomorphismError("block action is not implemented by a unitary")
    return v


def automorphism_unitary(alg: BlockAlgebra, psi, tol: float = 1e-8) -> np.ndarray:
    """Unitary U with ``psi(X) = U* X U`` for X in the algebra.

    ``psi`` must act on the algebra as a trace-preserving *-automorphism;
    multiplicativity, adjoint- and trace-preservation, containment of the
    image in the algebra, and bijectivity are each verified on an orthonormal
    algebra basis before extraction. The construction matches minimal central
    projections of equal signature and recovers one unitary per block from
    the rank-one Choi matrix of the induced factor automorphism.
    """
    d = alg.dim
    s_psi = superop_of(psi)
    if s_psi.shape != (d * d, d * d):
        raise ValueError("map dimension does not match the algebra")
    basis = alg.basis()
    nb = len(basis)

    def act(x: np.ndarray) -> np.ndarray:
        return (s_psi @ x.reshape(-1, order="F")).reshape(d, d, order="F")

    images = [act(b) for b in basis]
    # containment: the image of the algebra stays inside the algebra
    rmat = np.zeros((nb, nb), dtype=complex)
    for bidx, img in enumerate(images):
        coeffs = np.array([hs_inner(b, img) for b in basis])
        rmat[:, bidx] = coeffs
        recon = sum(c * b for c, b in zip(coeffs, basis))
        if np.linalg.norm(img - recon) > tol * d:
            raise AutomorphismError("map does not leave the algebra invariant")
    # adjoint preservation: psi(B*) = psi(B)*
    for b, img in zip(basis, images):
        if np.linalg.norm(act(dag(b)) - dag(img)) > tol * d:
            raise AutomorphismError("map is not adjoint-preserving on the algebra")
    # multiplicativity on basis pairs
    for b1, img1 in zip(basis, images):
        for b2, img2 in zip(basis, images):
            if np.linalg.norm(act(b1 @ b2) - img1 @ img2) > tol * d:
                raise AutomorphismError("map is not multiplicative on the algebra")
    # trace preservation
    for b, img in zip(basis, images):
        if abs(np.trace(img) - np.trace(b)) > tol * d:
            raise AutomorphismError("map is not trace-preserving on the algebra")
    # bijectivity of the restriction
    if np.linalg.svd(rmat, compute_uv=False)[-1] < 1.0 - 1e-6:
        raise AutomorphismError("map is not bijective on the algebra")

    # match minimal central projections and their block signatures
    centrals = alg.central_projections()
    nblocks = len(alg.blocks)
    perm = np.full(nblocks, -1, dtype=int)
    for k, z in enumerate(centrals):
        img = act(z)
        dists = [np.linalg.norm(img - zz) for zz in centrals]
        j = int(np.argmin(dists))
        if dists[j] > 1e-6 * d:
            raise AutomorphismError(
                "map does not permute the minimal central projections")
        if alg.blocks[j] != alg.blocks[k]:
            raise AutomorphismError(
                f"map sends a block of signature {alg.blocks[k]} onto "
                f"signature {alg.blocks[j]}; not an automorphism")
        perm[k] = j
    if len(set(perm.tolist())) != nblocks:
        raise AutomorphismError("central projection matching is not a permutation")

    # per-block unitary from the factor automorphism M_n -> M_n
    slices = alg.block_slices()
    u0 = np.zeros((d, d), dtype=complex)
    for k, (m, n) in enumerate(alg.blocks):
        j = perm[k]
        # Choi matrix of y -> block_j compression of psi(embed_k(y))
        jphi = np.zeros((n * n, n * n), dtype=complex)
        for a in range(n):
            for b in range(n):
                e = np.zeros((n, n), dtype=complex)
                e[a, b] = 1.0
                img = alg._to_reference(act(alg.embed(k, e)))[slices[j], slices[j]]
                y = np.einsum("aiaj->ij", img.reshape(m, n, m, n)) / m
                jphi[:, :] += np.kron(_unit_choi_block(a, b, n), y)
        v = _unitary_of_factor_automorphism(jphi / n, n, 1e-6)
        u0[slices[k], slices[j]] = np.kron(np.eye(m), dag(v))

    u = alg._to_working(u0)
    err = max(np.linalg.norm(act(b) - dag(u) @ b @ u) for b in basis)
    if err > 1e-9 * d:
        raise AutomorphismError(
            f"extracted unitary reproduces the map only to {err:.3e}")
    return u


def _unit_choi_block(a: int, b: int, n: int) -> np.ndarray:
    e = np.zeros((n, n), dtype=complex)
    e[a, b] = 1.0
    return e


# ---------------------------------------------------------------------------
# Peripheral splits
# ---------------------------------------------------------------------------


@dataclass
class PeripheralSplit:
    """Splitting of matrix space into peripheral and decaying parts of a map.

    ``peripheral_basis`` is an HS-orthonormal set of matrices spanning the
    peripheral space P; ``projector`` is the HS-orthogonal projection onto P
    (idempotent and self-dual); ``peripheral_eigenvalues`` lie on the unit
    circle for channels and on the imaginary axis for semigroup generators.
    """

    peripheral_basis: List[np.ndarray]
    decaying_dim: int
    projector: Channel
    peripheral_eigenvalues: np.ndarray
    closure_defect: float = 0.0

    @property
    def peripheral_dim(self) -> int:
        return len(self.peripheral_basis)


def _split_superop(s: np.ndarray, d: int, kind: str) -> PeripheralSplit:
    """Shared peripheral/decaying splitter for channels and generators."""
    sd = eig_general(s)
    vals, vecs = sd.eigenvalues, sd.eigenvectors
    scale = max(1.0, float(np.max(np.abs(vals))) if vals.size else 1.0)
    if kind == "channel":
        if np.any(np.abs(vals) > 1.0 + 1e-9):
            raise InvalidChannelError(
                f"channel spectrum leaves the unit disc "
                f"(max modulus {np.max(np.abs(vals)):.12f})")
        mask = np.abs(vals) >= 1.0 - TOL_CLUSTER * scale
    elif kind == "generator":
        if np.any(vals.real > 1e-8):
            raise ValueError(
                f"generator spectrum enters the right half plane "
                f"(max real part {np.max(vals.real):.3e})")
        mask = np.abs(vals.real) <= TOL_CLUSTER * scale
    else:  # pragma: no cover - internal misuse
        raise ValueError(f"unknown split kind {kind!r}")

    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        raise ValueError("no peripheral eigenvalues found")
    cols = vecs[:, idx]
    left, sv, _ = np.linalg.svd(cols, full_matrices=False)
    rank = int(np.sum(sv > TOL_RANK * sv[0]))
    if rank != idx.size:
        raise ValueError(
            "peripheral cluster is defective (geometric multiplicity "
            f"{rank} < algebraic {idx.size})")
    q = left[:, :rank]
    basis = [q[:, i].reshape(d, d, order="F") for i in range(rank)]
    proj = Channel(d, superop=q @ dag(q))

    # closure of P under adjoints and products, checked on the basis
    pmat = proj.superop
    defect = 0.0
    for i, bi in enumerate(basis):
        for cand in [dag(bi)] + [bi @ bj for bj in basis]:
            v = cand.reshape(-1, order="F")
            defect = max(defect, float(np.linalg.norm(v - pmat @ v)))
    if defect > 1e-8:
        raise ValueError(
            f"peripheral space is not closed under products/adjoints "
            f"(defect {defect:.3e}); eigenvalue clustering is unreliable here")

    pvals = vals[idx]
    order = np.lexsort((pvals.imag, pvals.real))
    return PeripheralSplit(
        peripheral_basis=basis,
        decaying_dim=d * d - rank,
        projector=proj,
        peripheral_eigenvalues=pvals[order],
        closure_defect=defect,
    )


def peripheral_split(ch) -> PeripheralSplit:
    """Peripheral/decaying split of a unital channel.

    P is spanned by eigenvectors of the superoperator with unimodular
    eigenvalues; the complement collects the strictly contracting generalized
    eigenspaces. Unimodular clusters must be diagonalizable, and P must close
    under adjoints and products; violations raise.
    """
    rep = verify(ch)
    if not rep.is_unital_channel:
        raise InvalidChannelError("peripheral split needs a unital CP TP channel")
    s = superop_of(ch)
    return _split_superop(s, rep.dim, "channel")


# ---------------------------------------------------------------------------
# Block-structure discovery for the peripheral algebra
# ---------------------------------------------------------------------------


def _center_basis(mats: Sequence[np.ndarray], d: int,
                  span: np.ndarray) -> np.ndarray:
    """Orthonormal columns spanning {X in span : [X, M] = 0 for all M}, vectorized."""
    eye = np.eye(d)
    rows = np.vstack([np.kron(eye, m) - np.kron(m.T, eye) for m in mats])
    rows = rows @ span
    _, sv, vt = np.linalg.svd(rows)
    rank = int(np.sum(sv > 1e-10 * max(1.0, sv[0] if sv.size else 1.0)))
    return span @ vt[rank:].conj().T


def _algebra_presentation(basis: Sequence[np.ndarray], seed: int = 0,
                          tol: float = 1e-8) -> BlockAlgebra:
    """Recover a BlockAlgebra presentation of a unital *-closed matrix algebra.

    The center is computed as the commutant intersected with the algebra's
    span; a generic Hermitian central element separates the minimal central
    projections, and within each central block a generic algebra element
    transports a fixed multiplicity frame across factor coordinates, which
    yields basis columns in which every algebra element takes the
    ``I_m ⊗ M_n`` form.
    """
    d = basis[0].shape[0]
    rng = np.random.default_rng(seed)
    span = np.stack([b.reshape(-1, order="F") for b in basis], axis=1)

    center_cols = _center_basis(basis, d, span)
    nz = center_cols.shape[1]
    # generic Hermitian central element
    coeff = rng.standard_normal(nz) + 1j * rng.standard_normal(nz)
    zg = (center_cols @ coeff).reshape(d, d, order="F")
    zg = zg + dag(zg)
    evals, evecs = np.linalg.eigh(zg)
    scale = max(1.0, float(np.max(np.abs(evals))))
    groups: List[List[int]] = []
    for i in range(d):
        if groups and abs(evals[i] - evals[groups[-1][-1]]) <= 1e-6 * scale:
            groups[-1].append(i)
        else:
            groups.append([i])
    if len(groups) != nz:
        raise ValueError(
            "central element failed to separate the minimal central projections")

    # generic (non-Hermitian) algebra element for frame transport
    gcoef = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
    gmat = sum(c * b for c, b in zip(gcoef, basis))

    blocks: List[Tuple[int, int]] = []
    columns: List[np.ndarray] = []
    for grp in groups:
        iso = evecs[:, grp]                      # d x r isometry onto the block
        r = iso.shape[1]
        # compress the algebra onto the block
        comp = [dag(iso) @ b @ iso for b in basis]
        cspan = np.stack([c.reshape(-1, order="F") for c in comp], axis=1)
        _, sv, vt = np.linalg.svd(cspan)
        crank = int(np.sum(sv > 1e-10 * max(1.0, sv[0])))
        n = int(round(np.sqrt(crank)))
        if n * n != crank or r % n != 0:
            raise ValueError(
                f"block of size {r} carries an algebra of dimension {crank}, "
                "which is not a full matrix factor")
        m = r // n
        # generic Hermitian element of the compressed factor
        fcoef = rng.standard_normal(len(comp)) + 1j * rng.standard_normal(len(comp))
        fg = sum(c * b for c, b in zip(fcoef, comp))
        fg = fg + dag(fg)
        fvals, fvecs = np.linalg.eigh(fg)
        fscale = max(1.0, float(np.max(np.abs(fvals))))
        fgroups: List[List[int]] = []
        for i in range(r):
            if fgroups and abs(fvals[i] - fvals[fgroups[-1][-1]]) <= 1e-6 * fscale:
                fgroups[-1].append(i)
            else:
                fgroups.append([i])
        if len(fgroups) != n or any(len(g) != m for g in fgroups):
            raise ValueError(
                "generic factor element failed to resolve the multiplicity grid")
        # frame on the first factor coordinate, transported by the generic element
        frame0 = fvecs[:, fgroups[0]]            # r x m
        gcomp = dag(iso) @ gmat @ iso
        cframes = [frame0]
        for i in range(1, n):
            qi = fvecs[:, fgroups[i]]
            ti = qi @ (dag(qi) @ gcomp @ frame0)  # maps frame0 into grid row i
            w, sv_t, vh = np.linalg.svd(ti, full_matrices=False)
            if sv_t[-1] < 1e-8 * max(1.0, sv_t[0]):
                raise ValueError("generic transport element is rank deficient")
            cframes.append(w @ vh)
        # columns ordered (a, i) -> a * n + i to match kron(I_m, M_n)
        for a in range(m):
            for i in range(n):
                columns.append(iso @ cframes[i][:, a])
        blocks.append((m, n))

    w = np.stack(columns, axis=1)
    if np.linalg.norm(dag(w) @ w - np.eye(d)) > 1e-8 * d:
        raise ValueError("recovered presentation basis is not orthonormal")
    # polish to an exact unitary and validate the presentation
    wu, _, wvh = np.linalg.svd(w)
    w = wu @ wvh
    alg = BlockAlgebra(blocks=blocks, basis_change=w)
    slices = alg.block_slices()
    worst = 0.0
    for b in basis:
        ref = alg._to_reference(b)
        recon = np.zeros_like(ref)
        for (m, n), sl in zip(alg.blocks, slices):
            blk = ref[sl, sl].reshape(m, n, m, n)
            y = np.einsum("aiaj->ij", blk) / m
            recon[sl, sl] = np.kron(np.eye(m), y)
        worst = max(worst, float(np.linalg.norm(ref - recon)))
    if worst > tol * d:
        raise ValueError(
            f"algebra does not match its recovered block presentation "
            f"(defect {worst:.3e})")
    return alg


# ---------------------------------------------------------------------------
# Asymptotic decomposition and the mixed-unitary index
# ---------------------------------------------------------------------------


def asymptotic_parts(ch) -> Tuple[Channel, Channel, np.ndarray]:
    """Split a unital channel as ``Phi = alpha + beta`` with unitary data.

    ``alpha = Phi ∘ E_P`` acts as a trace-preserving *-automorphism of the
    peripheral algebra P (implemented by the returned unitary ``U`` there),
    and ``beta = Phi - alpha`` has powers decaying to zero; the decay is
    asserted numerically on ``n = 1..20``.
    """
    split = peripheral_split(ch)
    d = split.projector.dim
    alg = _algebra_presentation(split.peripheral_basis, seed=0)
    u = automorphism_unitary(alg, ch)
    alpha = compose(ch, split.projector)
    beta = Channel(d, superop=superop_of(ch) - alpha.superop)

    norms = []
    power = np.eye(d * d, dtype=complex)
    for _ in range(20):
        power = power @ beta.superop
        norms.append(float(np.linalg.norm(power, 2)))
    tail = norms[-6:]
    for prev, cur in zip(tail, tail[1:]):
        if cur > 1e-12 and cur >= prev * (1.0 + 1e-9):
            raise ValueError(
                "decaying part does not contract; peripheral split is unreliable")
    return alpha, beta, u


@dataclass
class MUIndexReport:
    """Least power after which every sampled channel power is mixed unitary.

    ``index`` is None when no such power up to ``n_max`` exists
    (not-found-within report); ``per_power`` lists ``(n, verdict, residual)``
    for every sampled power.
    """

    index: Optional[int]
    n_max: int
    per_power: List[Tuple[int, str, float]] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.index is not None


def _superop_power(s: np.ndarray, n: int) -> np.ndarray:
    """n-th power by binary exponentiation (limits error accumulation)."""
    result = np.eye(s.shape[0], dtype=complex)
    base = s
    k = n
    while k > 0:
        if k & 1:
            result = result @ base
        k >>= 1
        if k:
            base = base @ base
    return result


def mu_index(ch, n_max: int = 12, cfg: Optional[FWConfig] = None) -> MUIndexReport:
    """Mixed-unitary index of a unital channel within a power horizon.

    Runs the convex-hull fit on every power ``Phi^n`` for ``n = 1..n_max``
    (no gaps, since mixed unitarity of one power says nothing about the
    next) and reports the least ``n`` from which every sampled verdict is
    MixedUnitary; honest None when the tail is not uniformly conclusive.
    """
    rep = verify(ch)
    if not rep.is_unital_channel:
        raise InvalidChannelError("mixed-unitary index needs a unital CP TP channel")
    if n_max < 1:
        raise ValueError("power horizon must be at least 1")
    cfg = cfg or FWConfig()
    s = superop_of(ch)
    per_power: List[Tuple[int, str, float]] = []
    for n in range(1, n_max + 1):
        power = Channel(rep.dim, superop=_superop_power(s, n))
        dec = fw_decompose(power, cfg)
        per_power.append((n, dec.verdict, dec.residual))
    index = None
    for n, verdict, _ in reversed(per_power):
        if verdict == "MixedUnitary":
            index = n
        else:
            break
    return MUIndexReport(index=index, n_max=n_max, per_power=per_power)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def block_algebra_to_dict(alg: BlockAlgebra) -> dict:
    return {
        "blocks": [[m, n] for m, n in alg.blocks],
        "basis_change": (None if alg.basis_change is None
                         else matrix_to_lists(alg.basis_change)),
    }


def block_algebra_from_dict(data: dict) -> BlockAlgebra:
    from .channels import ParseError

    if not isinstance(data, dict) or "blocks" not in data:
        raise ParseError("block algebra document needs a 'blocks' list")
    try:
        blocks = [(int(m), int(n)) for m, n in data["blocks"]]
    except (TypeError, ValueError) as exc:
        raise ParseError(f"malformed block list: {exc}") from None
    w = data.get("basis_change")
    basis_change = None if w is None else matrix_from_lists(w)
    try:
        return BlockAlgebra(blocks=blocks, basis_change=basis_change)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def mu_index_to_dict(report: MUIndexReport) -> dict:
    return {
        "index": report.index,
        "n_max": report.n_max,
        "per_power": [
            {"n": n, "verdict": verdict, "residual": residual}
            for n, verdict, residual in report.per_power
        ],
    }

"""One-parameter semigroups of unital channels and mixed unitarity in time.

Construction and validation of unital GKLS generators, semigroup evolution,
generator-level peripheral splits, the cone test for mixed unitarity at all
times (conic fits over conjugation differences and Hermitian dissipators
against dual witnesses), witness curves along an evolution, named example
generators, and grid scans locating where a semigroup enters the
mixed-unitary regime.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq, minimize

from .channels import (
    Channel,
    InvalidChannelError,
    ParseError,
    choi_of,
    identity_channel,
    matrix_from_lists,
    matrix_to_lists,
    superop_of,
    superop_to_choi,
    transpose_superop,
    verify,
)
from .config import DELTA_WIT, EPS_MU, TAU_WIT, TOL_PSD, FWConfig, WitnessConfig
from .matcore import cmat, dag, expm, is_hermitian
from .mucone import (
    Witness,
    _conj_choi_coords,
    _herm_basis,
    _polar_stack,
    _projection_witness,
    _vech_stack,
    fw_decompose,
    lmo_unitary,
    transpose_witness,
    unvech,
    vech,
    witness_search,
    witness_value,
)
from .structure import PeripheralSplit, _split_superop

__all__ = [
    "InvalidGeneratorError",
    "GKLSData",
    "GeneratorReport",
    "AllTimesMUReport",
    "ScanReport",
    "gkls_data",
    "gkls_superop",
    "validate_generator",
    "evolve",
    "generator_peripheral_split",
    "mu_all_times",
    "kummerer_maassen_generator",
    "example59_generator",
    "transpose_witness_bank",
    "witness_curve",
    "closed_form_g",
    "find_root_t0",
    "eventual_mu_scan",
    "generator_to_dict",
    "generator_from_dict",
    "scan_to_dict",
    "scan_to_csv",
]


class InvalidGeneratorError(ValueError):
    """The supplied map cannot generate a semigroup of unital channels."""


GeneratorLike = Union["GKLSData", Channel, np.ndarray]


def _generator_superop(lmap: GeneratorLike) -> Tuple[np.ndarray, int]:
    s = cmat(superop_of(lmap))
    d = round(np.sqrt(s.shape[0]))
    return s, d


# ---------------------------------------------------------------------------
# GKLS construction
# ---------------------------------------------------------------------------


@dataclass
class GKLSData:
    """A generator in GKLS form ``L(X) = i[H,X] + sum_j (L_j* X L_j - {L_j* L_j, X}/2)``.

    ``superop`` is the compiled matrix of L acting on column-stacked matrices.
    The form is automatically unital; it is additionally trace-preserving
    exactly when the jump balance ``sum L_j L_j* = sum L_j* L_j`` holds, and
    ``balance_defect`` records the Frobenius norm of that mismatch.
    """

    dim: int
    hamiltonian: np.ndarray
    jumps: List[np.ndarray]
    superop: np.ndarray
    balance_defect: float


def _compile_gkls(h: np.ndarray, jumps: Sequence[np.ndarray], d: int) -> np.ndarray:
    eye = np.eye(d)
    s = 1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for l in jumps:
        ll = dag(l) @ l
        s = s + np.kron(l.T, dag(l)) - 0.5 * (np.kron(eye, ll) + np.kron(ll.T, eye))
    return s


def gkls_data(hamiltonian: Optional[np.ndarray] = None,
              jumps: Sequence[np.ndarray] = (),
              dim: Optional[int] = None) -> GKLSData:
    """Build a GKLS generator from a Hamiltonian and a list of jump operators.

    The Hamiltonian must be Hermitian to 1e-10. Jump imbalance (which breaks
    trace preservation, not unitality) is recorded, not rejected, so that
    report-style validation can describe partially valid generators.
    """
    if hamiltonian is None and not jumps and dim is None:
        raise InvalidGeneratorError(
            "need a Hamiltonian, jump operators, or an explicit dimension")
    if hamiltonian is not None:
        hamiltonian = cmat(hamiltonian)
        dim = hamiltonian.shape[0] if dim is None else dim
    jumps = [cmat(l) for l in jumps]
    if dim is None:
        dim = jumps[0].shape[0]
    d = int(dim)
    if hamiltonian is None:
        hamiltonian = np.zeros((d, d), dtype=complex)
    if hamiltonian.shape != (d, d):
        raise InvalidGeneratorError(
            f"Hamiltonian shape {hamiltonian.shape} does not match dimension {d}")
    for l in jumps:
        if l.shape != (d, d):
            raise InvalidGeneratorError(
                f"jump operator shape {l.shape} does not match dimension {d}")
    if not is_hermitian(hamiltonian, 1e-10):
        raise InvalidGeneratorError("Hamiltonian must be Hermitian to 1e-10")
    hamiltonian = (hamiltonian + dag(hamiltonian)) / 2.0
    balance = sum(l @ dag(l) - dag(l) @ l for l in jumps)
    defect = 0.0 if not jumps else float(np.linalg.norm(balance))
    return GKLSData(
        dim=d,
        hamiltonian=hamiltonian,
        jumps=jumps,
        superop=_compile_gkls(hamiltonian, jumps, d),
        balance_defect=defect,
    )


def gkls_superop(g: GKLSData) -> np.ndarray:
    """Superoperator of a GKLS generator whose invariants all hold.

    Raises when the jump balance exceeds 1e-9 (the compiled map would not be
    trace-preserving); use the ``superop`` field directly for report-style
    analysis of unbalanced generators.
    """
    if g.balance_defect > 1e-9:
        raise InvalidGeneratorError(
            f"jump operators are unbalanced (defect {g.balance_defect:.3e}); "
            "the generator is unital but not trace-preserving")
    s = g.superop
    d = g.dim
    vi = np.eye(d, dtype=complex).reshape(-1, order="F")
    if (np.linalg.norm(s @ vi) > 1e-10 * max(1.0, np.linalg.norm(s))
            or np.linalg.norm(np.conj(vi) @ s) > 1e-10 * max(1.0, np.linalg.norm(s))):
        raise InvalidGeneratorError("compiled generator fails L(I)=0 or tr(L(X))=0")
    return s


def kummerer_maassen_generator(a: np.ndarray) -> GKLSData:
    """The single-jump generator ``L(X) = A* X A - (A*A X + X A*A)/2``.

    Always unital; trace-preserving exactly when A is normal. The builder
    never rejects, so ``validate_generator`` can report which properties hold.
    """
    a = cmat(a)
    if a.shape[0] != a.shape[1]:
        raise InvalidGeneratorError("jump operator must be square")
    return gkls_data(hamiltonian=None, jumps=[a], dim=a.shape[0])


def example59_generator(b: np.ndarray) -> np.ndarray:
    """Superoperator of ``L(X) = (B (tr(X) I - X^T) B*) / 2 - X`` on 3x3 matrices.

    Requires B unitary with ``tr(B* B^T) = -1``, the same condition under
    which :func:`muchan.mucone.transpose_witness` exists; the pairing of that
    witness with this generator is exactly -1/9.
    """
    b = cmat(b)
    if b.shape != (3, 3):
        raise ValueError("expected a 3x3 matrix")
    if np.linalg.norm(dag(b) @ b - np.eye(3)) > 1e-9 * 3:
        raise ValueError("B must be unitary")
    cond = complex(np.trace(dag(b) @ b.T))
    if abs(cond + 1.0) > 1e-9:
        raise ValueError(f"tr(B* B^T) must be -1, got {cond:.6g}")
    vi = np.eye(3, dtype=complex).reshape(-1, order="F")
    return (0.5 * (np.outer(vi, vi)
                   - np.kron(np.conj(b), b) @ transpose_superop(3))
            - np.eye(9, dtype=complex))


_WITNESS_BANK_B = (
    0.5 * np.array([[0, 1 - 1j, -1 - 1j],
                    [-1 + 1j, -1j, 1],
                    [1 + 1j, 1, 1j]]),
    np.array([[1, 0, 0],
              [0, 0, -1],
              [0, 1, 0]], dtype=complex),
    np.array([[0, -1, 0],
              [1, 0, 0],
              [0, 0, 1]], dtype=complex),
)


def transpose_witness_bank() -> List[Witness]:
    """The built-in analytic transpose-type witnesses on 3x3 matrices."""
    return [transpose_witness(b) for b in _WITNESS_BANK_B]


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass
class GeneratorReport:
    """Which semigroup-generator properties a map satisfies.

    Conditional complete positivity — the compression of the Choi matrix off
    the maximally entangled direction being positive semidefinite — is the
    computational criterion for generating a completely positive semigroup.
    """

    dim: int
    is_hermitian_preserving: bool
    is_unital: bool
    is_trace_preserving: bool
    is_conditionally_cp: bool
    unital_defect: float
    tp_defect: float
    min_ccp_eigenvalue: float

    @property
    def is_valid(self) -> bool:
        return (self.is_hermitian_preserving and self.is_unital
                and self.is_trace_preserving and self.is_conditionally_cp)


def validate_generator(lmap: GeneratorLike, tol: float = 1e-9) -> GeneratorReport:
    """Report-style checks for generating a semigroup of unital channels.

    Checks Hermitian preservation, ``L(I) = 0``, ``tr(L(X)) = 0``, and
    conditional complete positivity; never raises on content.
    """
    s, d = _generator_superop(lmap)
    scale = max(1.0, float(np.linalg.norm(s)))
    jl = superop_to_choi(s)
    herm_defect = float(np.linalg.norm(jl - dag(jl)))
    vi = np.eye(d, dtype=complex).reshape(-1, order="F")
    unital_defect = float(np.linalg.norm(s @ vi))
    tp_defect = float(np.linalg.norm(np.conj(vi) @ s))
    # compress the Choi matrix off the maximally entangled direction
    p = np.outer(vi, np.conj(vi)) / d
    comp = np.eye(d * d) - p
    jh = (jl + dag(jl)) / 2.0
    reduced = comp @ jh @ comp
    min_eig = float(np.linalg.eigvalsh((reduced + dag(reduced)) / 2.0)[0])
    return GeneratorReport(
        dim=d,
        is_hermitian_preserving=herm_defect <= tol * scale,
        is_unital=unital_defect <= tol * scale,
        is_trace_preserving=tp_defect <= tol * scale,
        is_conditionally_cp=min_eig >= -max(TOL_PSD, tol) * scale,
        unital_defect=unital_defect,
        tp_defect=tp_defect,
        min_ccp_eigenvalue=min_eig,
    )


# ---------------------------------------------------------------------------
# Evolution and generator-level peripheral split
# ---------------------------------------------------------------------------


def evolve(lmap: GeneratorLike, t: float) -> Channel:
    """The channel ``exp(t L)`` of a valid generator at time ``t >= 0``."""
    if t < 0:
        raise ValueError("evolution time must be nonnegative")
    rep = validate_generator(lmap)
    if not rep.is_valid:
        raise InvalidGeneratorError(
            "generator fails validation "
            f"(unital defect {rep.unital_defect:.3e}, trace defect "
            f"{rep.tp_defect:.3e}, min conditional eigenvalue "
            f"{rep.min_ccp_eigenvalue:.3e})")
    s, d = _generator_superop(lmap)
    ch = Channel(d, superop=expm(t * s))
    chrep = verify(ch)
    if not chrep.is_unital_channel:
        raise InvalidChannelError(
            f"evolved map failed channel verification at t={t:g}")
    return ch


def generator_peripheral_split(lmap: GeneratorLike) -> PeripheralSplit:
    """Split matrix space along the generator's imaginary-axis eigenvalues.

    P collects eigenvectors with ``|Re lambda| <= tol``; the engine asserts
    ``Re lambda <= 1e-8`` throughout and diagonalizability of the peripheral
    cluster, so failures signal an invalid generator.
    """
    rep = validate_generator(lmap)
    if not rep.is_valid:
        raise InvalidGeneratorError("peripheral split needs a valid generator")
    s, d = _generator_superop(lmap)
    return _split_superop(s, d, "generator")


# ---------------------------------------------------------------------------
# Mixed unitarity at all times: conic fit plus dual witnesses
# ---------------------------------------------------------------------------


@dataclass
class AllTimesMUReport:
    """Verdict on whether ``exp(tL)`` is mixed unitary for every ``t >= 0``.

    ``AllTimesMU`` carries a constructive certificate: a Hamiltonian,
    Hermitian dissipator operators ``A_j`` (contributing ``A X A - {A^2, X}/2``
    each), and weighted conjugation differences whose sum reproduces the
    generator to ``residual``. ``NotAllTimesMU-*`` carries a witness with a
    negative pairing; the suffix is the certificate grade.
    """

    verdict: str
    residual: float
    certificate_grade: Optional[str] = None
    witness: Optional[Witness] = None
    witness_pairing: Optional[float] = None
    detail: str = ""
    hamiltonian: Optional[np.ndarray] = None
    dissipators: List[np.ndarray] = field(default_factory=list)
    unitaries: List[np.ndarray] = field(default_factory=list)
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _traceless_herm_basis(d: int) -> List[np.ndarray]:
    """Orthonormal basis of traceless Hermitian matrices."""
    basis = []
    for k in range(1, d):
        v = np.zeros(d)
        v[:k] = 1.0
        v[k] = -float(k)
        basis.append(np.diag(v).astype(complex) / np.sqrt(k * (k + 1)))
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = e[j, i] = 1.0 / np.sqrt(2.0)
            basis.append(e)
            f = np.zeros((d, d), dtype=complex)
            f[i, j] = -1j / np.sqrt(2.0)
            f[j, i] = 1j / np.sqrt(2.0)
            basis.append(f)
    return basis


def _dissipator_tensor(d: int, basis: Sequence[np.ndarray]) -> np.ndarray:
    """T[m,n,:] = vech coords of the Choi matrix of the symmetrized dissipator.

    With ``B_mn(X) = H_m X H_n - (H_m H_n X + X H_m H_n)/2`` and real
    coefficients, ``A = sum_m alpha_m H_m`` gives the dissipator
    ``A X A - (A^2 X + X A^2)/2 = sum_mn alpha_m alpha_n B_mn``; only the
    symmetric part contributes, so the tensor stores it directly.
    """
    p = len(basis)
    eye = np.eye(d)
    t = np.zeros((p, p, d ** 4))
    for m in range(p):
        for n in range(m, p):
            hm, hn = basis[m], basis[n]
            cross = 0.5 * (np.kron(hn.T, hm) + np.kron(hm.T, hn))
            anti = hm @ hn + hn @ hm
            s = cross - 0.25 * (np.kron(eye, anti) + np.kron(anti.T, eye))
            coords = vech(superop_to_choi(s))
            t[m, n] = coords
            t[n, m] = coords
    return t


def _hamiltonian_columns(d: int, basis: Sequence[np.ndarray]) -> np.ndarray:
    """Columns: vech coords of the Choi matrices of ``i[H_m, .]``."""
    eye = np.eye(d)
    cols = []
    for h in basis:
        s = 1j * (np.kron(eye, h) - np.kron(h.T, eye))
        cols.append(vech(superop_to_choi(s)))
    return np.stack(cols, axis=1)


def _cone_fit_objective(tperp: np.ndarray, yperp: np.ndarray,
                        amat: np.ndarray, p: int):
    k = amat.shape[1]

    def fun(x):
        g = x[:p * p].reshape(p, p)
        c = x[p * p:]
        m = g @ g.T
        model = np.einsum("mnk,mn->k", tperp, m)
        if k:
            model = model + amat @ c
        r = yperp - model
        f = float(r @ r)
        gmat = -4.0 * (np.einsum("mnk,k->mn", tperp, r) @ g)
        grad = np.concatenate([gmat.reshape(-1), -2.0 * (amat.T @ r)])
        return f, grad

    return fun


def _cone_fit_residual(tperp, yperp, amat, g, c):
    model = np.einsum("mnk,mn->k", tperp, g @ g.T)
    if amat.shape[1]:
        model = model + amat @ c
    return yperp - model


def _gauss_newton_polish(tperp, yperp, amat, g, c, iters: int = 12):
    """Quadratically convergent finisher for the conic fit (clips c >= 0)."""
    p = g.shape[0]
    d4 = yperp.size
    r = _cone_fit_residual(tperp, yperp, amat, g, c)
    best = float(np.linalg.norm(r))
    for _ in range(iters):
        if best < 1e-14:
            break
        jg = 2.0 * np.einsum("mnk,nj->kmj", tperp, g).reshape(d4, p * p)
        jmat = np.hstack([jg, amat]) if amat.shape[1] else jg
        step, *_ = np.linalg.lstsq(jmat, r, rcond=None)
        improved = False
        for scale in (1.0, 0.5, 0.25, 0.1):
            g_try = g + scale * step[:p * p].reshape(p, p)
            c_try = np.maximum(c + scale * step[p * p:], 0.0)
            r_try = _cone_fit_residual(tperp, yperp, amat, g_try, c_try)
            n_try = float(np.linalg.norm(r_try))
            if n_try < best * (1.0 - 1e-12):
                g, c, r, best = g_try, c_try, r_try, n_try
                improved = True
                break
        if not improved:
            break
    return g, c, best


def _fit_current_atoms(tperp, yperp, amat, g0, c0, p):
    fun = _cone_fit_objective(tperp, yperp, amat, p)
    x0 = np.concatenate([g0.reshape(-1), c0])
    bounds = [(None, None)] * (p * p) + [(0.0, None)] * len(c0)
    res = minimize(fun, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                   options={"maxiter": 2000, "ftol": 1e-18, "gtol": 1e-12})
    g = res.x[:p * p].reshape(p, p)
    c = np.maximum(res.x[p * p:], 0.0)
    return _gauss_newton_polish(tperp, yperp, amat, g, c)


def _projected_atom_cols(us: np.ndarray, q: np.ndarray, id_coords: np.ndarray,
                         d: int) -> np.ndarray:
    k = us.shape[0]
    w = np.conj(us).reshape(k, d * d)
    j = np.einsum("ki,kj->kij", w, np.conj(w)) / d
    cols = _vech_stack(j).T - id_coords[:, None]
    return cols - q @ (q.T @ cols)


def _joint_cone_refine(tperp, yperp, g, c, units, q, id_coords, d,
                       iters: int = 60):
    """Levenberg-Marquardt step over Gram factor, weights, and atom unitaries.

    Fitting conic weights over fixed conjugation atoms zigzags at a linear
    rate when the atoms themselves are slightly off; moving the unitaries
    (tangents ``U i H``) together with the weights and the dissipator factor
    restores terminal quadratic convergence. Steps are accepted only when the
    residual drops.
    """
    p = g.shape[0]
    n = d * d
    hbs = np.stack(_herm_basis(d))
    nb = hbs.shape[0]
    u = np.stack([np.asarray(x, dtype=complex) for x in units])
    k = u.shape[0]
    a = _projected_atom_cols(u, q, id_coords, d)
    r = yperp - np.einsum("mnk,mn->k", tperp, g @ g.T) - a @ c
    f = float(np.linalg.norm(r))
    mu = 1e-8
    dd = yperp.size
    for _ in range(iters):
        if f < 1e-14:
            break
        jg = 2.0 * np.einsum("mnk,nj->kmj", tperp, g).reshape(dd, p * p)
        w = np.conj(u).reshape(k, n)
        dwa = np.conj(np.einsum("kab,mbc->kmac", u, 1j * hbs)).reshape(k, nb, n)
        dj = (np.einsum("kmi,kj->kmij", dwa, np.conj(w))
              + np.einsum("ki,kmj->kmij", w, np.conj(dwa))) / d
        bl = _vech_stack(dj).reshape(k * nb, dd)
        bl = bl - (bl @ q) @ q.T
        jtan = (bl.reshape(k, nb, dd) * c[:, None, None]).reshape(k * nb, dd).T
        jac = np.hstack([jg, a, jtan])
        accepted = False
        for _ in range(14):
            aug = np.vstack([jac, np.sqrt(mu) * np.eye(jac.shape[1])])
            rhs = np.concatenate([r, np.zeros(jac.shape[1])])
            delta, *_ = np.linalg.lstsq(aug, rhs, rcond=None)
            g_try = g + delta[:p * p].reshape(p, p)
            c_try = np.maximum(c + delta[p * p:p * p + k], 0.0)
            h = np.einsum("km,mab->kab",
                          delta[p * p + k:].reshape(k, nb), hbs)
            u_try = _polar_stack(u + u @ (1j * h))
            a_try = _projected_atom_cols(u_try, q, id_coords, d)
            r_try = (yperp - np.einsum("mnk,mn->k", tperp, g_try @ g_try.T)
                     - a_try @ c_try)
            f_try = float(np.linalg.norm(r_try))
            if f_try < f:
                g, c, u, a, r, f = g_try, c_try, u_try, a_try, r_try, f_try
                mu = max(mu / 3.0, 1e-14)
                accepted = True
                break
            mu *= 10.0
        if not accepted:
            break
    return g, c, list(u), a, f


def mu_all_times(lmap: GeneratorLike, cfg: Optional[FWConfig] = None,
                 witnesses: Sequence[Witness] = ()) -> AllTimesMUReport:
    """Decide whether every ``exp(tL)`` is mixed unitary.

    The affirmative cone equals conic combinations of conjugation differences
    ``Ad_U - id`` and Hermitian dissipators plus a Hamiltonian part, so the
    primal side fits the generator's Choi coordinates over exactly that
    family: the dissipator cone is the image of the positive semidefinite
    cone under a fixed linear map (fit through a full-rank Gram factor), the
    Hamiltonian span is projected out, and conjugation atoms are grown
    through the unitary oracle. The negative side tries analytic witnesses
    first (built-in transpose-type bank plus any supplied), then rigorous
    trace/positivity obstructions, then a heuristic dual search constrained
    to pair zero with the identity.
    """
    cfg = cfg or FWConfig()
    s, d = _generator_superop(lmap)
    rep = validate_generator(lmap)
    scale = max(1.0, float(np.linalg.norm(s)))
    if not rep.is_hermitian_preserving:
        raise InvalidGeneratorError("generator is not Hermitian-preserving")
    if not rep.is_unital:
        raise InvalidGeneratorError(
            f"generator is not unital (defect {rep.unital_defect:.3e})")

    # rigorous obstructions first: they need no search at all
    if not rep.is_conditionally_cp:
        return AllTimesMUReport(
            verdict="NotAllTimesMU-Analytic",
            residual=float("nan"),
            certificate_grade="Analytic",
            detail=("conditional complete positivity fails "
                    f"(min eigenvalue {rep.min_ccp_eigenvalue:.3e}); the "
                    "evolution leaves the completely positive maps"),
        )
    if rep.tp_defect > 1e-9 * scale:
        return AllTimesMUReport(
            verdict="NotAllTimesMU-Analytic",
            residual=float("nan"),
            certificate_grade="Analytic",
            detail=(f"trace defect {rep.tp_defect:.3e}: the evolution is not "
                    "trace-preserving at small times, so no time interval of "
                    "mixed-unitary channels exists"),
        )

    # witness candidates: supplied first, then the built-in analytic bank
    candidates = list(witnesses)
    if d == 3:
        candidates.extend(transpose_witness_bank())
    for w in candidates:
        if w.gamma.dim != d:
            raise ValueError("witness dimension does not match the generator")
        val = witness_value(w, lmap)
        if val <= -DELTA_WIT and (w.min_unitary_value - w.id_value) >= -TAU_WIT:
            return AllTimesMUReport(
                verdict=f"NotAllTimesMU-{w.certificate_grade}",
                residual=float("nan"),
                certificate_grade=w.certificate_grade,
                witness=w,
                witness_pairing=val,
                detail=f"witness pairing {val:.6g} below -{DELTA_WIT:g}",
            )

    # primal conic fit in Hamiltonian-reduced Choi coordinates
    basis = _traceless_herm_basis(d)
    p = len(basis)
    kcols = _hamiltonian_columns(d, basis)
    q, _ = np.linalg.qr(kcols)
    y = vech(superop_to_choi(s))
    yperp = y - q @ (q.T @ y)
    tfull = _dissipator_tensor(d, basis)
    tflat = tfull.reshape(p * p, -1)
    tperp = (tflat - (tflat @ q) @ q.T).reshape(p, p, -1)
    id_coords = vech(choi_of(identity_channel(d)))

    # warm start: unconstrained symmetric fit, clipped to the PSD cone
    cols = []
    for m in range(p):
        cols.append(tperp[m, m])
    for m in range(p):
        for n in range(m + 1, p):
            cols.append(2.0 * tperp[m, n])
    wmat = np.stack(cols, axis=1)
    sol, *_ = np.linalg.lstsq(wmat, yperp, rcond=None)
    m0 = np.zeros((p, p))
    idx = p
    for m in range(p):
        m0[m, m] = sol[m]
    for m in range(p):
        for n in range(m + 1, p):
            m0[m, n] = m0[n, m] = sol[idx]
            idx += 1
    evals, evecs = np.linalg.eigh((m0 + m0.T) / 2.0)
    g = evecs @ np.diag(np.sqrt(np.clip(evals, 0.0, None)))

    units: List[np.ndarray] = []
    c = np.zeros(0)
    amat = np.zeros((y.size, 0))
    residual = float("inf")
    max_atoms = 4 * d * d
    lmo_cfg = FWConfig(starts=cfg.starts, lmo_steps=cfg.lmo_steps, seed=cfg.seed)

    for round_idx in range(max_atoms + 1):
        g, c, residual = _fit_current_atoms(tperp, yperp, amat, g, c, p)
        if units:
            g, c, units, amat, residual = _joint_cone_refine(
                tperp, yperp, g, c, units, q, id_coords, d)
        if residual <= EPS_MU:
            break
        r = _cone_fit_residual(tperp, yperp, amat, g, c)
        u, val = lmo_unitary(unvech(r), "max", lmo_cfg,
                             extra_starts=units[-3:], seed_offset=37 + round_idx)
        score = val - float(r @ id_coords)
        if score <= 1e-9 * max(1.0, residual) or len(units) >= max_atoms:
            break
        coords = _conj_choi_coords(u, d) - id_coords
        coords_perp = coords - q @ (q.T @ coords)
        if units and min(np.linalg.norm(coords_perp - amat[:, i])
                         for i in range(amat.shape[1])) < 1e-9:
            break
        units.append(u)
        amat = np.hstack([amat, coords_perp[:, None]])
        nrm2 = float(coords_perp @ coords_perp)
        c = np.concatenate([c, [max(score, 0.0) / max(nrm2, 1e-12)]])

    if residual <= EPS_MU:
        # constructive parts: dissipators from the Gram factor, Hamiltonian
        # by re-solving the projected-out span on the full coordinates
        mstar = g @ g.T
        evals, evecs = np.linalg.eigh(mstar)
        dissipators = []
        for j in range(p - 1, -1, -1):
            if evals[j] <= 1e-12 * max(1.0, evals[-1]):
                break
            a = sum(np.sqrt(evals[j]) * evecs[m, j] * basis[m] for m in range(p))
            dissipators.append(a)
        keep = c > 1e-12
        weights = c[keep]
        kept_units = [u for u, k in zip(units, keep) if k]
        model_full = np.einsum("mnk,mn->k", tfull, mstar)
        for w_i, u in zip(weights, kept_units):
            model_full = model_full + w_i * (_conj_choi_coords(u, d) - id_coords)
        z, *_ = np.linalg.lstsq(kcols, y - model_full, rcond=None)
        hamiltonian = sum(z[m] * basis[m] for m in range(p))
        return AllTimesMUReport(
            verdict="AllTimesMU",
            residual=residual,
            certificate_grade="Constructive",
            detail=f"conic fit residual {residual:.3e}",
            hamiltonian=hamiltonian,
            dissipators=dissipators,
            unitaries=kept_units,
            weights=weights,
        )

    # dual fallback: witness search restricted to pair zero with the identity
    dual = witness_search(lmap, WitnessConfig(starts=cfg.starts,
                                              lmo_steps=cfg.lmo_steps,
                                              seed=cfg.seed), d_space=True)
    if dual.separating and dual.value_on_target is not None \
            and dual.value_on_target <= -DELTA_WIT:
        return AllTimesMUReport(
            verdict="NotAllTimesMU-Heuristic",
            residual=residual,
            certificate_grade="Heuristic",
            witness=dual,
            witness_pairing=dual.value_on_target,
            detail=(f"dual witness pairing {dual.value_on_target:.6g} with "
                    f"unitary floor {dual.min_unitary_value:.3e}"),
        )
    return AllTimesMUReport(
        verdict="Undetermined",
        residual=residual,
        certificate_grade=None,
        detail=(f"conic fit residual {residual:.3e} above {EPS_MU:g} and no "
                "separating witness found"),
    )


# ---------------------------------------------------------------------------
# Witness curves and the closed-form comparison curve
# ---------------------------------------------------------------------------


@dataclass
class ScanReport:
    """Per-time witness values and mixed-unitarity verdicts along a semigroup.

    ``t0_estimate`` is the largest time of the initial run of
    not-mixed-unitary verdicts; ``t1_estimate`` the smallest time from which
    every verdict is MixedUnitary; both honest ``None`` when blocked by
    undetermined points.
    """

    grid: np.ndarray
    witness_values: np.ndarray
    mu_verdicts: List[str]
    residuals: np.ndarray
    t0_estimate: Optional[float]
    t1_estimate: Optional[float]

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        if self.grid.ndim != 1 or self.grid.size == 0:
            raise ValueError("time grid must be a nonempty vector")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("time grid must be strictly increasing")
        if not (len(self.witness_values) == len(self.mu_verdicts)
                == len(self.residuals) == self.grid.size):
            raise ValueError("scan columns must match the grid length")
        if (self.t0_estimate is not None and self.t1_estimate is not None
                and self.t0_estimate > self.t1_estimate):
            raise ValueError("estimated exit time exceeds the entry time")


def _verdict_extents(grid: np.ndarray, verdicts: Sequence[str],
                     skip_leading_neutral: bool = False,
                     values: Optional[np.ndarray] = None
                     ) -> Tuple[Optional[float], Optional[float]]:
    start = 0
    if skip_leading_neutral and values is not None:
        while start < len(verdicts) and abs(values[start]) <= DELTA_WIT:
            start += 1
    t0 = None
    for t, v in zip(grid[start:], verdicts[start:]):
        if v.startswith("NotMixedUnitary"):
            t0 = float(t)
        else:
            break
    t1 = None
    for t, v in zip(grid[::-1], list(verdicts)[::-1]):
        if v == "MixedUnitary":
            t1 = float(t)
        else:
            break
    return t0, t1


def witness_curve(lmap: GeneratorLike, gamma, grid: Sequence[float]) -> ScanReport:
    """Sample the pairing of a fixed witness against the evolution.

    The value at time ``t`` is ``<Gamma, exp(tL)>``; at ``t = 0`` it equals
    the witness's pairing with the identity. Points are graded by the witness
    alone (no convex fits run), so the only verdicts are
    ``NotMixedUnitary-<grade>`` and ``Undetermined``; leading near-zero
    values are skipped when locating the initial negative run.
    """
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < 0):
        raise ValueError("evolution times must be nonnegative")
    rep = validate_generator(lmap)
    if not rep.is_valid:
        raise InvalidGeneratorError("witness curve needs a valid generator")
    if isinstance(gamma, Witness):
        g = gamma.gamma
        grade = gamma.certificate_grade
        floor_margin = gamma.min_unitary_value - gamma.id_value
    else:
        # a bare map has no validated unitary floor, so its negative values
        # cannot grade points; the sampled curve is still returned
        g = gamma
        grade = "Heuristic"
        floor_margin = -np.inf
    grep = verify(g)
    if not (grep.is_unital and grep.is_tp and grep.is_hermitian_preserving):
        raise ValueError("witness must be unital, TP, and Hermitian-preserving")
    s, d = _generator_superop(lmap)
    values = np.empty(grid.size)
    verdicts = []
    for i, t in enumerate(grid):
        ch = Channel(d, superop=expm(float(t) * s))
        values[i] = witness_value(g, ch)
        if values[i] <= -DELTA_WIT and floor_margin >= -TAU_WIT:
            verdicts.append(f"NotMixedUnitary-{grade}")
        else:
            verdicts.append("Undetermined")
    t0, _ = _verdict_extents(grid, verdicts, skip_leading_neutral=True,
                             values=values)
    return ScanReport(
        grid=grid,
        witness_values=values,
        mu_verdicts=verdicts,
        residuals=np.full(grid.size, np.nan),
        t0_estimate=t0,
        t1_estimate=None,
    )


def closed_form_g(t) -> float:
    """Witness curve of the built-in monomial-B generator in closed form.

    Equals ``(exp(-t)/9) (e^t - e^{-t/2} - 3 sinh(t/2) - 2 sin(t/2))``; zero
    at the origin with slope -1/9, negative up to its positive root, then
    positive.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("the curve is defined for nonnegative times")
    val = (np.exp(-t) / 9.0) * (np.exp(t) - np.exp(-t / 2.0)
                                - 3.0 * np.sinh(t / 2.0) - 2.0 * np.sin(t / 2.0))
    return float(val) if val.ndim == 0 else val


def find_root_t0() -> float:
    """Positive root of ``e^t - e^{-t/2} - 3 sinh(t/2) - 2 sin(t/2)`` in (0.1, 3)."""

    def f(t):
        return np.exp(t) - np.exp(-t / 2.0) - 3.0 * np.sinh(t / 2.0) \
            - 2.0 * np.sin(t / 2.0)

    lo, hi = 0.1, 3.0
    if not (f(lo) < 0.0 < f(hi)):
        raise ArithmeticError("no sign change found on the root bracket")
    return float(brentq(f, lo, hi, xtol=1e-12, rtol=8.9e-16))


# ---------------------------------------------------------------------------
# Eventual mixed unitarity scans
# ---------------------------------------------------------------------------


def eventual_mu_scan(lmap: GeneratorLike, grid: Sequence[float],
                     cfg: Optional[FWConfig] = None,
                     witness: Optional[Witness] = None) -> ScanReport:
    """Grade ``exp(tL)`` on a time grid and locate the mixed-unitary entry.

    Each point tries, in order: the supplied witness (an analytic negative
    pairing settles the point without any fitting), the convex fit over
    conjugations, and a projection witness built from that fit's direction.
    Scans deliberately skip the cutting-plane dual search — its cost per grid
    point is unbounded; undetermined points stay Undetermined and block the
    estimates honestly.
    """
    cfg = cfg or FWConfig()
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < 0):
        raise ValueError("evolution times must be nonnegative")
    rep = validate_generator(lmap)
    if not rep.is_valid:
        raise InvalidGeneratorError("scan needs a valid generator")
    s, d = _generator_superop(lmap)
    if witness is not None and witness.gamma.dim != d:
        raise ValueError("witness dimension does not match the generator")

    values = np.full(grid.size, np.nan)
    residuals = np.full(grid.size, np.nan)
    verdicts: List[str] = []
    lmo_cfg = FWConfig(starts=cfg.starts, lmo_steps=cfg.lmo_steps, seed=cfg.seed)
    for i, t in enumerate(grid):
        ch = Channel(d, superop=expm(float(t) * s))
        if witness is not None:
            values[i] = witness_value(witness, ch)
            margin = witness.min_unitary_value - witness.id_value
            if values[i] <= -DELTA_WIT and margin >= -TAU_WIT:
                verdicts.append(f"NotMixedUnitary-{witness.certificate_grade}")
                continue
        dec = fw_decompose(ch, cfg)
        residuals[i] = dec.residual
        if dec.verdict == "MixedUnitary":
            verdicts.append("MixedUnitary")
            continue
        rho = np.stack([_conj_choi_coords(u, d) for u in dec.unitaries],
                       axis=1) @ dec.weights
        cand = _projection_witness(vech(choi_of(ch)), rho, d, lmo_cfg)
        if cand is not None and cand[1] <= -DELTA_WIT and cand[2] >= -TAU_WIT:
            verdicts.append("NotMixedUnitary-Heuristic")
        else:
            verdicts.append("Undetermined")
    t0, t1 = _verdict_extents(grid, verdicts)
    return ScanReport(
        grid=grid,
        witness_values=values,
        mu_verdicts=verdicts,
        residuals=residuals,
        t0_estimate=t0,
        t1_estimate=t1,
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def generator_to_dict(lmap: GeneratorLike) -> dict:
    if isinstance(lmap, GKLSData):
        return {
            "dim": lmap.dim,
            "kind": "gkls",
            "H": matrix_to_lists(lmap.hamiltonian),
            "jumps": [matrix_to_lists(l) for l in lmap.jumps],
        }
    s, d = _generator_superop(lmap)
    return {"dim": d, "kind": "superop", "matrix": matrix_to_lists(s)}


def generator_from_dict(data: dict) -> GeneratorLike:
    """Parse a generator document; unknown keys are ignored."""
    if not isinstance(data, dict):
        raise ParseError("generator document must be a JSON object")
    kind = data.get("kind")
    if kind == "gkls":
        h = data.get("H")
        jumps = data.get("jumps", [])
        if h is None and not jumps and "dim" not in data:
            raise ParseError("gkls document needs H, jumps, or dim")
        try:
            hmat = None if h is None else matrix_from_lists(h)
            jmats = [matrix_from_lists(j) for j in jumps]
            dim = int(data["dim"]) if "dim" in data else None
        except (ParseError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed gkls document: {exc}") from None
        try:
            return gkls_data(hamiltonian=hmat, jumps=jmats, dim=dim)
        except InvalidGeneratorError as exc:
            raise ParseError(str(exc)) from None
    if kind == "superop":
        if "matrix" not in data:
            raise ParseError("superop document needs a 'matrix' field")
        s = matrix_from_lists(data["matrix"])
        n = s.shape[0]
        d = round(np.sqrt(n))
        if s.shape != (n, n) or d * d != n:
            raise ParseError("superoperator matrix must be square of size d^2")
        if "dim" in data and int(data["dim"]) != d:
            raise ParseError("declared dimension does not match the matrix")
        return s
    raise ParseError(f"unknown generator kind {kind!r}")


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def scan_to_dict(report: ScanReport) -> dict:
    def clean(v):
        return None if np.isnan(v) else float(v)

    return {
        "grid": [float(t) for t in report.grid],
        "witness_values": [clean(v) for v in report.witness_values],
        "mu_verdicts": list(report.mu_verdicts),
        "residuals": [clean(r) for r in report.residuals],
        "t0_estimate": report.t0_estimate,
        "t1_estimate": report.t1_estimate,
    }


def scan_to_csv(report: ScanReport) -> str:
    lines = ["t,witness_value,verdict,residual"]
    for t, wv, v, r in zip(report.grid, report.witness_values,
                           report.mu_verdicts, report.residuals):
        lines.append(f"{_fmt(t)},{_fmt(wv)},{v},{_fmt(r)}")
    return "\n".join(lines) + "\n"

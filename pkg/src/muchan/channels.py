"""Linear maps on d x d matrices: representations, verification, builders.

Conventions
-----------
* ``vec`` is column-stacking, so ``vec(A X B) = (B^T kron A) vec(X)`` and the
  superoperator of ``X -> U* X U`` is ``U^T kron U*``.
* The Choi matrix is ``J(Phi) = (id kron Phi)(|Omega><Omega|)`` with the
  maximally entangled ``|Omega> = d^{-1/2} sum_j e_j kron e_j``; equivalently
  ``J = (1/d) sum_ij E_ij kron Phi(E_ij)``.
* Maps pair via ``<Phi, Psi> = tr(J(Phi)* J(Psi))``; this embedding is an
  isometry, so channel geometry is done on Choi matrices.
* Conjugations are written ``Ad_U(X) = U* X U``; their Choi matrices are the
  rank-one projectors ``(1/d)|w_U><w_U|`` with ``w_U = sum_j e_j kron U* e_j``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from typing import List, Optional, Sequence, Union

import numpy as np

from .config import TOL_HERM, TOL_PSD, TOL_RANK
from .matcore import cmat, dag, hs_inner, is_hermitian

__all__ = [
    "ParseError",
    "InvalidChannelError",
    "Channel",
    "VerifyReport",
    "vec",
    "unvec",
    "choi_to_superop",
    "superop_to_choi",
    "kraus_to_superop",
    "kraus_to_choi",
    "transpose_superop",
    "choi_of",
    "kraus_of",
    "superop_of",
    "apply",
    "compose",
    "dual_of",
    "verify",
    "identity_channel",
    "depolarizing",
    "holevo_werner",
    "ad_unitary",
    "transpose_map",
    "pair",
    "channel_to_dict",
    "channel_from_dict",
    "channel_to_json",
    "channel_from_json",
    "matrix_to_lists",
    "matrix_from_lists",
]


class ParseError(ValueError):
    """Raised when serialized input cannot be decoded."""


class InvalidChannelError(ValueError):
    """Raised when a decoded object fails channel validation."""


# ---------------------------------------------------------------------------
# vec / reshuffle primitives
# ---------------------------------------------------------------------------


def vec(x: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    x = np.asarray(x)
    return x.reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vec`."""
    v = np.asarray(v)
    d = round(np.sqrt(v.size))
    if d * d != v.size:
        raise ValueError("vector length is not a perfect square")
    return v.reshape(d, d, order="F")


def _reshuffle(m: np.ndarray) -> np.ndarray:
    """Axis permutation linking superoperator and (unnormalized) Choi layouts.

    With column-stacking ``S[k + d l, i + d j] = Phi(E_ij)[k, l]`` and
    ``(d J)[i d + k, j d + l] = Phi(E_ij)[k, l]``; both directions are the same
    transposition of the rank-4 view.
    """
    n = m.shape[0]
    d = round(np.sqrt(n))
    if d * d != n or m.shape != (n, n):
        raise ValueError("expected a d^2 x d^2 matrix")
    return m.reshape(d, d, d, d).transpose(3, 1, 2, 0).reshape(n, n)


def superop_to_choi(s: np.ndarray) -> np.ndarray:
    """Choi matrix of the map whose superoperator is ``s``."""
    s = np.asarray(s, dtype=complex)
    d = round(np.sqrt(s.shape[0]))
    return _reshuffle(s) / d


def choi_to_superop(j: np.ndarray) -> np.ndarray:
    """Superoperator of the map whose Choi matrix is ``j``."""
    j = np.asarray(j, dtype=complex)
    d = round(np.sqrt(j.shape[0]))
    return _reshuffle(j) * d


def kraus_to_superop(ops: Sequence[np.ndarray]) -> np.ndarray:
    """Superoperator of ``X -> sum_k V_k* X V_k`` (``V^T kron V*`` terms)."""
    ops = [np.asarray(v, dtype=complex) for v in ops]
    d = ops[0].shape[0]
    s = np.zeros((d * d, d * d), dtype=complex)
    for v in ops:
        s += np.kron(v.T, dag(v))
    return s


def kraus_to_choi(ops: Sequence[np.ndarray]) -> np.ndarray:
    """Choi matrix of ``X -> sum_k V_k* X V_k``.

    Each operator contributes the rank-one term ``(1/d)|w><w|`` with
    ``w = row-major flattening of conj(V)``.
    """
    ops = [np.asarray(v, dtype=complex) for v in ops]
    d = ops[0].shape[0]
    w = np.stack([np.conj(v).reshape(-1) for v in ops])
    return w.T @ np.conj(w) / d


def transpose_superop(d: int) -> np.ndarray:
    """Superoperator of the transpose map (the swap in the rank-4 view)."""
    s = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            s[i + d * j, j + d * i] = 1.0
    return s


def _ptrace_first(j: np.ndarray, d: int) -> np.ndarray:
    """(tr kron id) of a d^2 x d^2 matrix in kron index order."""
    return np.einsum("ikil->kl", j.reshape(d, d, d, d))


def _ptrace_second(j: np.ndarray, d: int) -> np.ndarray:
    """(id kron tr) of a d^2 x d^2 matrix in kron index order."""
    return np.einsum("ikjk->ij", j.reshape(d, d, d, d))


# ---------------------------------------------------------------------------
# The map carrier
# ---------------------------------------------------------------------------

_REP_NAMES = ("kraus", "choi", "superop")


class Channel:
    """A linear map on d x d matrices held in one or more representations.

    The class carries arbitrary Hermitian-preserving (or even general) linear
    maps; complete positivity and trace/unitality are properties checked by
    :func:`verify`, not construction invariants. Representations supplied at
    construction are cross-checked against each other on the matrix-unit
    basis; missing ones are derived lazily and cached.
    """

    def __init__(self, dim: int, *, kraus: Optional[Sequence[np.ndarray]] = None,
                 choi: Optional[np.ndarray] = None, superop: Optional[np.ndarray] = None):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = int(dim)
        n = dim * dim
        self._kraus: Optional[List[np.ndarray]] = None
        self._choi: Optional[np.ndarray] = None
        self._superop: Optional[np.ndarray] = None

        given = []
        if kraus is not None:
            ops = [cmat(v) for v in kraus]
            if not ops:
                raise ValueError("kraus list must be non-empty")
            for v in ops:
                if v.shape != (dim, dim):
                    raise ValueError(f"kraus operator shape {v.shape} != {(dim, dim)}")
            self._kraus = ops
            given.append(("kraus", kraus_to_superop(ops)))
        if choi is not None:
            j = cmat(choi)
            if j.shape != (n, n):
                raise ValueError(f"choi shape {j.shape} != {(n, n)}")
            self._choi = j
            given.append(("choi", choi_to_superop(j)))
        if superop is not None:
            s = cmat(superop)
            if s.shape != (n, n):
                raise ValueError(f"superop shape {s.shape} != {(n, n)}")
            self._superop = s
            given.append(("superop", s))
        if not given:
            raise ValueError("need at least one representation")
        self.rep = given[0][0]

        base = given[0][1]
        scale = max(1.0, float(np.linalg.norm(base)))
        for name, s in given[1:]:
            if np.linalg.norm(s - base) > 1e-10 * scale:
                raise InvalidChannelError(
                    f"{self.rep} and {name} representations disagree on the matrix-unit basis")
        if self._superop is None:
            self._superop = base

    # -- representations ----------------------------------------------------

    @property
    def superop(self) -> np.ndarray:
        return self._superop

    @property
    def choi(self) -> np.ndarray:
        if self._choi is None:
            self._choi = superop_to_choi(self._superop)
        return self._choi

    @property
    def kraus(self) -> List[np.ndarray]:
        """Canonical Kraus operators (requires a CP map).

        Ordered by descending Choi eigenvalue; each operator's first entry of
        significant magnitude (row-major) is phased to be real positive.
        """
        if self._kraus is None:
            self._kraus = _canonical_kraus(self.choi, self.dim)
        return self._kraus

    # -- action --------------------------------------------------------------

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = cmat(x)
        if x.shape != (self.dim, self.dim):
            raise ValueError(f"input shape {x.shape} != {(self.dim, self.dim)}")
        return unvec(self.superop @ vec(x))

    __call__ = apply


def _canonical_kraus(j: np.ndarray, d: int) -> List[np.ndarray]:
    """Kraus operators from a PSD Choi matrix, canonically ordered and phased."""
    jh = (j + dag(j)) / 2.0
    if np.linalg.norm(j - jh) > TOL_HERM * max(1.0, np.linalg.norm(j)):
        raise InvalidChannelError("Choi matrix is not Hermitian; no Kraus form")
    evals, evecs = np.linalg.eigh(jh)
    if evals[0] < -TOL_PSD:
        raise InvalidChannelError(
            f"map is not completely positive (min Choi eigenvalue {evals[0]:.3e})")
    top = evals[-1]
    keep = np.nonzero(evals > TOL_RANK * max(top, 0.0))[0][::-1]
    ops = []
    for idx in keep:
        w = np.sqrt(d * evals[idx]) * evecs[:, idx]
        v = np.conj(w.reshape(d, d))
        flat = v.reshape(-1)
        sig = np.abs(flat) > 1e-12 * np.max(np.abs(flat))
        lead = flat[np.argmax(sig)]
        ops.append(v * (np.abs(lead) / lead))
    return ops


# ---------------------------------------------------------------------------
# Functional interface
# ---------------------------------------------------------------------------


MapLike = Union[Channel, np.ndarray]


def _as_channel(m: MapLike) -> Channel:
    if isinstance(m, Channel):
        return m
    if hasattr(m, "superop"):  # generator-like carriers
        s = np.asarray(m.superop)
    else:
        s = cmat(m)
    d = round(np.sqrt(s.shape[0]))
    return Channel(d, superop=s)


def choi_of(m: MapLike) -> np.ndarray:
    """Choi matrix of a channel-like object (superoperator arrays accepted)."""
    return _as_channel(m).choi


def superop_of(m: MapLike) -> np.ndarray:
    return _as_channel(m).superop


def kraus_of(m: MapLike) -> List[np.ndarray]:
    """Canonical Kraus list of a CP map; length equals the Choi rank."""
    return list(_as_channel(m).kraus)


def apply(m: MapLike, x: np.ndarray) -> np.ndarray:
    return _as_channel(m).apply(x)


def compose(a: MapLike, b: MapLike) -> Channel:
    """The map ``X -> a(b(X))``."""
    a, b = _as_channel(a), _as_channel(b)
    if a.dim != b.dim:
        raise ValueError("dimension mismatch in composition")
    return Channel(a.dim, superop=a.superop @ b.superop)


def dual_of(m: MapLike) -> Channel:
    """Hilbert-Schmidt adjoint: ``<Phi*(X), Y> = <X, Phi(Y)>``."""
    ch = _as_channel(m)
    return Channel(ch.dim, superop=dag(ch.superop))


def pair(a: MapLike, b: MapLike) -> complex:
    """Map-space inner product ``tr(J(a)* J(b))``."""
    return hs_inner(choi_of(a), choi_of(b))


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


@dataclass
class VerifyReport:
    """Outcome of the structural checks on a linear map."""

    dim: int
    is_hermitian_preserving: bool
    is_cp: bool
    is_tp: bool
    is_unital: bool
    choi_rank: int
    min_choi_eigenvalue: float
    unital_error: float
    tp_error: float

    @property
    def is_unital_channel(self) -> bool:
        return (self.is_hermitian_preserving and self.is_cp
                and self.is_tp and self.is_unital)

    def to_dict(self) -> dict:
        return asdict(self)


def verify(m: MapLike, tol: float = 1e-8) -> VerifyReport:
    """Check Hermiticity preservation, CP, TP and unitality of a map.

    CP is decided by the minimum Choi eigenvalue against an absolute floor;
    TP and unitality by the two Choi partial traces against ``I/d``.
    """
    ch = _as_channel(m)
    d = ch.dim
    j = ch.choi
    herm = is_hermitian(j)
    jh = (j + dag(j)) / 2.0
    evals = np.linalg.eigvalsh(jh)
    min_eig = float(evals[0])
    top = float(evals[-1])
    rank = int(np.sum(evals > TOL_RANK * max(top, 0.0)))
    eye = np.eye(d) / d
    unital_error = float(np.linalg.norm(_ptrace_first(j, d) - eye))
    tp_error = float(np.linalg.norm(_ptrace_second(j, d) - eye))
    return VerifyReport(
        dim=d,
        is_hermitian_preserving=bool(herm),
        is_cp=bool(herm and min_eig >= -TOL_PSD),
        is_tp=bool(tp_error <= tol),
        is_unital=bool(unital_error <= tol),
        choi_rank=rank,
        min_choi_eigenvalue=min_eig,
        unital_error=unital_error,
        tp_error=tp_error,
    )


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def identity_channel(d: int) -> Channel:
    return Channel(d, kraus=[np.eye(d)], superop=np.eye(d * d))


def depolarizing(d: int) -> Channel:
    """The map ``X -> tr(X) I/d``."""
    v = vec(np.eye(d)).reshape(-1, 1)
    s = (v @ dag(v)) / d
    return Channel(d, choi=np.eye(d * d) / (d * d), superop=s)


def ad_unitary(u: np.ndarray) -> Channel:
    """Unitary conjugation ``X -> U* X U``."""
    u = cmat(u)
    d = u.shape[0]
    if u.shape != (d, d) or np.linalg.norm(dag(u) @ u - np.eye(d)) > 1e-10 * max(1.0, d):
        raise ValueError("ad_unitary requires a unitary matrix")
    return Channel(d, kraus=[u], superop=np.kron(u.T, dag(u)))


def transpose_map(d: int) -> Channel:
    """The transpose map (Hermitian-preserving, unital, TP, not CP)."""
    return Channel(d, superop=transpose_superop(d))


def holevo_werner(d: int = 3) -> Channel:
    """The map ``X -> (tr(X) I - X^T) / (d - 1)``."""
    if d < 2:
        raise ValueError("needs dimension at least 2")
    v = vec(np.eye(d)).reshape(-1, 1)
    s = ((v @ dag(v)) - transpose_superop(d)) / (d - 1)
    return Channel(d, superop=s)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def matrix_to_lists(m: np.ndarray) -> list:
    """Row-major nested lists with ``[re, im]`` entry pairs."""
    m = np.asarray(m, dtype=complex)
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def matrix_from_lists(rows) -> np.ndarray:
    try:
        arr = np.asarray(
            [[complex(entry[0], entry[1]) for entry in row] for row in rows])
    except (TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"malformed matrix entries: {exc}") from None
    if arr.ndim != 2:
        raise ParseError("matrix rows have inconsistent lengths")
    return arr


def channel_to_dict(ch: Channel, rep: Optional[str] = None) -> dict:
    """JSON-ready dict ``{"dim", "repr", "matrices"}`` of a map."""
    rep = rep or ch.rep
    if rep not in _REP_NAMES:
        raise ValueError(f"unknown representation {rep!r}")
    if rep == "kraus":
        mats = ch.kraus
    elif rep == "choi":
        mats = [ch.choi]
    else:
        mats = [ch.superop]
    return {"dim": ch.dim, "repr": rep, "matrices": [matrix_to_lists(m) for m in mats]}


def channel_from_dict(data: dict) -> Channel:
    if not isinstance(data, dict):
        raise ParseError("channel document must be a JSON object")
    try:
        dim = int(data["dim"])
        rep = data["repr"]
        mats = [matrix_from_lists(m) for m in data["matrices"]]
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"malformed channel document: {exc}") from None
    if rep not in _REP_NAMES:
        raise ParseError(f"unknown representation {rep!r}")
    if not mats:
        raise ParseError("channel document has no matrices")
    try:
        if rep == "kraus":
            return Channel(dim, kraus=mats)
        if rep == "choi":
            if len(mats) != 1:
                raise InvalidChannelError("choi representation takes exactly one matrix")
            return Channel(dim, choi=mats[0])
        if len(mats) != 1:
            raise InvalidChannelError("superop representation takes exactly one matrix")
        return Channel(dim, superop=mats[0])
    except ValueError as exc:
        if isinstance(exc, (ParseError, InvalidChannelError)):
            raise
        raise InvalidChannelError(str(exc)) from None


def channel_to_json(ch: Channel, rep: Optional[str] = None) -> str:
    return json.dumps(channel_to_dict(ch, rep), indent=2, sort_keys=True) + "\n"


def channel_from_json(text: str) -> Channel:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    return channel_from_dict(data)

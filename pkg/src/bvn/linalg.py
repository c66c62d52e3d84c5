"""Dense complex linear algebra: states, channels and the subspace lattice.

A proposition about a quantum system is a closed subspace of its state
space; this module supplies that lattice (meet, join, orthocomplement,
Sasaki implication, inclusion) together with channel actions on states and
subspaces.  Everything downstream reduces to these kernels.

Subspaces are stored as orthonormal column bases (rank explicit, projector
derivable as B @ B.conj().T).  Orthonormalization is SVD-based for rank
robustness; the meet is computed through complements so that join is the
single span kernel everything relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .errors import (
    DimensionMismatchError,
    InvalidChannelError,
    InvalidStateError,
)

__all__ = [
    "StateDensity",
    "Subspace",
    "Channel",
    "support",
    "lattice_join",
    "lattice_meet",
    "ortho",
    "sasaki_implies",
    "includes",
    "subspace_equal",
    "channel_apply",
    "channel_image",
    "channel_wlp",
    "channel_adjoint",
    "channel_compose",
    "channel_equal",
    "choi_matrix",
    "restrict_state",
    "restrict_subspace",
    "orthonormal_columns",
    "trace_distance",
]


def _as_complex(a) -> np.ndarray:
    return np.asarray(a, dtype=np.complex128)


# Below this absolute scale a spectrum is indistinguishable from the noise
# that dense factorizations spray into structurally-zero entries; a purely
# relative rank cutoff would otherwise manufacture rank out of it (e.g. the
# guard-1 image of an exactly reset state).
_NOISE_FLOOR = 1e-13


def orthonormal_columns(vectors: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """SVD-based orthonormal basis of the column space of ``vectors``.

    Columns with singular value below tau_rank * sigma_max are dropped, so
    the result has a well-defined numerical rank; a spectrum entirely below
    the machine-noise floor counts as zero.
    """
    vectors = _as_complex(vectors)
    if vectors.ndim != 2 or vectors.shape[1] == 0:
        return np.zeros((vectors.shape[0], 0), dtype=np.complex128)
    u, s, _ = np.linalg.svd(vectors, full_matrices=False)
    if s.size == 0 or s[0] <= _NOISE_FLOOR:
        return np.zeros((vectors.shape[0], 0), dtype=np.complex128)
    keep = s > tol.tau_rank * s[0]
    return np.ascontiguousarray(u[:, keep])


@dataclass(frozen=True)
class StateDensity:
    """A partial density operator: positive, Hermitian, trace <= 1.

    Branch probabilities are folded into the trace (Selinger convention),
    so a trace below one encodes a sub-normalized computation branch.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = _as_complex(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidStateError(f"density matrix must be square, got shape {m.shape}")
        object.__setattr__(self, "matrix", m)

    @staticmethod
    def validated(matrix, tol: Tolerances = DEFAULT_TOL) -> "StateDensity":
        m = _as_complex(matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidStateError(f"density matrix must be square, got shape {m.shape}")
        scale = max(1.0, float(np.abs(m).max(initial=0.0)))
        if np.abs(m - m.conj().T).max(initial=0.0) > tol.tau_num * scale:
            raise InvalidStateError("density matrix is not Hermitian within tolerance")
        evals = np.linalg.eigvalsh((m + m.conj().T) / 2)
        if evals.size and evals.min() < -tol.tau_num * scale:
            raise InvalidStateError(f"density matrix has negative eigenvalue {evals.min():.3e}")
        tr = float(np.real(np.trace(m)))
        if tr > 1.0 + tol.tau_num:
            raise InvalidStateError(f"density matrix has trace {tr} > 1")
        return StateDensity(m)

    @staticmethod
    def pure(vector, normalize: bool = True) -> "StateDensity":
        v = _as_complex(vector).reshape(-1)
        if normalize:
            n = np.linalg.norm(v)
            if n == 0.0:
                raise InvalidStateError("cannot normalize the zero vector")
            v = v / n
        return StateDensity(np.outer(v, v.conj()))

    @staticmethod
    def maximally_mixed(dim: int) -> "StateDensity":
        return StateDensity(np.eye(dim, dtype=np.complex128) / dim)

    @staticmethod
    def zero(dim: int) -> "StateDensity":
        return StateDensity(np.zeros((dim, dim), dtype=np.complex128))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))


@dataclass(frozen=True)
class Subspace:
    """A closed subspace of C^dim, held as an orthonormal column basis.

    rank == 0 encodes the zero subspace; rank == dim the full space.
    """

    dim: int
    basis: np.ndarray

    def __post_init__(self):
        b = _as_complex(self.basis)
        if b.ndim != 2 or b.shape[0] != self.dim:
            raise DimensionMismatchError(
                f"basis shape {b.shape} does not match ambient dimension {self.dim}"
            )
        object.__setattr__(self, "basis", b)

    @staticmethod
    def from_span(vectors, dim: int | None = None, tol: Tolerances = DEFAULT_TOL) -> "Subspace":
        """Subspace spanned by the given vectors (rows of any matrix-like,
        or a dim x k array of columns)."""
        v = _as_complex(vectors)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        if dim is None:
            dim = v.shape[0]
        return Subspace(dim, orthonormal_columns(v, tol))

    @staticmethod
    def zero(dim: int) -> "Subspace":
        return Subspace(dim, np.zeros((dim, 0), dtype=np.complex128))

    @staticmethod
    def full(dim: int) -> "Subspace":
        return Subspace(dim, np.eye(dim, dtype=np.complex128))

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def is_zero(self) -> bool:
        return self.rank == 0

    def is_full(self) -> bool:
        return self.rank == self.dim


@dataclass(frozen=True)
class Channel:
    """A completely positive trace-nonincreasing map in Kraus form."""

    in_dim: int
    out_dim: int
    kraus: tuple
    kind: str = "general"  # unitary | projective | general

    def __post_init__(self):
        ops = tuple(_as_complex(k) for k in self.kraus)
        if not ops:
            raise InvalidChannelError("a channel needs at least one Kraus operator")
        for k in ops:
            if k.shape != (self.out_dim, self.in_dim):
                raise InvalidChannelError(
                    f"Kraus operator shape {k.shape} != ({self.out_dim}, {self.in_dim})"
                )
        object.__setattr__(self, "kraus", ops)

    @staticmethod
    def validated(
        kraus: Sequence,
        kind: str = "general",
        trace_preserving: bool = False,
        tol: Tolerances = DEFAULT_TOL,
    ) -> "Channel":
        ops = [_as_complex(k) for k in kraus]
        out_dim, in_dim = ops[0].shape
        ch = Channel(in_dim, out_dim, tuple(ops), kind)
        gram = sum(k.conj().T @ k for k in ch.kraus)
        dev = gram - np.eye(in_dim)
        evals = np.linalg.eigvalsh((dev + dev.conj().T) / 2)
        if evals.size and evals.max() > tol.tau_num:
            raise InvalidChannelError(
                f"Kraus operators increase trace (max eigenvalue excess {evals.max():.3e})"
            )
        if trace_preserving and np.abs(dev).max(initial=0.0) > tol.tau_num:
            raise InvalidChannelError("channel flagged trace-preserving is not")
        if kind == "unitary":
            if len(ch.kraus) != 1:
                raise InvalidChannelError("a unitary channel has exactly one Kraus operator")
            u = ch.kraus[0]
            if in_dim != out_dim or np.abs(u.conj().T @ u - np.eye(in_dim)).max() > tol.tau_num:
                raise InvalidChannelError("matrix bound to a unitary symbol is not unitary")
        return ch

    @staticmethod
    def unitary(u, tol: Tolerances = DEFAULT_TOL) -> "Channel":
        return Channel.validated([u], kind="unitary", trace_preserving=True, tol=tol)

    @staticmethod
    def identity(dim: int) -> "Channel":
        return Channel(dim, dim, (np.eye(dim, dtype=np.complex128),), "unitary")

    def is_trace_preserving(self, tol: Tolerances = DEFAULT_TOL) -> bool:
        gram = sum(k.conj().T @ k for k in self.kraus)
        return bool(np.abs(gram - np.eye(self.in_dim)).max(initial=0.0) <= tol.tau_num)


# ---------------------------------------------------------------------------
# lattice operations
# ---------------------------------------------------------------------------


def support(rho: StateDensity, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """Span of the eigenvectors of rho with eigenvalue above the rank cutoff."""
    m = rho.matrix
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    if np.abs(m - m.conj().T).max(initial=0.0) > tol.tau_num * scale:
        raise InvalidStateError("support of a non-Hermitian operator is undefined")
    evals, evecs = np.linalg.eigh((m + m.conj().T) / 2)
    lam_max = float(evals.max(initial=0.0))
    if lam_max <= _NOISE_FLOOR:
        return Subspace.zero(rho.dim)
    keep = evals > tol.tau_rank * lam_max
    return Subspace(rho.dim, np.ascontiguousarray(evecs[:, keep]))


def _check_same_dim(xs: Iterable[Subspace]) -> int:
    dims = {x.dim for x in xs}
    if len(dims) != 1:
        raise DimensionMismatchError(f"subspaces live in different ambient dimensions {sorted(dims)}")
    return dims.pop()


def lattice_join(xs: Sequence[Subspace], tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """Closed span of the union; the empty join is the zero subspace."""
    xs = list(xs)
    if not xs:
        raise DimensionMismatchError("empty join has no ambient dimension; use Subspace.zero")
    dim = _check_same_dim(xs)
    stacked = np.hstack([x.basis for x in xs]) if any(x.rank for x in xs) else None
    if stacked is None:
        return Subspace.zero(dim)
    return Subspace(dim, orthonormal_columns(stacked, tol))


def ortho(x: Subspace, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """Orthocomplement: all vectors orthogonal to x."""
    if x.rank == 0:
        return Subspace.full(x.dim)
    if x.rank == x.dim:
        return Subspace.zero(x.dim)
    # Null space of B^dagger via full SVD of the basis.
    u, _, _ = np.linalg.svd(x.basis, full_matrices=True)
    return Subspace(x.dim, np.ascontiguousarray(u[:, x.rank:]))


def lattice_meet(xs: Sequence[Subspace], tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """Intersection, computed as the complement of the join of complements;
    the empty meet is the full space."""
    xs = list(xs)
    if not xs:
        raise DimensionMismatchError("empty meet has no ambient dimension; use Subspace.full")
    dim = _check_same_dim(xs)
    if any(x.rank == 0 for x in xs):
        return Subspace.zero(dim)
    return ortho(lattice_join([ortho(x, tol) for x in xs], tol), tol)


def sasaki_implies(x: Subspace, y: Subspace, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """Sasaki implication x -> y = x_perp v (x ^ y), the one orthomodular
    implication satisfying import-export."""
    _check_same_dim([x, y])
    return lattice_join([ortho(x, tol), lattice_meet([x, y], tol)], tol)


def includes(x: Subspace, y: Subspace, tol: Tolerances = DEFAULT_TOL) -> bool:
    """True iff y is contained in x, measured by projection residual."""
    _check_same_dim([x, y])
    if y.rank == 0:
        return True
    if x.rank == 0:
        return False
    resid = y.basis - x.basis @ (x.basis.conj().T @ y.basis)
    return bool(np.linalg.norm(resid, axis=0).max(initial=0.0) <= tol.tau_sub)


def subspace_equal(x: Subspace, y: Subspace, tol: Tolerances = DEFAULT_TOL) -> bool:
    return includes(x, y, tol) and includes(y, x, tol)


# ---------------------------------------------------------------------------
# channel actions
# ---------------------------------------------------------------------------


def channel_apply(e: Channel, rho: StateDensity) -> StateDensity:
    """Schroedinger action: sum_k K rho K^dagger."""
    if rho.dim != e.in_dim:
        raise DimensionMismatchError(f"state dim {rho.dim} != channel input dim {e.in_dim}")
    out = np.zeros((e.out_dim, e.out_dim), dtype=np.complex128)
    for k in e.kraus:
        out += k @ rho.matrix @ k.conj().T
    return StateDensity(out)


def channel_image(e: Channel, x: Subspace, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """Forward image of a subspace: the support of e applied to the
    projector onto x, i.e. the span of all K_k b over basis columns b."""
    if x.dim != e.in_dim:
        raise DimensionMismatchError(f"subspace dim {x.dim} != channel input dim {e.in_dim}")
    if x.rank == 0:
        return Subspace.zero(e.out_dim)
    cols = np.hstack([k @ x.basis for k in e.kraus])
    return Subspace(e.out_dim, orthonormal_columns(cols, tol))


def channel_adjoint(e: Channel) -> Channel:
    """Heisenberg dual: Kraus operators are the adjoints."""
    return Channel(e.out_dim, e.in_dim, tuple(k.conj().T for k in e.kraus),
                   "unitary" if e.kind == "unitary" else "general")


def channel_wlp(e: Channel, x: Subspace, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """Largest subspace of inputs that the channel sends into x:
    the complement of the adjoint image of the complement of x.

    rho in channel_wlp(e, x)  iff  channel_apply(e, rho) in x.
    """
    if x.dim != e.out_dim:
        raise DimensionMismatchError(f"subspace dim {x.dim} != channel output dim {e.out_dim}")
    return ortho(channel_image(channel_adjoint(e), ortho(x, tol), tol), tol)


def channel_compose(second: Channel, first: Channel) -> Channel:
    """second after first (pairwise Kraus products)."""
    if first.out_dim != second.in_dim:
        raise DimensionMismatchError("channel composition dimension mismatch")
    kraus = tuple(k2 @ k1 for k2 in second.kraus for k1 in first.kraus)
    kind = "unitary" if (first.kind == "unitary" and second.kind == "unitary") else "general"
    return Channel(first.in_dim, second.out_dim, kraus, kind)


def choi_matrix(e: Channel) -> np.ndarray:
    """Choi matrix sum_ij |i><j| (x) e(|i><j|), as a rank-sum over
    vectorized Kraus operators."""
    d_in, d_out = e.in_dim, e.out_dim
    j = np.zeros((d_in * d_out, d_in * d_out), dtype=np.complex128)
    for k in e.kraus:
        v = k.T.reshape(-1)  # v[(i, a)] = K[a, i] with i the input index
        j += np.outer(v, v.conj())
    return j


def channel_equal(e1: Channel, e2: Channel, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Equality as superoperators, decided on Choi matrices."""
    if e1.in_dim != e2.in_dim or e1.out_dim != e2.out_dim:
        raise DimensionMismatchError("cannot compare channels of different signature")
    return bool(np.abs(choi_matrix(e1) - choi_matrix(e2)).max(initial=0.0) <= tol.tau_num)


# ---------------------------------------------------------------------------
# restriction (partial trace)
# ---------------------------------------------------------------------------


def _partial_trace(matrix: np.ndarray, keep: Sequence[int], layout: Sequence[int]) -> np.ndarray:
    dims = list(layout)
    total = int(np.prod(dims)) if dims else 1
    if matrix.shape != (total, total):
        raise DimensionMismatchError(
            f"layout {dims} (total {total}) does not factor a {matrix.shape} matrix"
        )
    keep = sorted(set(keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionMismatchError(f"keep indices {keep} out of range for layout {dims}")
    n = len(dims)
    t = matrix.reshape(dims + dims)
    discard = [i for i in range(n) if i not in keep]
    # Trace out discarded legs from the back so earlier positions stay valid.
    for i in sorted(discard, reverse=True):
        t = np.trace(t, axis1=i, axis2=i + (t.ndim // 2))
    kd = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(kd, kd)


def restrict_state(
    rho: StateDensity, keep: Sequence[int], layout: Sequence[int]
) -> StateDensity:
    """Partial trace over the factors not listed in ``keep``."""
    return StateDensity(_partial_trace(rho.matrix, keep, layout))


def restrict_subspace(
    x: Subspace, keep: Sequence[int], layout: Sequence[int], tol: Tolerances = DEFAULT_TOL
) -> Subspace:
    """Support of the partial trace of the projector onto x."""
    if x.rank == 0:
        kd = int(np.prod([layout[k] for k in sorted(set(keep))])) if keep else 1
        return Subspace.zero(kd)
    reduced = _partial_trace(x.projector(), keep, layout)
    return support(StateDensity(reduced), tol)


def trace_distance(a: StateDensity, b: StateDensity) -> float:
    """D(a, b) = (1/2) tr |a - b|."""
    if a.dim != b.dim:
        raise DimensionMismatchError("trace distance needs equal dimensions")
    diff = a.matrix - b.matrix
    evals = np.linalg.eigvalsh((diff + diff.conj().T) / 2)
    return float(0.5 * np.abs(evals).sum())

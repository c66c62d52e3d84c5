"""Interpretations: variable declarations, symbol bindings, generator sets.

An interpretation fixes the quantum variables (with dimensions and a tensor
layout given by declaration order), binds operation / measurement /
predicate symbols to concrete matrices, and lists per-signature generator
sets over which quantifiers on quantum variables range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .errors import DimensionMismatchError, InterpretationError
from .linalg import Channel, Subspace, orthonormal_columns

__all__ = [
    "OperationBinding",
    "MeasurementBinding",
    "PredicateBinding",
    "Interpretation",
    "build",
    "global_space",
    "embed",
    "embed_subspace",
    "embedding_permutation",
]

IDENTITY_SYMBOL = "I"
INIT_SYMBOL = "0"
INVERSE_SUFFIX = "^-1"


@dataclass(frozen=True)
class OperationBinding:
    symbol: str
    signature: tuple  # tuple of per-variable dimensions
    channel: Channel
    unitary: bool = False
    inverse: str | None = None  # symbol of the recorded inverse, if unitary


@dataclass(frozen=True)
class MeasurementBinding:
    symbol: str
    signature: tuple
    outcomes: tuple  # outcome labels, in declaration order
    projectors: tuple  # matching projector matrices


@dataclass(frozen=True)
class PredicateBinding:
    symbol: str
    signature: tuple
    subspace: Subspace


@dataclass(frozen=True)
class Interpretation:
    variables: dict  # name -> dimension, declaration order == tensor order
    operations: dict  # symbol -> OperationBinding
    measurements: dict  # symbol -> MeasurementBinding
    predicates: dict  # symbol -> PredicateBinding
    allowed: dict  # signature tuple -> tuple of operation symbols
    tol: Tolerances = DEFAULT_TOL

    @property
    def layout(self) -> list:
        return list(self.variables.values())

    @property
    def total_dim(self) -> int:
        return int(math.prod(self.variables.values())) if self.variables else 1

    def var_index(self, name: str) -> int:
        try:
            return list(self.variables).index(name)
        except ValueError:
            raise InterpretationError(f"unknown quantum variable {name!r}") from None

    def var_dim(self, name: str) -> int:
        if name not in self.variables:
            raise InterpretationError(f"unknown quantum variable {name!r}")
        return self.variables[name]

    def signature_of(self, names) -> tuple:
        return tuple(self.var_dim(n) for n in names)

    def with_predicates(self, extra: dict) -> "Interpretation":
        """A copy with additional predicate bindings (used to name ad-hoc
        subspaces, e.g. basis-vector propositions)."""
        preds = dict(self.predicates)
        for sym, binding in extra.items():
            if sym in preds or sym in self.operations or sym in self.measurements:
                raise InterpretationError(f"symbol {sym!r} already bound")
            preds[sym] = binding
        return replace(self, predicates=preds)


def global_space(i: Interpretation) -> tuple:
    """(layout, index map): ordered factor dimensions and variable -> slot."""
    return list(i.variables.values()), {name: k for k, name in enumerate(i.variables)}


def _is_projector(m: np.ndarray, tol: Tolerances) -> bool:
    return (
        np.abs(m - m.conj().T).max(initial=0.0) <= tol.tau_num
        and np.abs(m @ m - m).max(initial=0.0) <= tol.tau_num
    )


def build(
    variables,
    operations=(),
    measurements=(),
    predicates=(),
    allowed=(),
    tol: Tolerances = DEFAULT_TOL,
) -> Interpretation:
    """Validate declarations and freeze them into an interpretation.

    ``variables``    iterable of (name, dim)
    ``operations``   iterable of (symbol, signature, kraus list, unitary?)
    ``measurements`` iterable of (symbol, signature, [(outcome, projector)])
    ``predicates``   iterable of (symbol, signature, vectors | Subspace)
    ``allowed``      iterable of (signature, [symbols])
    """
    var_map: dict = {}
    for name, dim in variables:
        if name in var_map:
            raise InterpretationError(f"variable {name!r} declared twice")
        if not (isinstance(dim, int) and dim >= 1):
            raise InterpretationError(f"variable {name!r} has invalid dimension {dim!r}")
        var_map[name] = dim
    total = int(math.prod(var_map.values())) if var_map else 1
    if total > tol.dim_cap:
        raise InterpretationError(
            f"total ambient dimension {total} exceeds the configured cap {tol.dim_cap}"
        )

    ops: dict = {}

    def _register_op(symbol, signature, channel, unitary, inverse=None):
        if symbol in ops:
            raise InterpretationError(f"operation symbol {symbol!r} bound twice")
        space = int(math.prod(signature))
        if channel.in_dim != space or channel.out_dim != space:
            raise InterpretationError(
                f"operation {symbol!r}: matrices act on dim {channel.in_dim}, "
                f"signature {signature} needs {space}"
            )
        ops[symbol] = OperationBinding(symbol, tuple(signature), channel, unitary, inverse)

    for entry in operations:
        symbol, signature, kraus, unitary = entry
        if symbol in (IDENTITY_SYMBOL, INIT_SYMBOL):
            raise InterpretationError(f"{symbol!r} is a reserved operation symbol")
        kind = "unitary" if unitary else "general"
        try:
            ch = Channel.validated(kraus, kind=kind, tol=tol)
        except Exception as exc:
            raise InterpretationError(f"operation {symbol!r}: {exc}") from exc
        if unitary:
            u = ch.kraus[0]
            inv_symbol = symbol + INVERSE_SUFFIX
            _register_op(symbol, tuple(signature), ch, True, inv_symbol)
            _register_op(
                inv_symbol,
                tuple(signature),
                Channel.unitary(u.conj().T, tol=tol),
                True,
                symbol,
            )
        else:
            _register_op(symbol, tuple(signature), ch, False)

    meas: dict = {}
    for symbol, signature, outcome_pairs in measurements:
        if symbol in meas or symbol in ops:
            raise InterpretationError(f"measurement symbol {symbol!r} bound twice")
        space = int(math.prod(signature))
        labels, projs = [], []
        acc = np.zeros((space, space), dtype=np.complex128)
        for label, proj in outcome_pairs:
            m = np.asarray(proj, dtype=np.complex128)
            if m.shape != (space, space):
                raise InterpretationError(
                    f"measurement {symbol!r} outcome {label}: shape {m.shape} != {(space, space)}"
                )
            if not _is_projector(m, tol):
                raise InterpretationError(
                    f"measurement {symbol!r} outcome {label} is not a projection"
                )
            for other_label, other in zip(labels, projs):
                if np.abs(m @ other).max(initial=0.0) > tol.tau_num:
                    raise InterpretationError(
                        f"measurement {symbol!r}: outcomes {label} and {other_label} "
                        "are not orthogonal"
                    )
            labels.append(label)
            projs.append(m)
            acc += m
        if np.abs(acc - np.eye(space)).max(initial=0.0) > tol.tau_num:
            raise InterpretationError(f"measurement {symbol!r} projectors do not sum to identity")
        if len(set(labels)) != len(labels):
            raise InterpretationError(f"measurement {symbol!r} has duplicate outcome labels")
        meas[symbol] = MeasurementBinding(symbol, tuple(signature), tuple(labels), tuple(projs))

    preds: dict = {}
    for symbol, signature, value in predicates:
        if symbol in preds or symbol in ops or symbol in meas:
            raise InterpretationError(f"predicate symbol {symbol!r} bound twice")
        space = int(math.prod(signature))
        if isinstance(value, Subspace):
            sub = value
        else:
            vectors = np.asarray(value, dtype=np.complex128)
            if vectors.size == 0:
                sub = Subspace.zero(space)
            else:
                if vectors.ndim == 1:
                    vectors = vectors.reshape(1, -1)
                if vectors.shape[1] != space:
                    raise InterpretationError(
                        f"predicate {symbol!r}: spanning vectors have length "
                        f"{vectors.shape[1]}, signature needs {space}"
                    )
                cols = vectors.T
                gram = cols.conj().T @ cols
                if np.abs(gram - np.eye(cols.shape[1])).max(initial=0.0) <= tol.tau_num:
                    sub = Subspace(space, cols)  # keep exact columns for round-trips
                else:
                    sub = Subspace(space, orthonormal_columns(cols, tol))
        if sub.dim != space:
            raise InterpretationError(
                f"predicate {symbol!r}: subspace lives in dim {sub.dim}, signature needs {space}"
            )
        preds[symbol] = PredicateBinding(symbol, tuple(signature), sub)

    allow: dict = {}
    for signature, symbols in allowed:
        sig = tuple(signature)
        seen = list(allow.get(sig, ()))
        for s in symbols:
            if s == IDENTITY_SYMBOL:
                seen.append(s)
                continue
            if s not in ops:
                raise InterpretationError(f"allowed set for {sig} names unknown operation {s!r}")
            if ops[s].signature != sig:
                raise InterpretationError(
                    f"allowed set for {sig} names {s!r} of signature {ops[s].signature}"
                )
            seen.append(s)
        allow[sig] = tuple(dict.fromkeys(seen))

    return Interpretation(var_map, ops, meas, preds, allow, tol)


# ---------------------------------------------------------------------------
# embedding into the global space
# ---------------------------------------------------------------------------


def _permutation_into(layout, positions) -> np.ndarray:
    """sigma with sigma[g] = index of basis vector g of the given layout in
    the (positions..., rest...) tensor ordering."""
    if not layout:
        return np.array([0], dtype=np.int64)
    rest = [k for k in range(len(layout)) if k not in positions]
    order = list(positions) + rest
    g = np.arange(int(np.prod(layout)))
    multi = np.array(np.unravel_index(g, layout))
    return np.ravel_multi_index(multi[order], [layout[k] for k in order])


def embedding_permutation(i: Interpretation, names) -> np.ndarray:
    """sigma with sigma[g] = index of global basis vector g in the
    (names..., rest...) tensor ordering."""
    layout, index = global_space(i)
    positions = [index[n] for n in names]
    if len(set(positions)) != len(positions):
        raise InterpretationError(f"variable list {list(names)} repeats a variable")
    return _permutation_into(layout, positions)


def embed_matrix_on(i: Interpretation, mat: np.ndarray, names, target) -> np.ndarray:
    """mat acting on ``names``, identity on the remaining variables of the
    ordered list ``target`` (which must contain all of ``names``)."""
    target = list(target)
    names = list(names)
    missing = [n for n in names if n not in target]
    if missing:
        raise InterpretationError(f"target space lacks variables {missing}")
    layout = [i.var_dim(n) for n in target]
    positions = [target.index(n) for n in names]
    if len(set(positions)) != len(positions):
        raise InterpretationError(f"variable list {names} repeats a variable")
    sub_dim = int(math.prod(i.var_dim(n) for n in names)) if names else 1
    mat = np.asarray(mat, dtype=np.complex128)
    if mat.shape != (sub_dim, sub_dim):
        raise DimensionMismatchError(
            f"matrix shape {mat.shape} does not match variables {names} (dim {sub_dim})"
        )
    total = int(math.prod(layout)) if layout else 1
    wide = np.kron(mat, np.eye(total // sub_dim, dtype=np.complex128))
    sigma = _permutation_into(layout, positions)
    return wide[np.ix_(sigma, sigma)]


def embed_matrix(i: Interpretation, mat: np.ndarray, names) -> np.ndarray:
    """mat acting on the listed variables, identity on the rest, expressed
    in the global tensor order."""
    return embed_matrix_on(i, mat, names, list(i.variables))


def embed(i: Interpretation, e: Channel, names) -> Channel:
    """Channel on the full global space: e on ``names``, identity elsewhere."""
    names = list(names)
    sig = i.signature_of(names)
    space = int(math.prod(sig))
    if e.in_dim != space or e.out_dim != space:
        raise DimensionMismatchError(
            f"channel acts on dim {e.in_dim}, variables {names} span dim {space}"
        )
    total = i.total_dim
    kraus = tuple(embed_matrix(i, k, names) for k in e.kraus)
    return Channel(total, total, kraus, e.kind)


def allowed_generators(i: Interpretation, qs, target=None):
    """Embedded generator channels for quantification over ``qs``.

    Enumerates every allowed operation symbol applied to every ordered tuple
    of distinct variables drawn from ``qs`` whose dimensions match the
    symbol's signature, embedded into ``target`` (default: the global
    space).  Raises ConfigurationError when no generator set at all is
    declared for these variables; an explicitly empty set is fine and
    leaves only the identity word.
    """
    from itertools import permutations

    from .errors import ConfigurationError

    qs = list(qs)
    target = list(i.variables) if target is None else list(target)
    total = int(math.prod(i.var_dim(n) for n in target)) if target else 1
    found_signature = False
    gens = []
    seen = set()
    for r in range(1, len(qs) + 1):
        for tup in permutations(qs, r):
            sig = i.signature_of(tup)
            if sig not in i.allowed:
                continue
            found_signature = True
            for sym in i.allowed[sig]:
                key = (sym, tup)
                if key in seen:
                    continue
                seen.add(key)
                if sym == IDENTITY_SYMBOL:
                    continue  # fixes every subspace, contributes nothing
                ch = i.operations[sym].channel
                kraus = tuple(embed_matrix_on(i, k, tup, target) for k in ch.kraus)
                gens.append((f"{sym}({','.join(tup)})", Channel(total, total, kraus, ch.kind)))
    if not found_signature:
        raise ConfigurationError(
            f"no allowed generator set declared for any signature over variables {qs}"
        )
    return gens


def embed_subspace(i: Interpretation, x: Subspace, names) -> Subspace:
    """x on the listed variables, tensored with the full space elsewhere."""
    names = list(names)
    sub_dim = int(math.prod(i.var_dim(n) for n in names)) if names else 1
    if x.dim != sub_dim:
        raise DimensionMismatchError(
            f"subspace dim {x.dim} does not match variables {names} (dim {sub_dim})"
        )
    total = i.total_dim
    rest_dim = total // sub_dim
    if x.rank == 0:
        return Subspace.zero(total)
    wide = np.kron(x.basis, np.eye(rest_dim, dtype=np.complex128))
    sigma = embedding_permutation(i, names)
    return Subspace(total, wide[sigma, :])

"""Quantum terms: ASTs, state-side and subspace-side semantics, inversion.

A term denotes a channel built from interpreted operation symbols by
sequencing, tensoring over disjoint variables, and sub-probabilistic
mixing.  Three transformers are exposed:

  term_apply  forward action on partial density operators
  term_image  backward (adjoint) action on subspaces, the observable-side
              reading where mixing becomes a join
  term_wlp    the weakest-precondition transformer: the largest subspace
              sent into a target subspace by term_apply

term_image and term_wlp coincide on unitary terms but differ in general;
satisfaction semantics downstream is defined through term_wlp.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import Tolerances
from .errors import DimensionMismatchError, WellFormednessError
from .interp import (
    IDENTITY_SYMBOL,
    INIT_SYMBOL,
    Interpretation,
    allowed_generators,
    embed,
    embed_matrix_on,
)
from .linalg import (
    Channel,
    StateDensity,
    Subspace,
    channel_apply,
    channel_adjoint,
    channel_equal,
    channel_image,
    channel_wlp,
    lattice_join,
    lattice_meet,
    trace_distance,
)

__all__ = [
    "Term",
    "BasicTerm",
    "SeqTerm",
    "TensorTerm",
    "ProbSumTerm",
    "identity_term",
    "term_vars",
    "term_wf",
    "is_unitary_term",
    "term_invert",
    "term_apply",
    "term_image",
    "term_forward_image",
    "term_wlp",
    "term_channel",
    "term_equiv",
    "expressivity_probe",
]


class Term:
    """Base class for quantum-term AST nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class BasicTerm(Term):
    """An operation symbol applied to a variable tuple.

    ``symbol`` is a declared operation symbol, the built-in identity "I",
    the reset symbol "0", or a measurement symbol (then ``outcome`` is the
    observed outcome label).  ``inverse`` marks the U^-1 form of a unitary
    symbol.
    """

    symbol: str
    variables: tuple
    outcome: int | None = None
    inverse: bool = False


@dataclass(frozen=True)
class SeqTerm(Term):
    first: Term
    second: Term


@dataclass(frozen=True)
class TensorTerm(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class ProbSumTerm(Term):
    branches: tuple  # of (weight, Term)


def identity_term(names) -> Term:
    """I(q1)...I(qn) folded into one Seq chain (a bare I(q) for one name)."""
    names = list(names)
    if not names:
        raise WellFormednessError("identity term needs at least one variable")
    t: Term = BasicTerm(IDENTITY_SYMBOL, (names[0],))
    for n in names[1:]:
        t = SeqTerm(t, BasicTerm(IDENTITY_SYMBOL, (n,)))
    return t


def term_vars(t: Term) -> frozenset:
    """Syntactic variable set (no well-formedness implied)."""
    if isinstance(t, BasicTerm):
        return frozenset(t.variables)
    if isinstance(t, (SeqTerm, TensorTerm)):
        a, b = (t.first, t.second) if isinstance(t, SeqTerm) else (t.left, t.right)
        return term_vars(a) | term_vars(b)
    if isinstance(t, ProbSumTerm):
        out: frozenset = frozenset()
        for _, child in t.branches:
            out |= term_vars(child)
        return out
    raise WellFormednessError(f"not a term node: {t!r}")


def _basic_signature(i: Interpretation, t: BasicTerm) -> tuple:
    vs = list(t.variables)
    if len(set(vs)) != len(vs):
        raise WellFormednessError(f"{t.symbol}: repeated variable in {vs}")
    return i.signature_of(vs)


def term_wf(i: Interpretation, t: Term, tol: Tolerances | None = None) -> frozenset:
    """Check formation rules against the interpretation; return var(t)."""
    tol = tol or i.tol
    if isinstance(t, BasicTerm):
        sig = _basic_signature(i, t)
        if t.symbol == IDENTITY_SYMBOL:
            if t.outcome is not None:
                raise WellFormednessError("identity takes no outcome")
            return frozenset(t.variables)
        if t.symbol == INIT_SYMBOL:
            if len(t.variables) != 1 or t.outcome is not None or t.inverse:
                raise WellFormednessError("reset terms have the form 0(q)")
            return frozenset(t.variables)
        if t.outcome is not None:
            m = i.measurements.get(t.symbol)
            if m is None:
                raise WellFormednessError(f"unknown measurement symbol {t.symbol!r}")
            if m.signature != sig:
                raise WellFormednessError(
                    f"measurement {t.symbol!r} has signature {m.signature}, got {sig}"
                )
            if t.outcome not in m.outcomes:
                raise WellFormednessError(
                    f"measurement {t.symbol!r} has no outcome {t.outcome!r}"
                )
            if t.inverse:
                raise WellFormednessError("measurement-outcome terms have no inverse")
            return frozenset(t.variables)
        op = i.operations.get(t.symbol)
        if op is None:
            raise WellFormednessError(f"unknown operation symbol {t.symbol!r}")
        if op.signature != sig:
            raise WellFormednessError(
                f"operation {t.symbol!r} has signature {op.signature}, got {sig}"
            )
        if t.inverse and not op.unitary:
            raise WellFormednessError(f"{t.symbol!r} is not unitary, no inverse exists")
        return frozenset(t.variables)
    if isinstance(t, SeqTerm):
        return term_wf(i, t.first, tol) | term_wf(i, t.second, tol)
    if isinstance(t, TensorTerm):
        lv = term_wf(i, t.left, tol)
        rv = term_wf(i, t.right, tol)
        if lv & rv:
            raise WellFormednessError(
                f"tensor components share variables {sorted(lv & rv)}"
            )
        return lv | rv
    if isinstance(t, ProbSumTerm):
        if not t.branches:
            raise WellFormednessError("probabilistic combination needs branches")
        total = 0.0
        var_sets = []
        for w, child in t.branches:
            if not w > 0:
                raise WellFormednessError(f"branch weight {w} is not positive")
            total += float(w)
            var_sets.append(term_wf(i, child, tol))
        if total > 1.0 + tol.tau_num:
            raise WellFormednessError(f"branch weights sum to {total} > 1")
        if any(vs != var_sets[0] for vs in var_sets[1:]):
            raise WellFormednessError("probabilistic branches must share one variable set")
        return var_sets[0]
    raise WellFormednessError(f"not a term node: {t!r}")


def is_unitary_term(i: Interpretation, t: Term) -> bool:
    """Built by sequencing/tensoring alone, from unitary symbols only."""
    if isinstance(t, BasicTerm):
        if t.symbol == IDENTITY_SYMBOL:
            return True
        op = i.operations.get(t.symbol)
        return op is not None and op.unitary
    if isinstance(t, SeqTerm):
        return is_unitary_term(i, t.first) and is_unitary_term(i, t.second)
    if isinstance(t, TensorTerm):
        return is_unitary_term(i, t.left) and is_unitary_term(i, t.right)
    return False


def term_invert(t: Term, i: Interpretation | None = None) -> Term:
    """Structural inverse of a unitary term (Seq order reversed)."""
    if i is not None and not is_unitary_term(i, t):
        raise WellFormednessError("only unitary terms have inverses")
    if isinstance(t, BasicTerm):
        if t.outcome is not None or t.symbol == INIT_SYMBOL:
            raise WellFormednessError("only unitary terms have inverses")
        if t.symbol == IDENTITY_SYMBOL:
            return t
        return BasicTerm(t.symbol, t.variables, None, not t.inverse)
    if isinstance(t, SeqTerm):
        return SeqTerm(term_invert(t.second, i), term_invert(t.first, i))
    if isinstance(t, TensorTerm):
        return TensorTerm(term_invert(t.left, i), term_invert(t.right, i))
    raise WellFormednessError("only unitary terms have inverses")


def basic_channel(i: Interpretation, t: BasicTerm) -> Channel:
    """The bound channel of a basic term on its own variable space."""
    sig = _basic_signature(i, t)
    space = int(math.prod(sig))
    if t.symbol == IDENTITY_SYMBOL:
        return Channel.identity(space)
    if t.symbol == INIT_SYMBOL:
        d = space
        kraus = tuple(
            np.outer(np.eye(d, dtype=np.complex128)[:, 0], np.eye(d, dtype=np.complex128)[:, k])
            for k in range(d)
        )
        return Channel(d, d, kraus, "general")
    if t.outcome is not None:
        m = i.measurements[t.symbol]
        proj = m.projectors[m.outcomes.index(t.outcome)]
        return Channel(space, space, (proj,), "projective")
    op = i.operations[t.symbol]
    if t.inverse:
        return i.operations[op.inverse].channel
    return op.channel


def _embedded(i: Interpretation, t: BasicTerm) -> Channel:
    return embed(i, basic_channel(i, t), list(t.variables))


def term_apply(i: Interpretation, t: Term, rho: StateDensity) -> StateDensity:
    """Forward semantics on the global space."""
    if rho.dim != i.total_dim:
        raise DimensionMismatchError(
            f"state dim {rho.dim} != global dimension {i.total_dim}"
        )
    term_wf(i, t)
    return _apply(i, t, rho)


def _apply(i, t, rho):
    if isinstance(t, BasicTerm):
        return channel_apply(_embedded(i, t), rho)
    if isinstance(t, SeqTerm):
        return _apply(i, t.second, _apply(i, t.first, rho))
    if isinstance(t, TensorTerm):
        return _apply(i, t.right, _apply(i, t.left, rho))
    if isinstance(t, ProbSumTerm):
        out = np.zeros_like(rho.matrix)
        for w, child in t.branches:
            out += w * _apply(i, child, rho).matrix
        return StateDensity(out)
    raise WellFormednessError(f"not a term node: {t!r}")


def term_image(i: Interpretation, t: Term, x: Subspace, tol: Tolerances | None = None) -> Subspace:
    """Adjoint-side (observable) semantics: Seq composes in reverse and
    probabilistic combination joins."""
    tol = tol or i.tol
    if x.dim != i.total_dim:
        raise DimensionMismatchError(f"subspace dim {x.dim} != global dimension {i.total_dim}")
    term_wf(i, t)
    return _image(i, t, x, tol)


def _image(i, t, x, tol):
    if isinstance(t, BasicTerm):
        return channel_image(channel_adjoint(_embedded(i, t)), x, tol)
    if isinstance(t, SeqTerm):
        return _image(i, t.first, _image(i, t.second, x, tol), tol)
    if isinstance(t, TensorTerm):
        return _image(i, t.left, _image(i, t.right, x, tol), tol)
    if isinstance(t, ProbSumTerm):
        return lattice_join([_image(i, child, x, tol) for _, child in t.branches], tol)
    raise WellFormednessError(f"not a term node: {t!r}")


def term_forward_image(
    i: Interpretation, t: Term, x: Subspace, tol: Tolerances | None = None
) -> Subspace:
    """Forward image: the support of term_apply on states supported in x."""
    tol = tol or i.tol
    if x.dim != i.total_dim:
        raise DimensionMismatchError(f"subspace dim {x.dim} != global dimension {i.total_dim}")
    term_wf(i, t)
    return _forward(i, t, x, tol)


def _forward(i, t, x, tol):
    if isinstance(t, BasicTerm):
        return channel_image(_embedded(i, t), x, tol)
    if isinstance(t, SeqTerm):
        return _forward(i, t.second, _forward(i, t.first, x, tol), tol)
    if isinstance(t, TensorTerm):
        return _forward(i, t.right, _forward(i, t.left, x, tol), tol)
    if isinstance(t, ProbSumTerm):
        return lattice_join([_forward(i, child, x, tol) for _, child in t.branches], tol)
    raise WellFormednessError(f"not a term node: {t!r}")


def term_wlp(i: Interpretation, t: Term, x: Subspace, tol: Tolerances | None = None) -> Subspace:
    """The subspace of states that term_apply sends into x."""
    tol = tol or i.tol
    if x.dim != i.total_dim:
        raise DimensionMismatchError(f"subspace dim {x.dim} != global dimension {i.total_dim}")
    term_wf(i, t)
    return _wlp(i, t, x, tol)


def _wlp(i, t, x, tol):
    if isinstance(t, BasicTerm):
        return channel_wlp(_embedded(i, t), x, tol)
    if isinstance(t, SeqTerm):
        return _wlp(i, t.first, _wlp(i, t.second, x, tol), tol)
    if isinstance(t, TensorTerm):
        return _wlp(i, t.left, _wlp(i, t.right, x, tol), tol)
    if isinstance(t, ProbSumTerm):
        return lattice_meet([_wlp(i, child, x, tol) for _, child in t.branches], tol)
    raise WellFormednessError(f"not a term node: {t!r}")


def term_channel(i: Interpretation, t: Term, on_vars=None) -> Channel:
    """Compile the term to a Kraus channel on the ordered variable list
    ``on_vars`` (default: all variables in declaration order)."""
    target = list(i.variables) if on_vars is None else list(on_vars)
    missing = sorted(term_vars(t) - set(target))
    if missing:
        raise DimensionMismatchError(f"term uses variables {missing} outside target space")
    term_wf(i, t)
    total = int(math.prod(i.var_dim(n) for n in target)) if target else 1
    return _compile(i, t, target, total)


def _compile(i, t, target, total):
    if isinstance(t, BasicTerm):
        ch = basic_channel(i, t)
        kraus = tuple(embed_matrix_on(i, k, list(t.variables), target) for k in ch.kraus)
        return Channel(total, total, kraus, ch.kind)
    if isinstance(t, (SeqTerm, TensorTerm)):
        a, b = (t.first, t.second) if isinstance(t, SeqTerm) else (t.left, t.right)
        first = _compile(i, a, target, total)
        second = _compile(i, b, target, total)
        kraus = tuple(k2 @ k1 for k2 in second.kraus for k1 in first.kraus)
        kind = "unitary" if first.kind == second.kind == "unitary" else "general"
        return Channel(total, total, kraus, kind)
    if isinstance(t, ProbSumTerm):
        kraus = []
        for w, child in t.branches:
            sub = _compile(i, child, target, total)
            kraus.extend(np.sqrt(w) * k for k in sub.kraus)
        return Channel(total, total, tuple(kraus), "general")
    raise WellFormednessError(f"not a term node: {t!r}")


def term_equiv(i: Interpretation, t1: Term, t2: Term, tol: Tolerances | None = None) -> bool:
    """Equality of the induced channels, decided on the joint variable set
    with untouched tensor factors stripped."""
    tol = tol or i.tol
    joint = sorted(term_vars(t1) | term_vars(t2), key=i.var_index)
    if not joint:
        raise WellFormednessError("terms mention no variables")
    return channel_equal(term_channel(i, t1, joint), term_channel(i, t2, joint), tol)


def expressivity_probe(
    i: Interpretation,
    names,
    rho: StateDensity,
    target: StateDensity,
    max_word_len: int,
    tol: Tolerances | None = None,
) -> float:
    """Minimum trace distance to ``target`` reachable from ``rho`` by words
    of allowed generators on ``names``, up to the given length.

    Breadth-first over the generator monoid with approximate state
    deduplication; a diagnostic for term-expressiveness, not a decision
    procedure.
    """
    tol = tol or i.tol
    names = list(names)
    gens = allowed_generators(i, names, target=names)
    space = int(math.prod(i.var_dim(n) for n in names))
    if rho.dim != space or target.dim != space:
        raise DimensionMismatchError(f"states must live on dim {space}")

    def _key(m):
        return np.round(m, 8).tobytes()

    best = trace_distance(rho, target)
    frontier = [rho]
    seen = {_key(rho.matrix)}
    for _ in range(max_word_len):
        nxt = []
        for state in frontier:
            for _, ch in gens:
                out = channel_apply(ch, state)
                k = _key(out.matrix)
                if k in seen:
                    continue
                seen.add(k)
                nxt.append(out)
                best = min(best, trace_distance(out, target))
        if not nxt or best <= tol.tau_num:
            break
        frontier = nxt
    return best

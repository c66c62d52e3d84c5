"""Assertion formulas: subspace semantics, satisfaction, quantifiers.

Every formula denotes a closed subspace of the global space; a state
satisfies the formula exactly when its support lies inside that subspace.
Universal quantification over quantum variables ranges over the allowed
operations on them and is computed as a greatest fixpoint in the subspace
lattice (the chain is strictly rank-decreasing, so it stabilizes within
the ambient dimension).

The atom and term-adjoint clauses are evaluated through the weakest-
precondition transformer, which is what the satisfaction relation demands;
an image-based reading (equivalent for unitary terms) is available through
``eval_subspace_image_literal`` for diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Tolerances
from .errors import (
    DimensionMismatchError,
    InvalidStateError,
    WellFormednessError,
)
from .interp import Interpretation, allowed_generators, embed_subspace
from .linalg import (
    StateDensity,
    Subspace,
    includes,
    lattice_meet,
    orthonormal_columns,
    ortho,
    subspace_equal,
    support,
)
from .terms import Term, identity_term, term_image, term_vars, term_wf, term_wlp

__all__ = [
    "Formula",
    "Atom",
    "MeasAtom",
    "Not",
    "And",
    "Adjoint",
    "Forall",
    "or_formula",
    "exists_formula",
    "sasaki_formula",
    "big_or",
    "free_vars",
    "formula_wf",
    "eval_subspace",
    "eval_subspace_image_literal",
    "evaluation_divergence",
    "forall_closure",
    "satisfies",
    "sat_probability",
    "entails",
    "rename_bound",
    "basis_atoms",
]


class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class Atom(Formula):
    predicate: str
    term: Term


@dataclass(frozen=True)
class MeasAtom(Formula):
    """The proposition 'outcome m of measurement M on q-bar': the range of
    the corresponding projector.  Used by the conditional and loop proof
    rules."""

    measurement: str
    outcome: int
    variables: tuple


@dataclass(frozen=True)
class Not(Formula):
    sub: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Adjoint(Formula):
    """Term-adjoint formula: the sub-formula evaluated after running the
    term (the quantum stand-in for substitution)."""

    term: Term
    sub: Formula


@dataclass(frozen=True)
class Forall(Formula):
    variables: tuple
    sub: Formula


def or_formula(a: Formula, b: Formula) -> Formula:
    return Not(And(Not(a), Not(b)))


def exists_formula(names, b: Formula) -> Formula:
    return Not(Forall(tuple(names), Not(b)))


def sasaki_formula(a: Formula, b: Formula) -> Formula:
    """a -> b as the Sasaki implication not-a v (a ^ b)."""
    return or_formula(Not(a), And(a, b))


def big_or(formulas) -> Formula:
    formulas = list(formulas)
    if not formulas:
        raise WellFormednessError("empty disjunction")
    out = formulas[0]
    for f in formulas[1:]:
        out = or_formula(out, f)
    return out


def free_vars(b: Formula) -> frozenset:
    if isinstance(b, Atom):
        return term_vars(b.term)
    if isinstance(b, MeasAtom):
        return frozenset(b.variables)
    if isinstance(b, Not):
        return free_vars(b.sub)
    if isinstance(b, And):
        return free_vars(b.left) | free_vars(b.right)
    if isinstance(b, Adjoint):
        return term_vars(b.term) | free_vars(b.sub)
    if isinstance(b, Forall):
        return free_vars(b.sub) - set(b.variables)
    raise WellFormednessError(f"not a formula node: {b!r}")


def _atom_variables(i: Interpretation, b: Atom) -> list:
    """var(term) in global declaration order; must match the predicate's
    signature."""
    names = sorted(term_vars(b.term), key=i.var_index)
    pred = i.predicates.get(b.predicate)
    if pred is None:
        raise WellFormednessError(f"unknown predicate symbol {b.predicate!r}")
    if i.signature_of(names) != pred.signature:
        raise WellFormednessError(
            f"predicate {b.predicate!r} has signature {pred.signature}, term "
            f"variables {names} give {i.signature_of(names)}"
        )
    return names


def formula_wf(i: Interpretation, b: Formula) -> frozenset:
    """Signature-check the formula; return its free variables."""
    if isinstance(b, Atom):
        term_wf(i, b.term)
        _atom_variables(i, b)
        return term_vars(b.term)
    if isinstance(b, MeasAtom):
        m = i.measurements.get(b.measurement)
        if m is None:
            raise WellFormednessError(f"unknown measurement symbol {b.measurement!r}")
        if i.signature_of(b.variables) != m.signature:
            raise WellFormednessError(
                f"measurement {b.measurement!r} has signature {m.signature}, "
                f"variables {list(b.variables)} give {i.signature_of(b.variables)}"
            )
        if b.outcome not in m.outcomes:
            raise WellFormednessError(
                f"measurement {b.measurement!r} has no outcome {b.outcome!r}"
            )
        if len(set(b.variables)) != len(b.variables):
            raise WellFormednessError("measurement atom repeats a variable")
        return frozenset(b.variables)
    if isinstance(b, Not):
        return formula_wf(i, b.sub)
    if isinstance(b, And):
        return formula_wf(i, b.left) | formula_wf(i, b.right)
    if isinstance(b, Adjoint):
        term_wf(i, b.term)
        return term_vars(b.term) | formula_wf(i, b.sub)
    if isinstance(b, Forall):
        for q in b.variables:
            i.var_dim(q)
        if len(set(b.variables)) != len(b.variables):
            raise WellFormednessError("quantifier repeats a variable")
        return formula_wf(i, b.sub) - set(b.variables)
    raise WellFormednessError(f"not a formula node: {b!r}")


def forall_closure(
    i: Interpretation,
    names,
    x: Subspace,
    tol: Tolerances | None = None,
    trace: list | None = None,
    transformer=None,
) -> Subspace:
    """Greatest subspace Y <= x with Y <= wlp_g(Y) for every allowed
    generator g over the quantified variables.

    Iterates Y <- Y ^ meet_g wlp_g(Y) from Y0 = x.  Because the weakest
    precondition of a composition nests and of a probabilistic mix meets,
    this fixpoint equals the intersection of wlp over all generator words,
    i.e. over all terms on the quantified variables.  The chain loses rank
    at every non-final step, so it stabilizes within dim+1 iterations.
    """
    from .linalg import channel_wlp

    tol = tol or i.tol
    if x.dim != i.total_dim:
        raise DimensionMismatchError(f"subspace dim {x.dim} != global dimension {i.total_dim}")
    step = transformer or channel_wlp
    gens = allowed_generators(i, list(names))
    y = x
    if trace is not None:
        trace.append((0, y.rank))
    for iteration in range(1, x.dim + 2):
        parts = [y] + [step(ch, y, tol) for _, ch in gens]
        nxt = lattice_meet(parts, tol)
        if trace is not None:
            trace.append((iteration, nxt.rank))
        if nxt.rank == y.rank and subspace_equal(nxt, y, tol):
            return y
        y = nxt
    raise AssertionError(
        "quantifier fixpoint failed to stabilize within dim+1 iterations"
    )


def _measurement_subspace(i: Interpretation, b: MeasAtom, tol: Tolerances) -> Subspace:
    m = i.measurements[b.measurement]
    proj = m.projectors[m.outcomes.index(b.outcome)]
    local = Subspace(proj.shape[0], orthonormal_columns(proj, tol))
    return embed_subspace(i, local, list(b.variables))


def eval_subspace(i: Interpretation, b: Formula, tol: Tolerances | None = None) -> Subspace:
    """The subspace of the global space whose member states satisfy b."""
    tol = tol or i.tol
    formula_wf(i, b)
    return _eval(i, b, tol, term_wlp, None)


def eval_subspace_image_literal(
    i: Interpretation, b: Formula, tol: Tolerances | None = None
) -> Subspace:
    """Diagnostic evaluator reading atoms, term-adjoints and quantifiers
    through the adjoint image instead of the weakest precondition.  Agrees
    with eval_subspace whenever the terms involved are unitary."""
    from .linalg import channel_adjoint, channel_image

    tol = tol or i.tol
    formula_wf(i, b)

    def image_step(ch, y, t):
        return channel_image(channel_adjoint(ch), y, t)

    return _eval(i, b, tol, term_image, image_step)


def evaluation_divergence(i: Interpretation, b: Formula, tol: Tolerances | None = None):
    """(wlp-based subspace, image-based subspace, equal?) for diagnostics."""
    tol = tol or i.tol
    a = eval_subspace(i, b, tol)
    c = eval_subspace_image_literal(i, b, tol)
    return a, c, subspace_equal(a, c, tol)


def _eval(i, b, tol, term_transformer, closure_step):
    if isinstance(b, Atom):
        names = _atom_variables(i, b)
        target = embed_subspace(i, i.predicates[b.predicate].subspace, names)
        return term_transformer(i, b.term, target, tol)
    if isinstance(b, MeasAtom):
        return _measurement_subspace(i, b, tol)
    if isinstance(b, Not):
        return ortho(_eval(i, b.sub, tol, term_transformer, closure_step), tol)
    if isinstance(b, And):
        left = _eval(i, b.left, tol, term_transformer, closure_step)
        right = _eval(i, b.right, tol, term_transformer, closure_step)
        return lattice_meet([left, right], tol)
    if isinstance(b, Adjoint):
        inner = _eval(i, b.sub, tol, term_transformer, closure_step)
        return term_transformer(i, b.term, inner, tol)
    if isinstance(b, Forall):
        inner = _eval(i, b.sub, tol, term_transformer, closure_step)
        if not b.variables:
            return inner
        return forall_closure(i, b.variables, inner, tol, transformer=closure_step)
    raise WellFormednessError(f"not a formula node: {b!r}")


def satisfies(i: Interpretation, rho: StateDensity, b: Formula, tol: Tolerances | None = None) -> bool:
    """True iff the support of rho lies inside the subspace of b."""
    tol = tol or i.tol
    if rho.trace <= tol.tau_num:
        raise InvalidStateError("satisfaction is undefined for the zero state")
    return includes(eval_subspace(i, b, tol), support(rho, tol), tol)


def sat_probability(
    i: Interpretation, rho: StateDensity, b: Formula, tol: Tolerances | None = None
) -> float:
    """Born probability that rho satisfies b: tr(P rho) for the projector
    P onto the formula's subspace.  Requires a normalized state."""
    tol = tol or i.tol
    if abs(rho.trace - 1.0) > tol.tau_num:
        raise InvalidStateError(
            f"Born probability needs a normalized state, got trace {rho.trace}"
        )
    x = eval_subspace(i, b, tol)
    if x.rank == 0:
        return 0.0
    val = float(np.real(np.trace(x.basis.conj().T @ rho.matrix @ x.basis)))
    return min(max(val, 0.0), 1.0)


def entails(i: Interpretation, b: Formula, c: Formula, tol: Tolerances | None = None) -> bool:
    """Semantic consequence in this interpretation: [[b]] <= [[c]]."""
    tol = tol or i.tol
    return includes(eval_subspace(i, c, tol), eval_subspace(i, b, tol), tol)


def _occurs(b: Formula, name: str) -> bool:
    if isinstance(b, Atom):
        return name in term_vars(b.term)
    if isinstance(b, MeasAtom):
        return name in b.variables
    if isinstance(b, Not):
        return _occurs(b.sub, name)
    if isinstance(b, And):
        return _occurs(b.left, name) or _occurs(b.right, name)
    if isinstance(b, Adjoint):
        return name in term_vars(b.term) or _occurs(b.sub, name)
    if isinstance(b, Forall):
        return name in b.variables or _occurs(b.sub, name)
    raise WellFormednessError(f"not a formula node: {b!r}")


def _rename_term(t: Term, frm: str, to: str) -> Term:
    from .terms import BasicTerm, ProbSumTerm, SeqTerm, TensorTerm

    if isinstance(t, BasicTerm):
        vs = tuple(to if v == frm else v for v in t.variables)
        return BasicTerm(t.symbol, vs, t.outcome, t.inverse)
    if isinstance(t, SeqTerm):
        return SeqTerm(_rename_term(t.first, frm, to), _rename_term(t.second, frm, to))
    if isinstance(t, TensorTerm):
        return TensorTerm(_rename_term(t.left, frm, to), _rename_term(t.right, frm, to))
    if isinstance(t, ProbSumTerm):
        return ProbSumTerm(tuple((w, _rename_term(c, frm, to)) for w, c in t.branches))
    raise WellFormednessError(f"not a term node: {t!r}")


def _rename_all(b: Formula, frm: str, to: str) -> Formula:
    if isinstance(b, Atom):
        return Atom(b.predicate, _rename_term(b.term, frm, to))
    if isinstance(b, MeasAtom):
        return MeasAtom(b.measurement, b.outcome,
                        tuple(to if v == frm else v for v in b.variables))
    if isinstance(b, Not):
        return Not(_rename_all(b.sub, frm, to))
    if isinstance(b, And):
        return And(_rename_all(b.left, frm, to), _rename_all(b.right, frm, to))
    if isinstance(b, Adjoint):
        return Adjoint(_rename_term(b.term, frm, to), _rename_all(b.sub, frm, to))
    if isinstance(b, Forall):
        return Forall(tuple(to if v == frm else v for v in b.variables),
                      _rename_all(b.sub, frm, to))
    raise WellFormednessError(f"not a formula node: {b!r}")


def rename_bound(i: Interpretation, b: Formula, frm: str, to: str) -> Formula:
    """Alpha-rename every bound occurrence of ``frm`` to the fresh ``to``.

    Requires: frm not free in b, to nowhere in b, equal dimensions.  The
    result denotes the same subspace.
    """
    if frm in free_vars(b):
        raise WellFormednessError(f"{frm!r} occurs free; only bound renaming is allowed")
    if _occurs(b, to):
        raise WellFormednessError(f"{to!r} already occurs in the formula")
    if i.var_dim(frm) != i.var_dim(to):
        raise WellFormednessError(
            f"dimension mismatch: {frm!r} has {i.var_dim(frm)}, {to!r} has {i.var_dim(to)}"
        )
    if not _occurs(b, frm):
        return b
    return _rename_all(b, frm, to)


def basis_atoms(i: Interpretation, names, vectors, prefix: str = "_KET"):
    """Bind each vector as a one-dimensional predicate over ``names`` and
    return (extended interpretation, [atomic formulas]).

    This is the runtime-assertion encoding: the k-th returned formula
    asserts 'the variables are in the ray of vector k', and their
    disjunction asserts membership in the spanned subspace.  Vectors are
    read in the tensor order of the declaration (global) variable order.
    """
    from .interp import PredicateBinding

    names = sorted(names, key=i.var_index)
    sig = i.signature_of(names)
    space = int(np.prod(sig))
    extra = {}
    formulas = []
    for k, v in enumerate(vectors):
        vec = np.asarray(v, dtype=np.complex128).reshape(-1)
        if vec.shape[0] != space:
            raise DimensionMismatchError(
                f"vector {k} has length {vec.shape[0]}, variables span {space}"
            )
        sym = f"{prefix}{k}"
        extra[sym] = PredicateBinding(sym, sig, Subspace.from_span(vec.reshape(-1, 1), space))
        formulas.append(Atom(sym, identity_term(names)))
    return i.with_predicates(extra), formulas

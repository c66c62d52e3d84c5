"""Shared builders for tests: gate matrices, standard interpretations and
randomized subspaces / states / channels."""

from __future__ import annotations

import math

import numpy as np

from bvn import (
    Atom,
    Channel,
    StateDensity,
    Subspace,
    build,
    identity_term,
)
from bvn.interp import Interpretation, PredicateBinding

H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
S = np.diag([1.0, 1j])
T = np.diag([1.0, np.exp(1j * np.pi / 4)])
CNOT = np.eye(4, dtype=complex)[[0, 1, 3, 2]]
P0 = np.diag([1.0, 0.0]).astype(complex)
P1 = np.diag([0.0, 1.0]).astype(complex)

GATES = {"H": H, "X": X, "Y": Y, "Z": Z, "S": S, "T": T, "C": CNOT}


def two_qubit_interp() -> Interpretation:
    """q1, q2 with the usual gates, a computational measurement and the
    worked-example predicates."""
    return build(
        variables=[("q1", 2), ("q2", 2)],
        operations=[
            ("H", (2,), [H], True),
            ("X", (2,), [X], True),
            ("Y", (2,), [Y], True),
            ("Z", (2,), [Z], True),
            ("C", (2, 2), [CNOT], True),
        ],
        measurements=[("M", (2,), [(0, P0), (1, P1)])],
        predicates=[
            ("P0", (2,), np.array([[1, 0]])),
            ("PX", (2,), np.array([[0.6, 0.8]])),
            ("P", (2, 2), np.array([[1, 0, 0, 0], [0, 0, 1, 0]])),
        ],
        allowed=[((2,), ["H", "X", "Y", "Z"]), ((2, 2), ["C"])],
    )


def one_qubit_interp(allowed_syms=("H", "X")) -> Interpretation:
    return build(
        variables=[("q", 2)],
        operations=[
            ("H", (2,), [H], True),
            ("X", (2,), [X], True),
            ("Z", (2,), [Z], True),
        ],
        measurements=[("M", (2,), [(0, P0), (1, P1)])],
        predicates=[
            ("S0", (2,), np.array([[1, 0]])),
            ("S1", (2,), np.array([[0, 1]])),
            ("Splus", (2,), np.array([[1, 1]]) / np.sqrt(2)),
        ],
        allowed=[((2,), list(allowed_syms))],
    )


def haar_basis(rng, dim: int, rank: int) -> np.ndarray:
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    q, _ = np.linalg.qr(g)
    return q[:, :rank]


def random_subspace(rng, dim: int, rank: int | None = None) -> Subspace:
    if rank is None:
        rank = int(rng.integers(0, dim + 1))
    if rank == 0:
        return Subspace.zero(dim)
    return Subspace(dim, haar_basis(rng, dim, rank))


def random_subspace_inside(rng, outer: Subspace, rank: int | None = None) -> Subspace:
    if outer.rank == 0:
        return outer
    if rank is None:
        rank = int(rng.integers(0, outer.rank + 1))
    if rank == 0:
        return Subspace.zero(outer.dim)
    return Subspace(outer.dim, outer.basis @ haar_basis(rng, outer.rank, rank))


def random_unitary(rng, dim: int) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(rng, dim: int, rank: int | None = None) -> StateDensity:
    if rank is None:
        rank = int(rng.integers(1, dim + 1))
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return StateDensity(m / np.trace(m))


def random_state_inside(rng, x: Subspace) -> StateDensity:
    """A normalized state whose support lies inside x (x must be nonzero)."""
    inner = random_state(rng, x.rank)
    return StateDensity(x.basis @ inner.matrix @ x.basis.conj().T)


def random_channel(rng, dim: int, n_kraus: int = 2, trace_preserving: bool = True) -> Channel:
    ops = [
        rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        for _ in range(n_kraus)
    ]
    gram = sum(k.conj().T @ k for k in ops)
    evals, evecs = np.linalg.eigh(gram)
    inv_sqrt = evecs @ np.diag(evals ** -0.5) @ evecs.conj().T
    ops = [k @ inv_sqrt for k in ops]
    if not trace_preserving:
        ops = [np.sqrt(float(rng.uniform(0.3, 1.0))) * k for k in ops]
    return Channel(dim, dim, tuple(ops))


def three_qubit_interp() -> Interpretation:
    return build(
        variables=[("q1", 2), ("q2", 2), ("q3", 2)],
        operations=[
            ("H", (2,), [H], True),
            ("X", (2,), [X], True),
            ("Z", (2,), [Z], True),
            ("C", (2, 2), [CNOT], True),
        ],
        measurements=[("M", (2,), [(0, P0), (1, P1)])],
        allowed=[((2,), ["H", "X", "Z"]), ((2, 2), ["C"])],
    )


def random_word_term(i: Interpretation, rng, names, length: int | None = None):
    """A random sequence of unitary symbol applications over ``names``."""
    from itertools import permutations

    from bvn import BasicTerm, SeqTerm

    names = list(names)
    choices = []
    for sym, op in i.operations.items():
        if not op.unitary or sym.endswith("^-1"):
            continue
        for tup in permutations(names, len(op.signature)):
            if i.signature_of(tup) == op.signature:
                choices.append((sym, tup))
    if not choices:
        raise ValueError("no unitary symbols apply to these variables")
    if length is None:
        length = int(rng.integers(1, 4))
    sym, tup = choices[rng.integers(len(choices))]
    t = BasicTerm(sym, tup)
    for _ in range(length - 1):
        sym, tup = choices[rng.integers(len(choices))]
        t = SeqTerm(t, BasicTerm(sym, tup))
    return t


def random_loop_free_program(i: Interpretation, rng, names, depth: int = 2):
    """A random program over ``names`` built from skip, resets, unitary
    assignments, sequencing and case statements."""
    from bvn import CaseProg, Init, SeqProg, Skip, UnitaryAssign
    from bvn.terms import term_vars

    names = list(names)
    kind = int(rng.integers(0, 5 if depth > 0 else 3))
    if kind == 0:
        return Skip()
    if kind == 1:
        return Init(names[rng.integers(len(names))])
    if kind == 2:
        t = random_word_term(i, rng, names)
        return UnitaryAssign(tuple(sorted(term_vars(t), key=i.var_index)), t)
    if kind == 3:
        return SeqProg(
            random_loop_free_program(i, rng, names, depth - 1),
            random_loop_free_program(i, rng, names, depth - 1),
        )
    guard = names[rng.integers(len(names))]
    return CaseProg(
        "M",
        (guard,),
        (
            (0, random_loop_free_program(i, rng, names, depth - 1)),
            (1, random_loop_free_program(i, rng, names, depth - 1)),
        ),
    )


def brute_channel(i: Interpretation, s) -> Channel:
    """Loop-free program as a single Kraus channel on the global space
    (independent composition oracle for the subspace transformers)."""
    from bvn import CaseProg, Init, SeqProg, Skip, UnitaryAssign
    from bvn.linalg import channel_compose
    from bvn.programs import _init_channel, _outcome_channel
    from bvn.terms import term_channel

    d = i.total_dim
    if isinstance(s, Skip):
        return Channel.identity(d)
    if isinstance(s, Init):
        return _init_channel(i, s.variable)
    if isinstance(s, UnitaryAssign):
        return term_channel(i, s.term)
    if isinstance(s, SeqProg):
        return channel_compose(brute_channel(i, s.second), brute_channel(i, s.first))
    if isinstance(s, CaseProg):
        kraus = []
        for outcome, branch in s.branches:
            mch = _outcome_channel(i, s.measurement, outcome, s.variables)
            sub = channel_compose(brute_channel(i, branch), mch)
            kraus.extend(sub.kraus)
        return Channel(d, d, tuple(kraus))
    raise ValueError("loops have no finite Kraus form")


def bind_atoms(i: Interpretation, mapping: dict):
    """Extend the interpretation with predicate symbols for ad-hoc subspaces.

    mapping: name -> (variable name tuple, Subspace over those variables).
    Returns (new interpretation, {name: atomic Formula}).
    """
    extra = {}
    formulas = {}
    for name, (names, sub) in mapping.items():
        names = tuple(names)
        sig = i.signature_of(names)
        if sub.dim != int(math.prod(sig)):
            raise ValueError(f"subspace for {name} has dim {sub.dim}, needs {math.prod(sig)}")
        extra[name] = PredicateBinding(name, sig, sub)
        formulas[name] = Atom(name, identity_term(names))
    return i.with_predicates(extra), formulas

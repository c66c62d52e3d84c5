"""Quantum while-programs: small-step execution and exact subspace transformers.

The numerical interpreter (``run``) explores the measurement-branching
transition tree and sums terminal leaves, reporting the unexplored trace
mass honestly.  Verification never relies on that truncation: forward
images and weakest liberal preconditions of loops are computed as exact
least/greatest fixpoints in the subspace lattice, which has finite height
per ambient dimension.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .config import Tolerances
from .errors import DimensionMismatchError, WellFormednessError
from .interp import Interpretation, embed, embed_subspace
from .linalg import (
    Channel,
    StateDensity,
    Subspace,
    channel_apply,
    channel_image,
    channel_wlp,
    lattice_join,
    lattice_meet,
    orthonormal_columns,
    subspace_equal,
)
from .terms import (
    BasicTerm,
    Term,
    basic_channel,
    is_unitary_term,
    term_apply,
    term_forward_image,
    term_image,
    term_vars,
    term_wf,
    term_wlp,
)

__all__ = [
    "Program",
    "Skip",
    "Init",
    "UnitaryAssign",
    "SeqProg",
    "CaseProg",
    "WhileProg",
    "Configuration",
    "prog_vars",
    "prog_wf",
    "step",
    "run",
    "RunResult",
    "prog_image",
    "prog_wlp",
    "terminates_probe",
    "TerminationReport",
    "representable_probe",
    "RepresentabilityReport",
]


class Program:
    __slots__ = ()


@dataclass(frozen=True)
class Skip(Program):
    pass


@dataclass(frozen=True)
class Init(Program):
    variable: str


@dataclass(frozen=True)
class UnitaryAssign(Program):
    variables: tuple
    term: Term


@dataclass(frozen=True)
class SeqProg(Program):
    first: Program
    second: Program


@dataclass(frozen=True)
class CaseProg(Program):
    measurement: str
    variables: tuple
    branches: tuple  # of (outcome, Program), in declared outcome order


@dataclass(frozen=True)
class WhileProg(Program):
    measurement: str
    variables: tuple
    body: Program


@dataclass(frozen=True)
class Configuration:
    """A program under execution paired with a partial density operator;
    ``program is None`` marks termination."""

    program: Program | None
    state: StateDensity
    via: str = ""
    zero_trace: bool = False


def prog_vars(s: Program) -> frozenset:
    if isinstance(s, Skip):
        return frozenset()
    if isinstance(s, Init):
        return frozenset((s.variable,))
    if isinstance(s, UnitaryAssign):
        return frozenset(s.variables) | term_vars(s.term)
    if isinstance(s, SeqProg):
        return prog_vars(s.first) | prog_vars(s.second)
    if isinstance(s, CaseProg):
        out = frozenset(s.variables)
        for _, branch in s.branches:
            out |= prog_vars(branch)
        return out
    if isinstance(s, WhileProg):
        return frozenset(s.variables) | prog_vars(s.body)
    raise WellFormednessError(f"not a program node: {s!r}")


def prog_wf(i: Interpretation, s: Program, allow_nonunitary: bool = False) -> frozenset:
    """Validate the program against the interpretation; return var(S).

    ``allow_nonunitary`` admits non-unitary terms in assignments (the noisy
    extension); the proof rules never accept such programs.
    """
    if isinstance(s, Skip):
        return frozenset()
    if isinstance(s, Init):
        i.var_dim(s.variable)
        return frozenset((s.variable,))
    if isinstance(s, UnitaryAssign):
        tv = term_wf(i, s.term)
        if not tv <= set(s.variables):
            raise WellFormednessError(
                f"assignment term uses {sorted(tv - set(s.variables))} outside {list(s.variables)}"
            )
        if len(set(s.variables)) != len(s.variables):
            raise WellFormednessError("assignment variable list repeats a variable")
        for q in s.variables:
            i.var_dim(q)
        if not allow_nonunitary and not is_unitary_term(i, s.term):
            raise WellFormednessError("assignment terms must be unitary")
        return frozenset(s.variables) | tv
    if isinstance(s, SeqProg):
        return prog_wf(i, s.first, allow_nonunitary) | prog_wf(i, s.second, allow_nonunitary)
    if isinstance(s, CaseProg):
        m = _measurement(i, s.measurement, s.variables)
        declared = set(m.outcomes)
        covered = [o for o, _ in s.branches]
        if set(covered) != declared or len(covered) != len(declared):
            raise WellFormednessError(
                f"case must cover outcomes {sorted(declared)} exactly once, got {covered}"
            )
        out = frozenset(s.variables)
        for _, branch in s.branches:
            out |= prog_wf(i, branch, allow_nonunitary)
        return out
    if isinstance(s, WhileProg):
        m = _measurement(i, s.measurement, s.variables)
        if set(m.outcomes) != {0, 1}:
            raise WellFormednessError(
                f"loop guards need outcomes {{0, 1}}, {s.measurement!r} has {list(m.outcomes)}"
            )
        return frozenset(s.variables) | prog_wf(i, s.body, allow_nonunitary)
    raise WellFormednessError(f"not a program node: {s!r}")


def _measurement(i: Interpretation, symbol: str, variables):
    m = i.measurements.get(symbol)
    if m is None:
        raise WellFormednessError(f"unknown measurement symbol {symbol!r}")
    if i.signature_of(variables) != m.signature:
        raise WellFormednessError(
            f"measurement {symbol!r} has signature {m.signature}, "
            f"variables {list(variables)} give {i.signature_of(variables)}"
        )
    if len(set(variables)) != len(variables):
        raise WellFormednessError("measurement variable list repeats a variable")
    return m


def _outcome_channel(i: Interpretation, symbol: str, outcome, variables) -> Channel:
    m = i.measurements[symbol]
    proj = m.projectors[m.outcomes.index(outcome)]
    return embed(i, Channel(proj.shape[0], proj.shape[0], (proj,), "projective"), list(variables))


def _init_channel(i: Interpretation, variable: str) -> Channel:
    return embed(i, basic_channel(i, BasicTerm("0", (variable,))), [variable])


def step(i: Interpretation, c: Configuration, tol: Tolerances | None = None) -> list:
    """All successor configurations of one transition.  Measurement rules
    return one successor per branch; zero-trace successors are kept and
    flagged rather than dropped."""
    tol = tol or i.tol
    if c.program is None:
        raise WellFormednessError("terminated configurations have no successors")
    s, rho = c.program, c.state

    def conf(program, state, via):
        return Configuration(program, state, via, state.trace <= tol.tau_num)

    if isinstance(s, Skip):
        return [conf(None, rho, "Sk")]
    if isinstance(s, Init):
        return [conf(None, channel_apply(_init_channel(i, s.variable), rho), "In")]
    if isinstance(s, UnitaryAssign):
        return [conf(None, term_apply(i, s.term, rho), "UT")]
    if isinstance(s, SeqProg):
        out = []
        for sub in step(i, Configuration(s.first, rho), tol):
            rest = s.second if sub.program is None else SeqProg(sub.program, s.second)
            out.append(conf(rest, sub.state, "SC:" + sub.via))
        return out
    if isinstance(s, CaseProg):
        out = []
        for outcome, branch in s.branches:
            ch = _outcome_channel(i, s.measurement, outcome, s.variables)
            out.append(conf(branch, channel_apply(ch, rho), f"IF[{outcome}]"))
        return out
    if isinstance(s, WhileProg):
        ch0 = _outcome_channel(i, s.measurement, 0, s.variables)
        ch1 = _outcome_channel(i, s.measurement, 1, s.variables)
        return [
            conf(None, channel_apply(ch0, rho), "L0"),
            conf(SeqProg(s.body, s), channel_apply(ch1, rho), "L1"),
        ]
    raise WellFormednessError(f"not a program node: {s!r}")


@dataclass(frozen=True)
class RunResult:
    output: StateDensity
    residual: float
    status: str  # exact | truncated
    steps: int


def run(
    i: Interpretation,
    s: Program,
    rho: StateDensity,
    max_steps: int = 100_000,
    epsilon: float = 1e-12,
    tol: Tolerances | None = None,
) -> RunResult:
    """Sum of terminal leaves of the transition tree.

    Branches whose trace falls below ``epsilon`` are abandoned and counted
    into the residual; exploration also stops at ``max_steps`` transitions.
    The residual is reported, never silently dropped.
    """
    tol = tol or i.tol
    if rho.dim != i.total_dim:
        raise DimensionMismatchError(f"state dim {rho.dim} != global dimension {i.total_dim}")
    prog_wf(i, s, allow_nonunitary=True)
    out = np.zeros((i.total_dim, i.total_dim), dtype=np.complex128)
    residual = 0.0
    steps = 0
    pending: deque = deque([Configuration(s, rho)])
    while pending:
        c = pending.popleft()
        if c.program is None:
            out += c.state.matrix
            continue
        if c.state.trace <= epsilon:
            residual += max(c.state.trace, 0.0)
            continue
        if steps >= max_steps:
            residual += max(c.state.trace, 0.0)
            continue
        steps += 1
        pending.extend(step(i, c, tol))
    status = "exact" if residual < tol.tau_num else "truncated"
    return RunResult(StateDensity(out), residual, status, steps)


# ---------------------------------------------------------------------------
# exact subspace transformers
# ---------------------------------------------------------------------------


def _image_fixpoint(i, s: WhileProg, x: Subspace, tol: Tolerances) -> Subspace:
    """Least fixpoint of Z -> Z v image(body, image(M1, Z)) from Z0 = x:
    everything reachable at the loop head."""
    ch1 = _outcome_channel(i, s.measurement, 1, s.variables)
    z = x
    for _ in range(x.dim + 1):
        grown = lattice_join(
            [z, prog_image(i, s.body, channel_image(ch1, z, tol), tol)], tol
        )
        if grown.rank == z.rank and subspace_equal(grown, z, tol):
            return z
        z = grown
    raise AssertionError("loop image fixpoint failed to stabilize within dim+1 iterations")


def prog_image(i: Interpretation, s: Program, x: Subspace, tol: Tolerances | None = None) -> Subspace:
    """Exact forward image of a subspace under the program's semantics."""
    tol = tol or i.tol
    if x.dim != i.total_dim:
        raise DimensionMismatchError(f"subspace dim {x.dim} != global dimension {i.total_dim}")
    if isinstance(s, Skip):
        return x
    if isinstance(s, Init):
        return channel_image(_init_channel(i, s.variable), x, tol)
    if isinstance(s, UnitaryAssign):
        return term_forward_image(i, s.term, x, tol)
    if isinstance(s, SeqProg):
        return prog_image(i, s.second, prog_image(i, s.first, x, tol), tol)
    if isinstance(s, CaseProg):
        parts = []
        for outcome, branch in s.branches:
            ch = _outcome_channel(i, s.measurement, outcome, s.variables)
            parts.append(prog_image(i, branch, channel_image(ch, x, tol), tol))
        return lattice_join(parts, tol)
    if isinstance(s, WhileProg):
        z = _image_fixpoint(i, s, x, tol)
        ch0 = _outcome_channel(i, s.measurement, 0, s.variables)
        return channel_image(ch0, z, tol)
    raise WellFormednessError(f"not a program node: {s!r}")


def prog_wlp(i: Interpretation, s: Program, y: Subspace, tol: Tolerances | None = None) -> Subspace:
    """Exact weakest liberal precondition: the largest subspace of inputs
    from which the program, if it terminates, lands inside y."""
    tol = tol or i.tol
    if y.dim != i.total_dim:
        raise DimensionMismatchError(f"subspace dim {y.dim} != global dimension {i.total_dim}")
    if isinstance(s, Skip):
        return y
    if isinstance(s, Init):
        return channel_wlp(_init_channel(i, s.variable), y, tol)
    if isinstance(s, UnitaryAssign):
        return term_wlp(i, s.term, y, tol)
    if isinstance(s, SeqProg):
        return prog_wlp(i, s.first, prog_wlp(i, s.second, y, tol), tol)
    if isinstance(s, CaseProg):
        parts = []
        for outcome, branch in s.branches:
            ch = _outcome_channel(i, s.measurement, outcome, s.variables)
            parts.append(channel_wlp(ch, prog_wlp(i, branch, y, tol), tol))
        return lattice_meet(parts, tol)
    if isinstance(s, WhileProg):
        ch0 = _outcome_channel(i, s.measurement, 0, s.variables)
        ch1 = _outcome_channel(i, s.measurement, 1, s.variables)
        exit_part = channel_wlp(ch0, y, tol)
        z = Subspace.full(y.dim)
        for _ in range(y.dim + 1):
            shrunk = lattice_meet(
                [exit_part, channel_wlp(ch1, prog_wlp(i, s.body, z, tol), tol)], tol
            )
            if shrunk.rank == z.rank and subspace_equal(shrunk, z, tol):
                return z
            z = shrunk
        raise AssertionError("loop wlp fixpoint failed to stabilize within dim+1 iterations")
    raise WellFormednessError(f"not a program node: {s!r}")


# ---------------------------------------------------------------------------
# probes used by the adaptation rules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TerminationReport:
    status: str  # terminates | diverges-witness | inconclusive
    residual: float
    witness: np.ndarray | None = None
    loop: Program | None = None


def _never_terminating_subspace(i, s: WhileProg, tol: Tolerances) -> Subspace:
    """Greatest subspace inside the guard's 1-range that the body maps back
    into itself: loop mass started there never reaches the exit branch."""
    m = i.measurements[s.measurement]
    proj1 = m.projectors[m.outcomes.index(1)]
    range1 = embed_subspace(
        i,
        Subspace(proj1.shape[0], orthonormal_columns(proj1, tol)),
        list(s.variables),
    )
    z = Subspace.full(i.total_dim)
    for _ in range(i.total_dim + 1):
        shrunk = lattice_meet([range1, prog_wlp(i, s.body, z, tol)], tol)
        if shrunk.rank == z.rank and subspace_equal(shrunk, z, tol):
            return z
        z = shrunk
    raise AssertionError("divergence fixpoint failed to stabilize")


def _collect_loops(i, s: Program, reach: Subspace, acc: list, tol: Tolerances) -> Subspace:
    """Walk the program recording (loop, subspace reaching its head); return
    the forward image of ``reach``."""
    if isinstance(s, (Skip, Init, UnitaryAssign)):
        return prog_image(i, s, reach, tol)
    if isinstance(s, SeqProg):
        mid = _collect_loops(i, s.first, reach, acc, tol)
        return _collect_loops(i, s.second, mid, acc, tol)
    if isinstance(s, CaseProg):
        parts = []
        for outcome, branch in s.branches:
            ch = _outcome_channel(i, s.measurement, outcome, s.variables)
            parts.append(_collect_loops(i, branch, channel_image(ch, reach, tol), acc, tol))
        return lattice_join(parts, tol)
    if isinstance(s, WhileProg):
        head = _image_fixpoint(i, s, reach, tol)
        acc.append((s, head))
        ch1 = _outcome_channel(i, s.measurement, 1, s.variables)
        _collect_loops(i, s.body, channel_image(ch1, head, tol), acc, tol)
        ch0 = _outcome_channel(i, s.measurement, 0, s.variables)
        return channel_image(ch0, head, tol)
    raise WellFormednessError(f"not a program node: {s!r}")


def terminates_probe(
    i: Interpretation,
    s: Program,
    max_steps: int = 100_000,
    tol: Tolerances | None = None,
) -> TerminationReport:
    """Termination in the trace-preservation sense, decided where possible.

    Runs the maximally mixed state (trace preservation there is trace
    preservation everywhere, by linearity).  When mass is missing, looks
    for a nonzero subspace of some loop's guard range that the body keeps
    invariant and that intersects the subspace reaching the loop head:
    such mass provably never exits, so the program diverges.  Otherwise
    the answer is an honest 'inconclusive' carrying the residual.
    """
    tol = tol or i.tol
    prog_wf(i, s, allow_nonunitary=True)
    result = run(i, s, StateDensity.maximally_mixed(i.total_dim), max_steps=max_steps, tol=tol)
    if result.residual < tol.tau_num:
        return TerminationReport("terminates", result.residual)
    loops: list = []
    _collect_loops(i, s, Subspace.full(i.total_dim), loops, tol)
    for loop, head in loops:
        trap = lattice_meet([_never_terminating_subspace(i, loop, tol), head], tol)
        if trap.rank > 0:
            return TerminationReport(
                "diverges-witness", result.residual, trap.basis[:, 0], loop
            )
    return TerminationReport("inconclusive", result.residual)


@dataclass(frozen=True)
class RepresentabilityReport:
    status: str  # verified-on-samples | refuted
    checks: int
    counterexample: Subspace | None = None


def representable_probe(
    i: Interpretation,
    s: Program,
    witness: Term,
    trials: int = 20,
    seed: int = 0,
    tol: Tolerances | None = None,
) -> RepresentabilityReport:
    """Sampled check that running the program after the witness term's
    adjoint action restores every subspace of the program's variable space.

    Tries every coordinate ray, every adjacent coordinate plane, and
    ``trials`` random subspaces; a failure refutes with the counterexample,
    success is explicitly sample-based, not a proof.
    """
    tol = tol or i.tol
    prog_wf(i, s, allow_nonunitary=True)
    term_wf(i, witness)
    svars = prog_vars(s)
    wvars = term_vars(witness)
    if svars and not wvars <= svars:
        raise WellFormednessError(
            f"witness uses variables {sorted(wvars - svars)} outside var(S)"
        )
    names = sorted(svars | wvars, key=i.var_index)
    if not names:
        return RepresentabilityReport("verified-on-samples", 0)
    space = int(math.prod(i.var_dim(n) for n in names))

    samples = []
    eye = np.eye(space, dtype=np.complex128)
    for k in range(space):
        samples.append(eye[:, [k]])
    for k in range(space - 1):
        samples.append(eye[:, [k, k + 1]])
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        r = rng.integers(1, space + 1)
        g = rng.normal(size=(space, r)) + 1j * rng.normal(size=(space, r))
        samples.append(g)

    checks = 0
    for cols in samples:
        local = Subspace(space, orthonormal_columns(np.asarray(cols, dtype=np.complex128), tol))
        x = embed_subspace(i, local, names)
        back = prog_image(i, s, term_image(i, witness, x, tol), tol)
        checks += 1
        if not subspace_equal(back, x, tol):
            return RepresentabilityReport("refuted", checks, local)
    return RepresentabilityReport("verified-on-samples", checks)

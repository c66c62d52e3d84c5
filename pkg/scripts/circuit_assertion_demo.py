"""Worked example: the Z/H/CNOT/Y/H circuit preserves the second qubit
whenever the first is |0>.

Builds the standard two-qubit interpretation, sweeps several choices of
the 'second qubit stays inside X' predicate, and checks the quantified
assertion plus some control states that should fail the unquantified body.

Run:  python3 scripts/circuit_assertion_demo.py [--seed N]
"""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

import helpers  # noqa: E402
from bvn import (  # noqa: E402
    StateDensity,
    Subspace,
    eval_subspace,
    sat_probability,
    satisfies,
)
from bvn.interp import PredicateBinding  # noqa: E402
from bvn.parser import parse_formula  # noqa: E402

CIRCUIT = "Z(q1) H(q2) C(q1,q2) Y(q1) H(q2)"


def interp_with_second_factor(x_basis: np.ndarray):
    """Bind P to (full first qubit) tensor span(x_basis)."""
    i = helpers.two_qubit_interp()
    lifted = np.kron(np.eye(2), x_basis)
    sub = Subspace.from_span(lifted, 4)
    preds = dict(i.predicates)
    preds["P"] = PredicateBinding("P", (2, 2), sub)
    from dataclasses import replace

    return replace(i, predicates=preds)


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    nested = parse_formula(
        f"forall q1 . forall q2 . (P0(q1) /\\ P(q1,q2)) -> P({CIRCUIT})"
    )
    joint = parse_formula(f"forall q1 q2 . (P0(q1) /\\ P(q1,q2)) -> P({CIRCUIT})")
    body = parse_formula(f"(P0(q1) /\\ P(q1,q2)) -> P({CIRCUIT})")

    cases = {
        "X = span|0>": np.array([[1.0], [0.0]]),
        "X = span|1>": np.array([[0.0], [1.0]]),
        "X = span|+>": np.array([[1.0], [1.0]]) / np.sqrt(2),
        "X = random line": helpers.haar_basis(rng, 2, 1),
    }
    zero_zero = StateDensity.pure([1, 0, 0, 0])
    print(f"circuit: {CIRCUIT}")
    for label, basis in cases.items():
        i = interp_with_second_factor(basis)
        ok_nested = satisfies(i, zero_zero, nested)
        ok_joint = satisfies(i, zero_zero, joint)
        rank = eval_subspace(i, body).rank
        print(
            f"  {label:18s} nested forall: {ok_nested}  joint forall: {ok_joint}  "
            f"body rank {rank}/4"
        )
        assert ok_nested and ok_joint
    # a control that genuinely depends on the state
    i = interp_with_second_factor(np.array([[1.0], [0.0]]))
    conj = parse_formula("P0(q1) /\\ P(q1,q2)")
    for label, vec in (("|00>", [1, 0, 0, 0]), ("|11>", [0, 0, 0, 1])):
        rho = StateDensity.pure(vec)
        print(
            f"  control {label}: conjunct body satisfied={satisfies(i, rho, conj)} "
            f"probability={sat_probability(i, rho, conj):.3f}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())

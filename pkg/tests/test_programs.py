import numpy as np
import pytest

import helpers
from bvn import (
    CaseProg,
    Configuration,
    SeqProg,
    Skip,
    StateDensity,
    Subspace,
    UnitaryAssign,
    WellFormednessError,
    WhileProg,
    includes,
    prog_image,
    prog_vars,
    prog_wf,
    prog_wlp,
    representable_probe,
    run,
    step,
    subspace_equal,
    support,
    terminates_probe,
)
from bvn.linalg import channel_image, channel_wlp
from bvn.parser import parse_program, parse_term


def coord(dim, *ks):
    return Subspace.from_span(np.eye(dim)[:, list(ks)], dim)


class TestWellFormedness:
    def test_vars(self, std2):
        s = parse_program("q1 := |0>; q1,q2 := C(q1,q2)")
        assert prog_wf(std2, s) == {"q1", "q2"}
        assert prog_vars(s) == {"q1", "q2"}

    def test_probsum_assignment_rejected(self, std2):
        s = UnitaryAssign(("q1",), parse_term("mix { 0.5: H(q1), 0.5: X(q1) }"))
        with pytest.raises(WellFormednessError):
            prog_wf(std2, s)
        # the noisy extension accepts it behind the flag
        assert prog_wf(std2, s, allow_nonunitary=True) == {"q1"}

    def test_while_needs_binary_outcomes(self):
        import bvn

        three = bvn.build(
            [("q", 3)],
            [],
            [("M3", (3,), [(0, np.diag([1.0, 0, 0])), (1, np.diag([0.0, 1, 0])), (2, np.diag([0.0, 0, 1]))])],
        )
        s = WhileProg("M3", ("q",), Skip())
        with pytest.raises(WellFormednessError):
            prog_wf(three, s)

    def test_case_must_cover_outcomes(self, std1):
        s = CaseProg("M", ("q",), ((0, Skip()),))
        with pytest.raises(WellFormednessError):
            prog_wf(std1, s)

    def test_term_outside_assigned_vars(self, std2):
        s = UnitaryAssign(("q1",), parse_term("C(q1,q2)"))
        with pytest.raises(WellFormednessError):
            prog_wf(std2, s)


class TestStep:
    def test_skip(self, std1, rng):
        rho = helpers.random_state(rng, 2)
        (succ,) = step(std1, Configuration(Skip(), rho))
        assert succ.program is None and np.allclose(succ.state.matrix, rho.matrix)

    def test_if_branches_have_born_weights(self, std1):
        rho = StateDensity.pure(np.array([1, 1]) / np.sqrt(2))
        s = parse_program("if M[q] { 0 -> skip | 1 -> q := X(q) } fi")
        succs = step(std1, Configuration(s, rho))
        assert len(succs) == 2
        assert all(abs(c.state.trace - 0.5) < 1e-12 for c in succs)

    def test_if_preserves_total_trace(self, std1, rng):
        rho = helpers.random_state(rng, 2)
        s = parse_program("if M[q] { 0 -> skip | 1 -> skip } fi")
        succs = step(std1, Configuration(s, rho))
        assert abs(sum(c.state.trace for c in succs) - rho.trace) < 1e-12

    def test_loop_zero_branch_flagged(self, std1):
        s = parse_program("while M[q] = 1 do q := X(q) od")
        succs = step(std1, Configuration(s, StateDensity.pure([0, 1])))
        exit_branch = [c for c in succs if c.via == "L0"][0]
        loop_branch = [c for c in succs if c.via == "L1"][0]
        assert exit_branch.zero_trace and exit_branch.program is None
        assert not loop_branch.zero_trace
        assert isinstance(loop_branch.program, SeqProg)

    def test_terminated_has_no_successors(self, std1):
        with pytest.raises(WellFormednessError):
            step(std1, Configuration(None, StateDensity.pure([1, 0])))


class TestRun:
    def test_skip_exact(self, std1, rng):
        rho = helpers.random_state(rng, 2)
        res = run(std1, Skip(), rho)
        assert res.status == "exact" and res.residual == 0.0
        assert np.allclose(res.output.matrix, rho.matrix)

    def test_init(self, std1):
        res = run(std1, parse_program("q := |0>"), StateDensity.pure([0, 1]))
        assert np.allclose(res.output.matrix, np.diag([1.0, 0.0]))
        assert res.status == "exact"

    def test_h_loop_truncates_geometrically(self, std1):
        s = parse_program("while M[q] = 1 do q := H(q) od")
        res = run(std1, s, StateDensity.pure([0, 1]), max_steps=100_000, epsilon=1e-9)
        assert res.output.trace >= 1 - 1e-6
        assert res.status == "truncated" or res.residual < 1e-9

    def test_step_cap_reports_residual(self, std1):
        s = parse_program("while M[q] = 1 do q := H(q) od")
        res = run(std1, s, StateDensity.pure([0, 1]), max_steps=5, epsilon=0.0)
        assert res.status == "truncated"
        assert res.residual > 1e-3

    def test_loop_free_equals_composed_channel(self, std2, rng):
        s = parse_program("q1 := H(q1); if M[q2] { 0 -> q1,q2 := C(q1,q2) | 1 -> q2 := X(q2) } fi")
        rho = helpers.random_state(rng, 4)
        res = run(std2, s, rho)
        assert res.status == "exact"
        ch = _brute_channel(std2, s)
        expect = sum(k @ rho.matrix @ k.conj().T for k in ch.kraus)
        assert np.allclose(res.output.matrix, expect, atol=1e-9)


_brute_channel = helpers.brute_channel


class TestSubspaceTransformers:
    def test_skip(self, std1, rng):
        x = helpers.random_subspace(rng, 2)
        assert subspace_equal(prog_image(std1, Skip(), x), x)
        assert subspace_equal(prog_wlp(std1, Skip(), x), x)

    def test_hadamard_image(self, std1):
        x = coord(2, 0)
        img = prog_image(std1, parse_program("q := H(q)"), x)
        assert subspace_equal(img, Subspace.from_span(np.array([[1, 1]]).T / np.sqrt(2), 2))

    def test_hadamard_wlp(self, std1):
        plus_line = Subspace.from_span(np.array([[1, 1]]).T / np.sqrt(2), 2)
        w = prog_wlp(std1, parse_program("q := H(q)"), plus_line)
        assert subspace_equal(w, coord(2, 0))

    def test_x_loop_image(self, std1):
        s = parse_program("while M[q] = 1 do q := X(q) od")
        assert subspace_equal(prog_image(std1, s, coord(2, 1)), coord(2, 0))

    def test_x_loop_wlp_is_everything(self, std1):
        s = parse_program("while M[q] = 1 do q := X(q) od")
        assert prog_wlp(std1, s, coord(2, 0)).rank == 2

    def test_skip_loop_wlp_is_liberal(self, std1):
        # diverging runs satisfy any postcondition under partial correctness
        s = parse_program("while M[q] = 1 do skip od")
        assert prog_wlp(std1, s, coord(2, 0)).rank == 2
        assert prog_wlp(std1, s, Subspace.zero(2)).rank == 1  # only the diverging line

    def test_loop_free_matches_brute_channel(self, std2, rng):
        s = parse_program(
            "q1 := H(q1); if M[q2] { 0 -> q1,q2 := C(q1,q2) | 1 -> q2 := Z(q2) } fi"
        )
        ch = _brute_channel(std2, s)
        for _ in range(6):
            x = helpers.random_subspace(rng, 4)
            assert subspace_equal(prog_image(std2, s, x), channel_image(ch, x))
            assert subspace_equal(prog_wlp(std2, s, x), channel_wlp(ch, x))

    def test_image_wlp_adjunction_loop_free(self, std2, rng):
        s = parse_program("q1 := H(q1); q1,q2 := C(q1,q2)")
        for _ in range(8):
            x = helpers.random_subspace(rng, 4)
            y = helpers.random_subspace(rng, 4)
            lhs = includes(y, prog_image(std2, s, x))
            rhs = includes(prog_wlp(std2, s, y), x)
            assert lhs == rhs

    def test_loop_adjunction_direction(self, std2, rng):
        # for loops: wlp(s, y) >= x implies image(s, x) <= y
        s = parse_program("while M[q1] = 1 do q1,q2 := C(q1,q2); q1 := X(q1) od")
        for _ in range(8):
            y = helpers.random_subspace(rng, 4)
            w = prog_wlp(std2, s, y)
            x = helpers.random_subspace_inside(rng, w)
            assert includes(y, prog_image(std2, s, x))

    def test_case_joins_and_meets(self, std1, rng):
        s = parse_program("if M[q] { 0 -> q := H(q) | 1 -> skip } fi")
        x = Subspace.full(2)
        assert prog_image(std1, s, x).rank == 2
        assert prog_wlp(std1, s, Subspace.full(2)).rank == 2


class TestTerminatesProbe:
    def test_skip(self, std1):
        assert terminates_probe(std1, Skip()).status == "terminates"

    def test_skip_loop_diverges_with_witness(self, std1):
        s = parse_program("while M[q] = 1 do skip od")
        rep = terminates_probe(std1, s, max_steps=100)
        assert rep.status == "diverges-witness"
        assert rep.witness is not None
        # the witness lies in the guard's 1-range
        assert abs(rep.witness[1]) > 0.9

    def test_h_loop_small_cap_inconclusive(self, std1):
        s = parse_program("while M[q] = 1 do q := H(q) od")
        rep = terminates_probe(std1, s, max_steps=40)
        assert rep.status == "inconclusive"
        assert rep.residual > 0

    def test_h_loop_large_cap_terminates(self, std1):
        s = parse_program("while M[q] = 1 do q := H(q) od")
        assert terminates_probe(std1, s, max_steps=100_000).status == "terminates"

    def test_nested_unreachable_loop_still_terminates(self, std1):
        # the diverging loop is guarded by a reset, so nothing reaches |1>
        s = parse_program("q := |0>; while M[q] = 1 do skip od")
        rep = terminates_probe(std1, s, max_steps=100)
        assert rep.status == "terminates"


class TestRepresentableProbe:
    def test_hadamard_with_itself(self, std1):
        rep = representable_probe(std1, parse_program("q := H(q)"), parse_term("H(q)"))
        assert rep.status == "verified-on-samples"
        assert rep.checks > 0

    def test_reset_refuted(self, std1):
        rep = representable_probe(std1, parse_program("q := |0>"), parse_term("I(q)"))
        assert rep.status == "refuted"
        assert rep.counterexample is not None

    def test_skip_with_identity(self, std1):
        rep = representable_probe(std1, Skip(), parse_term("I(q)"))
        assert rep.status == "verified-on-samples"

    def test_witness_outside_vars_rejected(self, std2):
        with pytest.raises(WellFormednessError):
            representable_probe(std2, parse_program("q1 := H(q1)"), parse_term("X(q2)"))


class TestLoopWlpAgainstPureStateGrid:
    @pytest.mark.parametrize("body", ["q := X(q)", "q := H(q)"])
    def test_one_qubit_loops(self, std1, body):
        # membership in the computed wlp iff the executed output's support
        # lands in the postcondition (runs terminate with tiny residual)
        s = parse_program(f"while M[q] = 1 do {body} od")
        y = coord(2, 0)
        w = prog_wlp(std1, s, y)
        for theta in np.linspace(0, np.pi, 7):
            for phi in np.linspace(0, 2 * np.pi, 7, endpoint=False):
                psi = np.array(
                    [np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)]
                )
                rho = StateDensity.pure(psi)
                res = run(std1, s, rho, max_steps=20_000, epsilon=1e-14)
                assert res.residual < 1e-9
                lands = res.output.trace < 1e-9 or includes(y, support(res.output))
                assert lands == includes(w, support(rho))

    def test_two_qubit_loop(self, std2, rng):
        s = parse_program("while M[q1] = 1 do q1,q2 := C(q1,q2); q1 := X(q1) od")
        y = helpers.random_subspace(rng, 4, 2)
        w = prog_wlp(std2, s, y)
        for _ in range(40):
            rho = helpers.random_state(rng, 4, rank=1)
            res = run(std2, s, rho, max_steps=20_000, epsilon=1e-14)
            assert res.residual < 1e-9
            lands = res.output.trace < 1e-9 or includes(y, support(res.output))
            assert lands == includes(w, support(rho))


class TestFixpointBounds:
    def test_loop_fixpoints_stabilize_quickly(self, std2, rng):
        s = parse_program("while M[q1] = 1 do q1,q2 := C(q1,q2); q1 := X(q1) od")
        for _ in range(4):
            x = helpers.random_subspace(rng, 4)
            prog_image(std2, s, x)  # raises AssertionError if > dim+1 rounds
            prog_wlp(std2, s, x)

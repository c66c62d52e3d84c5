import numpy as np
import pytest

from bvn import ParseError
from bvn.formulas import Adjoint, And, Atom, Forall, MeasAtom, Not, exists_formula, or_formula
from bvn.hoare import EquationJudgment, SequentJudgment, TripleJudgment
from bvn.parser import (
    formula_to_text,
    parse_formula,
    parse_program,
    parse_proof,
    parse_state_vector,
    parse_term,
    parse_triple,
    program_to_text,
    term_to_text,
    triple_to_text,
)
from bvn.programs import CaseProg, Init, SeqProg, Skip, UnitaryAssign, WhileProg
from bvn.terms import BasicTerm, ProbSumTerm, SeqTerm, TensorTerm, identity_term


class TestTermParsing:
    def test_eq1_ast(self):
        t = parse_term("Z(q1) H(q2) C(q1,q2) Y(q1) H(q2)")
        # juxtaposition associates left, leftmost applies first
        assert isinstance(t, SeqTerm)
        assert t.second == BasicTerm("H", ("q2",))
        inner = t.first
        assert inner.second == BasicTerm("Y", ("q1",))

    def test_tensor_binds_looser_than_seq(self):
        t = parse_term("H(q1) Z(q1) @ X(q2)")
        assert isinstance(t, TensorTerm)
        assert isinstance(t.left, SeqTerm)

    def test_mix(self):
        t = parse_term("mix { 0.5: H(q), 0.5: X(q) }")
        assert isinstance(t, ProbSumTerm)
        assert t.branches[0][0] == 0.5

    def test_inverse_and_outcome(self):
        assert parse_term("H^-1(q)") == BasicTerm("H", ("q",), None, True)
        assert parse_term("M.1(q)") == BasicTerm("M", ("q",), 1, False)
        assert parse_term("0(q)") == BasicTerm("0", ("q",))

    def test_grouping(self):
        t = parse_term("H(q) (Z(q) X(q))")
        assert isinstance(t.second, SeqTerm)


class TestFormulaParsing:
    def test_eq2_nested_quantifiers(self):
        b = parse_formula(
            "forall q1 . forall q2 . (P0(q1) /\\ P(q1,q2)) -> P(Z(q1) H(q2) C(q1,q2) Y(q1) H(q2))"
        )
        assert isinstance(b, Forall) and b.variables == ("q1",)
        assert isinstance(b.sub, Forall) and b.sub.variables == ("q2",)

    def test_joint_quantifier(self):
        b = parse_formula("forall q1 q2 . P(q1,q2)")
        assert isinstance(b, Forall) and b.variables == ("q1", "q2")

    def test_bare_variable_atom_sugar(self):
        b = parse_formula("P(q1,q2)")
        assert b == Atom("P", identity_term(["q1", "q2"]))

    def test_atom_with_term(self):
        b = parse_formula("P0(H(q1))")
        assert b == Atom("P0", BasicTerm("H", ("q1",)))

    def test_precedence(self):
        b = parse_formula("~A(q) /\\ B(q) \\/ C(q)")
        assert b == or_formula(And(Not(parse_formula("A(q)")), parse_formula("B(q)")),
                               parse_formula("C(q)"))

    def test_implication_is_sasaki(self):
        b = parse_formula("A(q) -> B(q)")
        a, c = parse_formula("A(q)"), parse_formula("B(q)")
        assert b == or_formula(Not(a), And(a, c))

    def test_adjoint_and_meas(self):
        b = parse_formula("adj<H(q)>(meas M.0(q))")
        assert b == Adjoint(BasicTerm("H", ("q",)), MeasAtom("M", 0, ("q",)))

    def test_exists_desugars(self):
        b = parse_formula("exists q . A(q)")
        assert b == exists_formula(("q",), parse_formula("A(q)"))


class TestProgramParsing:
    def test_constructs(self):
        s = parse_program("q := |0>; q := H(q); while M[q] = 1 do skip od")
        assert isinstance(s, SeqProg)
        assert isinstance(s.second, WhileProg)
        assert s.first == SeqProg(Init("q"), UnitaryAssign(("q",), BasicTerm("H", ("q",))))

    def test_case(self):
        s = parse_program("if M[q] { 0 -> skip | 1 -> q := X(q) } fi")
        assert isinstance(s, CaseProg)
        assert s.branches[0] == (0, Skip())

    def test_loop_guard_must_be_one(self):
        with pytest.raises(ParseError):
            parse_program("while M[q] = 0 do skip od")

    def test_init_requires_zero_ket(self):
        with pytest.raises(ParseError):
            parse_program("q := |1>")


class TestDispatch:
    def test_parse_by_kind(self):
        from bvn.parser import parse

        assert parse("term", "H(q)") == BasicTerm("H", ("q",))
        assert parse("formula", "P0(q)") == Atom("P0", identity_term(["q"]))
        assert parse("program", "skip") == Skip()
        assert isinstance(parse("triple", "{ A(q) } skip { A(q) }").prog, Skip)
        with pytest.raises(Exception):
            parse("nonsense", "x")


class TestErrors:
    def test_position_reported(self):
        with pytest.raises(ParseError) as err:
            parse_formula("P0(q1) /\\\n  ???")
        assert err.value.line == 2
        assert err.value.col >= 3

    def test_trailing_input(self):
        with pytest.raises(ParseError):
            parse_term("H(q) }")

    def test_unbalanced(self):
        with pytest.raises(ParseError):
            parse_formula("(P0(q1)")


class TestStateVectors:
    def test_ket(self):
        v = parse_state_vector("|10>", [2, 2])
        assert np.allclose(v, np.eye(4)[:, 2])

    def test_comma_ket(self):
        v = parse_state_vector("|1,2>", [2, 3])
        assert np.allclose(v, np.eye(6)[:, 5])

    def test_superposition(self):
        v = parse_state_vector("(|00> + |11>)/sqrt(2)", [2, 2])
        assert np.allclose(v, np.array([1, 0, 0, 1]) / np.sqrt(2))

    def test_coefficients(self):
        v = parse_state_vector("0.6*|0> - 0.8*|1>", [2])
        assert np.allclose(v, [0.6, -0.8])
        v2 = parse_state_vector("i*|1>", [2])
        assert np.allclose(v2, [0, 1j])

    def test_bracket_vector(self):
        v = parse_state_vector("[1/sqrt(2), -1/sqrt(2)]", [2])
        assert np.allclose(v, np.array([1, -1]) / np.sqrt(2))

    def test_out_of_range_ket(self):
        with pytest.raises(ParseError):
            parse_state_vector("|2>", [2])


class TestProofParsing:
    def test_kinds_and_params(self):
        text = """
        step e1 by QT.Refl with term = H(q)
          shows equation H(q) = H(q)
        step s1 by QL1 with formula = A(q); sigma = { B(q) }
          shows sequent A(q), B(q) |- A(q)
        step t1 from s1 by Ax.Sk with formula = A(q)
          shows triple { A(q) } skip { A(q) }
        """
        script = parse_proof(text)
        assert [s.step_id for s in script.steps] == ["e1", "s1", "t1"]
        assert isinstance(script.steps[0].judgment, EquationJudgment)
        assert isinstance(script.steps[1].judgment, SequentJudgment)
        assert isinstance(script.steps[2].judgment, TripleJudgment)
        assert script.steps[2].premises == ("s1",)
        assert script.steps[1].params["sigma"][0] == parse_formula("B(q)")

    def test_rule_name_with_separators(self):
        text = """
        step a by Hoare-Adaptation with delta = D(q); pvars = q; witness = I(q)
          shows triple { D(q) } skip { D(q) }
        """
        script = parse_proof(text)
        assert script.steps[0].rule == "Hoare-Adaptation"


ROUND_TRIP_TERMS = [
    "H(q)",
    "H^-1(q)",
    "0(q)",
    "M.0(q)",
    "Z(q1) H(q2) C(q1,q2) Y(q1) H(q2)",
    "H(q) (Z(q) X(q))",
    "H(q1) @ X(q2)",
    "H(q1) Z(q1) @ X(q2) H(q2)",
    "(H(q1) @ X(q2)) C(q1,q2)",
    "mix { 0.5: H(q), 0.5: X(q) }",
    "mix { 0.25: H(q) Z(q), 0.5: X(q) H(q) }",
    "I(q1) I(q2)",
]

ROUND_TRIP_FORMULAS = [
    "P0(q1)",
    "P(q1,q2)",
    "P0(H(q1))",
    "~P0(q1)",
    "~~P0(q1)",
    "P0(q1) /\\ P(q1,q2)",
    "P0(q1) \\/ P2(q2)",
    "P0(q1) -> P2(q2)",
    "(P0(q1) \\/ P2(q2)) /\\ P0(q1)",
    "P0(q1) \\/ P2(q2) \\/ P0(q1)",
    "P0(q1) /\\ (P2(q2) /\\ P0(q1))",
    "~(P0(q1) \\/ P2(q2))",
    "adj<H(q1)>(P0(q1))",
    "adj<Z(q1) Ebf(q1)>(~P0(q1))",
    "meas M.1(q1)",
    "forall q1 . P0(q1)",
    "forall q1 q2 . P(q1,q2)",
    "exists q1 . P0(q1)",
    "forall q1 . exists q2 . P(q1,q2)",
    "(forall q1 . P0(q1)) /\\ P2(q2)",
    "(P0(q1) -> P2(q2)) -> P0(q1)",
    "P0(q1) -> P2(q2) -> P0(q1)",
    "forall q1 . (P0(q1) /\\ P(q1,q2)) -> P(C(q1,q2))",
    "~(P0(q1) -> P2(q2))",
]

ROUND_TRIP_PROGRAMS = [
    "skip",
    "q := |0>",
    "q := H(q)",
    "q1,q2 := C(q1,q2)",
    "skip; skip",
    "q := |0>; q := H(q); q := X(q)",
    "if M[q] { 0 -> skip | 1 -> q := X(q) } fi",
    "while M[q] = 1 do q := H(q) od",
    "while M[q] = 1 do q := H(q); q := Z(q) od",
    "if M[q1] { 0 -> while M[q2] = 1 do skip od | 1 -> q1 := X(q1) } fi",
]


class TestRoundTrips:
    @pytest.mark.parametrize("text", ROUND_TRIP_TERMS)
    def test_terms(self, text):
        ast = parse_term(text)
        assert parse_term(term_to_text(ast)) == ast

    @pytest.mark.parametrize("text", ROUND_TRIP_FORMULAS)
    def test_formulas(self, text):
        ast = parse_formula(text)
        assert parse_formula(formula_to_text(ast)) == ast

    @pytest.mark.parametrize("text", ROUND_TRIP_PROGRAMS)
    def test_programs(self, text):
        ast = parse_program(text)
        assert parse_program(program_to_text(ast)) == ast

    def test_triple(self):
        text = "{ P0(q1) } q1 := H(q1); q1 := H(q1) { P0(q1) }"
        ast = parse_triple(text)
        assert parse_triple(triple_to_text(ast)) == ast

    def test_corpus_is_large_enough(self):
        assert len(ROUND_TRIP_TERMS) + len(ROUND_TRIP_FORMULAS) + len(ROUND_TRIP_PROGRAMS) >= 30

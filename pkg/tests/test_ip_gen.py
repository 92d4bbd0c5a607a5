import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from greenadopt.graph_core import (
    Graph,
    ThresholdProfile,
    complete_graph,
    derive_thresholds,
    gen_class1,
    gen_class2,
    gen_star,
    path_graph,
)
from greenadopt.ip_gen import (
    BINARY,
    INTEGER,
    ConstraintViolationError,
    IpSolution,
    LpFormatError,
    build_fd_bmc,
    build_fd_mcc,
    build_model,
    build_temp_bmc,
    build_temp_mcc,
    decode_and_verify,
    export_lp,
    ip_oracle,
    lp_text,
    parse_lp,
    parse_solution,
    read_lp,
    solution_from_subsidy,
)
from greenadopt.optimize import VARIANTS, PlanningProblem, solve_exact
from oracles import (
    CLASS2_N2_TEMPBMC_K1_IP,
    PATH4_FD2_X_VARS,
    PATH4_TEMPMCC_COUNTS,
    STAR4_FDBMC_D1_K1_IP,
    STAR4_TEMPBMC_K1_IP,
    random_instance,
)

HALF = Fraction(1, 2)


def path4():
    g = path_graph(4)
    return g, derive_thresholds(g, HALF)


def test_path4_counts():
    g, th = path4()
    m = build_temp_mcc(g, th)
    assert (len(m.variables), len(m.constraints)) == PATH4_TEMPMCC_COUNTS
    assert m.horizon == 8
    fd = build_fd_mcc(g, th, 2)
    assert sum(1 for v in fd.variables if v.name.startswith("x")) == PATH4_FD2_X_VARS
    assert fd.horizon == 12


def test_count_formulas():
    rng = random.Random(3)
    for _ in range(20):
        g, th = random_instance(rng, 2, 8, b_mode="wide")
        n, e = g.node_count, g.edge_count
        from greenadopt.dynamics import intransigence_closure

        t = n - len(intransigence_closure(g, th))
        m = build_temp_mcc(g, th)
        assert len(m.variables) == 1 + n + n * (2 * n + 1)
        assert len(m.constraints) == 1 + n * (2 * n + 1) + t
        d = rng.randint(1, 3)
        h = d + 2 * e + n
        f = build_fd_mcc(g, th, d)
        assert len(f.variables) == 1 + n + n * (h + 1)
        assert len(f.constraints) == 1 + n * (h + 1) + 2 * t
        bm = build_fd_bmc(g, th, d, 1)
        assert len(bm.variables) == n + n * (h + 1)
        assert len(bm.constraints) == 1 + n * (h + 1)


def test_variable_order_and_kinds():
    g, th = path4()
    m = build_temp_mcc(g, th)
    names = m.variable_names
    assert names[:5] == ["q", "y0", "y1", "y2", "y3"]
    assert names[5:8] == ["x0_0", "x0_1", "x0_2"]
    assert m.variables[0].kind == INTEGER
    assert all(v.kind == BINARY for v in m.variables[1:])
    weighted = build_temp_mcc(g, th, costs=(1, HALF, 1, 1))
    assert weighted.variables[0].kind == "continuous"


def test_closure_nodes_have_no_final_rows():
    g = Graph.from_edges(3, [(0, 1)])
    th = ThresholdProfile.from_counts([1, 1, 1])
    m = build_temp_mcc(g, th)
    finals = [c.name for c in m.constraints if c.name.startswith("final")]
    assert finals == ["final_0_6", "final_1_6"]


def test_zero_threshold_rows():
    g = Graph.from_edges(3, [(0, 1)])
    th = derive_thresholds(g, HALF)
    m = build_temp_bmc(g, th, 0)
    rows = [c for c in m.constraints if c.name.startswith(("sub_2", "free_2"))]
    assert all(len(c.terms) == 1 and c.rhs == 1 for c in rows)


def test_scaled_row_format():
    g = Graph.from_edges(5, [(1, 0), (1, 2), (1, 3), (4, 0)])
    th = ThresholdProfile.from_counts([1, 3, 1, 1, 1])
    text = lp_text(build_temp_mcc(g, th))
    assert " sub_1_5: 3 x1_5 - x0_4 - x2_4 - x3_4 - 3 y1 <= 0" in text
    assert " free_1_6: 3 x1_6 - x0_5 - x2_5 - x3_5 <= 0" in text


def test_lp_sections_in_order():
    g, th = path4()
    text = lp_text(build_temp_mcc(g, th))
    heads = [ln for ln in text.splitlines() if ln and not ln[0].isspace()]
    assert heads == ["Minimize", "Subject To", "Bounds", "Generals", "Binaries", "End"]
    text = lp_text(build_fd_bmc(g, th, 1, 1))
    heads = [ln for ln in text.splitlines() if ln and not ln[0].isspace()]
    assert heads == ["Maximize", "Subject To", "Binaries", "End"]
    assert "0.5 x0_10" in text


def test_lp_lines_wrapped():
    g = complete_graph(12)
    th = derive_thresholds(g, HALF)
    assert max(len(ln) for ln in lp_text(build_temp_mcc(g, th)).splitlines()) <= 90


def test_export_is_byte_identical(tmp_path):
    g, th = gen_class1(3)
    m = build_fd_mcc(g, th, 2)
    export_lp(m, tmp_path / "a.lp")
    export_lp(build_fd_mcc(g, th, 2), tmp_path / "b.lp")
    assert (tmp_path / "a.lp").read_bytes() == (tmp_path / "b.lp").read_bytes()


@pytest.mark.parametrize("scaled", [True, False])
def test_round_trip_path2(tmp_path, scaled):
    g = path_graph(2)
    th = derive_thresholds(g, HALF)
    m = build_temp_mcc(g, th)
    export_lp(m, tmp_path / "m.lp", scaled=scaled)
    back = read_lp(tmp_path / "m.lp")
    assert back.variable_names == m.variable_names
    assert [c.name for c in back.constraints] == [c.name for c in m.constraints]


def test_decimal_mode_round_trips_exactly():
    g = complete_graph(4)
    th = ThresholdProfile.from_counts([3, 3, 3, 7])
    m = build_temp_mcc(g, th, costs=(Fraction(1, 3), 1, 2, Fraction(5, 7)))
    back = parse_lp(lp_text(m, scaled=False))
    assert [c.terms for c in back.constraints] == [c.terms for c in m.constraints]
    assert all(
        all(c.denominator == 1 for c, _ in con.terms) for con in parse_lp(lp_text(m)).constraints
    )


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("Subject To\n c: x <= 1\nEnd\n", "start with"),
        ("Minimize\n obj: x\nSubject To\n c: x <= 1\n", "missing End"),
        ("Minimize\n obj: x\nSubject To\n c: x <= 1\nBinaries\n x\nBounds\n x >= 0\nEnd\n", "out of order"),
        ("Minimize\n obj: x\nSubject To\n c: x + <= 1\nBinaries\n x\nEnd\n", "dangling"),
        ("Minimize\n obj: x\nSubject To\n c: x y <= 1\nBinaries\n x y\nEnd\n", "operator"),
        ("Minimize\n obj: x\nSubject To\n x <= 1\nBinaries\n x\nEnd\n", "name:"),
        ("Minimize\n obj: x\nSubject To\n c: x <= 1\nEnd\n", "never declared"),
        ("Minimize\n obj: x\nSubject To\n c: x <= 1\nBinaries\n x x\nEnd\n", "twice"),
        ("Minimize\n obj: x\nSubject To\nc: x <= 1\nBinaries\n x\nEnd\n", "indented"),
    ],
)
def test_parser_is_strict(text, fragment):
    with pytest.raises(LpFormatError) as info:
        parse_lp(text)
    assert fragment in str(info.value)


def test_scaled_reimport_same_verdicts():
    rng = random.Random(17)
    g, th = path4()
    m = build_temp_mcc(g, th)
    back = parse_lp(lp_text(m))
    names = m.variable_names
    for _ in range(100):
        vals = {v: Fraction(rng.randint(0, 1)) for v in names}
        vals["q"] = Fraction(rng.randint(0, 4))
        assert m.is_feasible(vals) == back.is_feasible(vals)


# oracle


def test_known_optima():
    g, th = gen_star(4)
    assert ip_oracle(build_fd_bmc(g, th, 1, 1))[0] == STAR4_FDBMC_D1_K1_IP
    assert ip_oracle(build_temp_bmc(g, th, 1))[0] == STAR4_TEMPBMC_K1_IP
    assert ip_oracle(build_fd_mcc(g, th, 1))[0] == 3
    g2, th2 = gen_class2(2)
    assert ip_oracle(build_temp_bmc(g2, th2, 1))[0] == CLASS2_N2_TEMPBMC_K1_IP
    g1, th1 = gen_class1(2)
    assert ip_oracle(build_temp_mcc(g1, th1))[0] == 1
    assert ip_oracle(build_temp_bmc(*path4(), 0))[0] == 0


def test_oracle_matches_solve_exact():
    rng = random.Random(8)
    for _ in range(12):
        g, th = random_instance(rng, 2, 7, b_mode="wide")
        n = g.node_count
        for v in VARIANTS:
            d = rng.randint(1, 3) if v.startswith("fd") else None
            k = rng.randint(0, n) if v.endswith("BMC") else None
            exact = solve_exact(PlanningProblem(v, g, th, d=d, k=k)).objective
            if v.endswith("BMC"):
                exact *= n
            assert ip_oracle(build_model(v, g, th, d=d, k=k))[0] == exact


# verification


def test_verify_hand_solution():
    g, th = path4()
    m = build_temp_mcc(g, th)
    sol = solution_from_subsidy(m, g, th, [0])
    assert sol.values["q"] == 1
    rep = decode_and_verify(m, sol, g, th, reference=1)
    assert rep.feasible and rep.lag_audit
    assert rep.simulated_adoption == 1
    text = rep.text()
    assert "feasible: yes" in text and "simulated_adoption: 1/1" in text
    assert "lag_audit: pass" in text and "reference_match: yes" in text


def test_verify_rejects_unsupported_jump():
    g, th = path4()
    m = build_temp_mcc(g, th)
    vals = dict(solution_from_subsidy(m, g, th, [0]).values)
    vals["x3_1"] = Fraction(1)
    with pytest.raises(ConstraintViolationError) as info:
        decode_and_verify(m, IpSolution(vals), g, th)
    assert info.value.row == "sub_3_1"


def test_verify_lagged_bmc_solution():
    g, th = path4()
    m = build_temp_bmc(g, th, 1)
    rep = decode_and_verify(m, IpSolution({"y2": Fraction(1)}), g, th)
    assert rep.objective == 0 and rep.lag_audit
    assert rep.simulated_adoption == 1


def test_verify_rounds_near_binary_and_rejects_fractional():
    g, th = path4()
    m = build_temp_bmc(g, th, 1)
    rep = decode_and_verify(m, IpSolution({"y0": Fraction(999_9999, 10**7)}), g, th)
    assert rep.subsidy_set == (0,)
    with pytest.raises(ConstraintViolationError):
        decode_and_verify(m, IpSolution({"y0": HALF}), g, th)
    with pytest.raises(ConstraintViolationError):
        decode_and_verify(m, IpSolution({"zz": Fraction(1)}), g, th)


def test_verify_flags_incomplete_mcc():
    # finals are part of the rows, so a wrong MCC answer is caught as a violation
    g, th = path4()
    m = build_temp_mcc(g, th)
    with pytest.raises(ConstraintViolationError) as info:
        decode_and_verify(m, IpSolution({"q": Fraction(0)}), g, th)
    assert info.value.row.startswith("final_")


def test_parse_solution():
    sol = parse_solution("# comment\ny0 1\nx0_0 0.9999999\nobjective 2\n")
    assert sol.values["y0"] == 1 and sol.objective == 2
    with pytest.raises(LpFormatError):
        parse_solution("y0\n")
    with pytest.raises(LpFormatError):
        parse_solution("y0 1\ny0 0\n")
    with pytest.raises(LpFormatError):
        parse_solution("y0 abc\n")


@st.composite
def small_models(draw):
    n = draw(st.integers(1, 5))
    pairs = list(itertools.combinations(range(n), 2))
    edges = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    g = Graph.from_edges(n, edges)
    b = [draw(st.integers(0, g.degree(i) + 1)) for i in range(n)]
    th = ThresholdProfile.from_counts(b)
    variant = draw(st.sampled_from(VARIANTS))
    d = draw(st.integers(1, 3))
    k = draw(st.integers(0, n))
    return g, th, variant, d, k


@settings(max_examples=60, deadline=None)
@given(small_models(), st.randoms(use_true_random=False))
def test_feasible_assignments_never_overstate(inst, rnd):
    g, th, variant, d, k = inst
    m = build_model(variant, g, th, d=d, k=k)
    # random subsidy set, simulated fill, then randomly lag some x variables down
    subsidy = [i for i in range(g.node_count) if rnd.random() < 0.4]
    if variant.endswith("BMC"):
        subsidy = subsidy[:k]
    sol = solution_from_subsidy(m, g, th, subsidy)
    vals = dict(sol.values)
    for name in vals:
        if name.startswith("x") and rnd.random() < 0.2:
            vals[name] = Fraction(0)
    if not m.is_feasible(vals):
        return
    rep = decode_and_verify(m, IpSolution(vals), g, th)
    assert rep.lag_audit


@settings(max_examples=40, deadline=None)
@given(small_models(), st.randoms(use_true_random=False))
def test_scaled_export_preserves_verdicts(inst, rnd):
    g, th, variant, d, k = inst
    m = build_model(variant, g, th, d=d, k=k)
    back = parse_lp(lp_text(m))
    for con in back.constraints:
        assert all(c.denominator == 1 for c, _ in con.terms)
    for _ in range(5):
        vals = {v: Fraction(rnd.randint(0, 1)) for v in m.variable_names}
        if "q" in vals:
            vals["q"] = Fraction(rnd.randint(0, g.node_count))
        assert m.is_feasible(vals) == back.is_feasible(vals)

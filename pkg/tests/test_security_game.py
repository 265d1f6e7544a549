import json
import time

import numpy as np
import pytest

from gridsec.security_game import (AssumptionError, BimatrixGame, Case, SecurityGamePayoffs, build_game,
                                   case2_condition, classify_case, delta, deviation_gains, ids_game,
                                   ids_parameters, mixed_ne, monitoring_probability_report,
                                   payoffs_from_stats, pure_ne, read_game_record, restrict_to_ids,
                                   sample_payoffs, write_game_record)

from oracle import defender_equilibrium_mask, matches

MIRROR = SecurityGamePayoffs(c_mon=10, c_def=20, l_att_weak=1.7, l_att_strong=35.7,
                             c_att_weak=1.6, c_att_strong=10)
CASE1 = SecurityGamePayoffs(c_mon=1, c_def=2, l_att_weak=5, l_att_strong=6, c_att_weak=1, c_att_strong=3)


def test_table_layout_mirror_instance():
    g = build_game(MIRROR)
    assert g.A[1].tolist() == pytest.approx([-1.7, -35.7, 0.0])
    assert g.B[:, 1].tolist() == pytest.approx([-10.0, 25.7])
    assert g.A[0].tolist() == pytest.approx([-11.7, -30.0, -10.0])
    assert g.B[:, 0].tolist() == pytest.approx([0.1, 0.1])


def test_zero_payoffs_give_zero_matrices():
    g = build_game(SecurityGamePayoffs(0, 0, 0, 0, 0, 0))
    assert not g.A.any() and not g.B.any()


def test_ids_restriction_matches_ids_table():
    g = restrict_to_ids(build_game(MIRROR))
    ref = ids_game(**ids_parameters(MIRROR))
    assert np.array_equal(g.A, ref.A) and np.array_equal(g.B, ref.B)
    assert g.col_labels == ("att", "-att")


def test_ids_game_closed_form_mixed_equilibrium():
    k = ids_parameters(MIRROR)
    eqs = mixed_ne(ids_game(**k))
    assert len(eqs) == 1 and eqs[0].kind == "mixed"
    p = k["beta_s"] / (k["beta_s"] + k["beta_c"])
    q = k["alpha_f"] / (k["alpha_c"] + k["alpha_f"] + k["alpha_m"])
    assert eqs[0].defender[0] == pytest.approx(p, abs=1e-12)
    assert eqs[0].attacker[0] == pytest.approx(q, abs=1e-12)


def test_delta_examples():
    assert delta(MIRROR) == pytest.approx(-25.6)
    assert delta(CASE1) == pytest.approx(1.0)
    assert delta(SecurityGamePayoffs(1, 1, 5, 8, 1, 4)) == 0


def test_case_classification():
    assert classify_case(MIRROR) is Case.CASE2
    assert classify_case(CASE1) is Case.CASE1
    assert classify_case(SecurityGamePayoffs(1, 1, 5, 8, 1, 4)) is Case.CASE3


@pytest.mark.parametrize("p, name", [
    (SecurityGamePayoffs(1, 1, 5, 8, 6, 7), "weak_attack_profitable"),
    (SecurityGamePayoffs(1, 1, 5, 8, 2, 1), "strong_attack_costlier"),
    (SecurityGamePayoffs(1, 1, 9, 8, 2, 3), "strong_attack_more_damaging"),
    (SecurityGamePayoffs(5, 4, 2, 8, 1, 3), "prevention_cheaper_than_damage"),
    (SecurityGamePayoffs(1, 1, 2, 8, 1, 9), "strong_attack_profitable"),
    (SecurityGamePayoffs(0, 1, 2, 8, 1, 3), "positive_monitoring_cost"),
])
def test_violations_are_named(p, name):
    with pytest.raises(AssumptionError) as exc:
        classify_case(p)
    assert name in [n for n, _ in exc.value.violated]


def test_case1_pure_equilibrium():
    eqs = pure_ne(build_game(CASE1))
    assert len(eqs) == 1
    e = eqs[0]
    assert e.kind == "pure-strict" and e.pure_labels() == ("-mon", "att°")
    assert (e.payoff_defender, e.payoff_attacker) == pytest.approx((-5.0, 4.0))
    assert [x.kind for x in mixed_ne(build_game(CASE1))] == ["pure-strict"]


def test_mirror_has_no_pure_equilibrium():
    assert pure_ne(build_game(MIRROR)) == []


def test_zero_game_all_cells_non_strict():
    g = BimatrixGame(np.zeros((2, 3)), np.zeros((2, 3)))
    eqs = pure_ne(g)
    assert len(eqs) == 6 and {e.kind for e in eqs} == {"pure-non-strict"}


def test_table_v_mixed_equilibrium():
    start = time.perf_counter()
    p = payoffs_from_stats(0.357, 1.0, 0.017, 0.16, 100, 10, c_mon=10, c_def=20)
    eqs = [e for e in mixed_ne(build_game(p)) if e.kind == "mixed"]
    assert len(eqs) == 1
    e = eqs[0]
    # hand oracle: the attacker is indifferent between weak and strong when
    # p_mon * (-c) + (1 - p_mon) * (l - c) = l_weak - c_weak
    p_mon = (35.7 - 10 - 0.1) / 35.7
    # the defender is indifferent when q * (-c_mon - l_w) + (1-q)(-c_mon - c_def) = q * (-l_w) + (1-q)(-l)
    q = (35.7 - 10 - 20) / (35.7 - 20)
    assert e.defender == pytest.approx([p_mon, 1 - p_mon], abs=1e-12)
    assert e.attacker == pytest.approx([q, 1 - q, 0.0], abs=1e-12)
    assert e.defender[0] == pytest.approx(0.717, abs=1e-3)
    assert e.attacker[0] == pytest.approx(0.363, abs=1e-3)
    assert (100 * e.joint[:, :2]).ravel() == pytest.approx([26.0, 45.7, 10.3, 18.0], abs=0.1)
    assert time.perf_counter() - start < 1.0


def test_certificates_hold_for_every_profile():
    for g in (build_game(MIRROR), build_game(CASE1), ids_game(**ids_parameters(MIRROR))):
        for e in mixed_ne(g):
            assert e.defender_gain <= 1e-9 and e.attacker_gain <= 1e-9
            assert e.defender.sum() == pytest.approx(1.0, abs=1e-12)
            assert e.attacker.sum() == pytest.approx(1.0, abs=1e-12)
            assert e.defender.min() >= 0 and e.attacker.min() >= 0


def test_payoffs_from_stats_examples():
    m = payoffs_from_stats(0.357, 1.0, 0.017, 0.16, 100, 10)
    assert (m.l_att_strong, m.l_att_weak, m.c_att_strong, m.c_att_weak) == pytest.approx((35.7, 1.7, 10, 1.6))
    s = payoffs_from_stats(0.255, 1.0, 0.008, 0.16, 100, 10)
    assert (s.l_att_strong, s.l_att_weak, s.c_att_strong, s.c_att_weak) == pytest.approx((25.5, 0.8, 10, 1.6))
    z = payoffs_from_stats(0.357, 1.0, 0.017, 0.16, 0, 10)
    assert z.l_att_strong == 0 and z.l_att_weak == 0
    with pytest.raises(ValueError):
        payoffs_from_stats(0.3, 1.5, 0.1, 0.1, 100, 10)


def test_cost_ratio_condition():
    c = case2_condition(0.357, 1.0, 0.017, 0.16, 10, 100)
    assert c.lhs == pytest.approx(0.34 / 0.84, abs=1e-12)
    assert c.weak_bound == pytest.approx(0.017 / 0.16, abs=1e-12)
    assert c.weak_bound == pytest.approx(0.11, abs=0.005)
    assert c.holds and c.weak_bound_holds
    assert case2_condition(0.2, 1.0, 0.2, 0.16, 10, 100).lhs == 0
    assert not case2_condition(0.357, 1.0, 0.017, 0.16, 50, 100).holds
    with pytest.raises(ValueError):
        case2_condition(0.3, 0.5, 0.1, 0.5, 10, 100)


def test_condition_agrees_with_delta_sign():
    rng = np.random.default_rng(0)
    for _ in range(500):
        gs, gw = rng.uniform(0.05, 0.6), rng.uniform(0.001, 0.05)
        rs, rw = rng.uniform(0.5, 1.0), rng.uniform(0.01, 0.4)
        lam, kappa = 100.0, rng.uniform(1, 60)
        p = payoffs_from_stats(gs, rs, gw, rw, lam, kappa, 1.0, 0.0)
        if abs(delta(p)) < 1e-9:
            continue
        assert case2_condition(gs, rs, gw, rw, kappa, lam).holds == (delta(p) < 0)


def _oracle_ok(game, eqs):
    ok, msg = matches(game.A, game.B, [e.defender[0] for e in eqs])
    return ok, msg


@pytest.mark.parametrize("case", list(Case))
def test_propositions_against_oracle(case):
    rng = np.random.default_rng({"case1": 1, "case2": 2, "case3": 3}[case.value])
    for _ in range(1000):
        p = sample_payoffs(case, rng)
        assert classify_case(p) is case
        g = build_game(p)
        pure = pure_ne(g)
        eqs = mixed_ne(g)
        for e in eqs:
            assert max(deviation_gains(g, e.defender, e.attacker)) <= 1e-9 * p.scale
        if case is Case.CASE1:
            assert len(pure) == 1 and pure[0].kind == "pure-strict"
            assert pure[0].pure_labels() == ("-mon", "att°")
            assert (pure[0].payoff_defender, pure[0].payoff_attacker) == pytest.approx(
                (-p.l_att_weak, p.l_att_weak - p.c_att_weak))
            assert len(eqs) == 1
        elif case is Case.CASE2:
            assert pure == []
            mixed = [e for e in eqs if e.kind == "mixed"]
            assert mixed and all(e.attacker[2] == 0 for e in mixed)
        else:
            labels = {e.pure_labels(): e.kind for e in pure}
            assert labels.get(("-mon", "att°")) == "pure-non-strict"
        if case is not Case.CASE3:
            ok, msg = _oracle_ok(g, eqs)
            assert ok, msg


def test_case3_oracle_contains_the_pure_point():
    rng = np.random.default_rng(33)
    for _ in range(50):
        g = build_game(sample_payoffs(Case.CASE3, rng))
        p, ok = defender_equilibrium_mask(g.A, g.B)
        assert ok[0]


@pytest.mark.parametrize("shape", [(2, 2), (2, 3)])
def test_solver_matches_brute_force_on_integer_games(shape):
    rng = np.random.default_rng(sum(shape))
    labels = ("a", "b", "c")[: shape[1]]
    for _ in range(400):
        A = rng.integers(-3, 4, shape).astype(float)
        B = rng.integers(-3, 4, shape).astype(float)
        g = BimatrixGame(A, B, ("r0", "r1"), labels)
        eqs = mixed_ne(g)
        assert eqs, "every finite game has an equilibrium"
        for e in eqs:
            assert e.defender_gain <= 1e-9 * max(1, np.abs(A).max()) and e.attacker_gain <= 1e-9 * max(1, np.abs(B).max())
        ok, msg = _oracle_ok(g, eqs)
        assert ok, (A.tolist(), B.tolist(), msg)


@pytest.mark.parametrize("c", [1e-3, 0.5, 7.0, 1e4])
def test_scale_invariance(c):
    rng = np.random.default_rng(8)
    for case in Case:
        g = build_game(sample_payoffs(case, rng))
        base = mixed_ne(g)
        scaled = mixed_ne(g.scaled(c))
        assert len(base) == len(scaled)
        for a, b in zip(base, scaled):
            assert np.allclose(a.defender, b.defender, atol=1e-9, rtol=0)
            assert np.allclose(a.attacker, b.attacker, atol=1e-9, rtol=0)
            assert a.kind == b.kind


def test_record_round_trip():
    text = write_game_record(MIRROR)
    assert read_game_record(text) == MIRROR
    assert read_game_record("# comment\n" + text.replace(" = ", "=")) == MIRROR
    with pytest.raises(ValueError):
        read_game_record(text.replace("c_mon", "c_monitor"))
    with pytest.raises(ValueError):
        read_game_record("c_mon = 1\n")


def test_profile_json_is_serialisable():
    e = [x for x in mixed_ne(build_game(MIRROR)) if x.kind == "mixed"][0]
    d = json.loads(json.dumps(e.to_dict(), ensure_ascii=False))
    assert d["defender"]["mon"] == pytest.approx(0.717, abs=1e-3)
    assert set(d["certificate"]) == {"defender_max_gain", "attacker_max_gain"}


def test_monitoring_probability_report_shape():
    rep = monitoring_probability_report(50, np.random.default_rng(0))
    assert rep["equilibria"] >= 50
    assert 0 <= rep["share_at_or_above"] <= 1

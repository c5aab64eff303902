"""Accessible-set generation: fast rule, reference rule, closed forms."""

import numpy as np
import pytest

from conftest import cases_fitting
from pauliaccess import (
    AccessibleSet,
    PauliString,
    chain_closed_form,
    exchange_digamma,
    generate,
    generate_reference,
    parse_term,
)
from pauliaccess.closure import (
    accessible_set_from_json,
    accessible_set_to_json,
)


def texts(g: AccessibleSet):
    return [s.to_text() for s in g.members]


def test_generate_case_a_n3():
    g = generate(exchange_digamma(3), [parse_term("X1", 3)])
    assert texts(g) == ["X1", "Z1 Y2", "Z1 Z2 X3"]


def test_generate_case_b_n2():
    g = generate(exchange_digamma(2), [parse_term("Z1", 2)])
    assert texts(g) == ["Z1", "Y1 X2", "X1 Y2", "Z2"]


def test_generate_fixpoint_is_returned_unchanged():
    dig = exchange_digamma(2)
    fix = generate(dig, [parse_term("Z1", 2)])
    again = generate(dig, list(fix.members))
    assert texts(again) == texts(fix)


def test_generate_provenance_parents_precede():
    g = generate(exchange_digamma(5), [parse_term("Y1 Z2", 5)])
    for i, p in enumerate(g.provenance):
        if p is None:
            continue
        parent, edge = p
        assert parent < i
        assert not edge.is_identity


def test_generate_rejects_empty_seeds():
    with pytest.raises(ValueError):
        generate(exchange_digamma(2), [])


def test_generate_rejects_mixed_widths():
    with pytest.raises(ValueError):
        generate(exchange_digamma(2), [parse_term("X1", 3)])


def test_generate_threads_match_serial():
    dig = exchange_digamma(6)
    seed = [parse_term("Y1 Z2", 6)]
    serial = generate(dig, seed)
    for threads in (2, 4):
        parallel = generate(dig, seed, threads=threads)
        assert texts(parallel) == texts(serial)
        assert parallel.provenance == serial.provenance


def test_generate_deterministic_across_runs():
    dig = exchange_digamma(5)
    seed = [parse_term("X1 Y2 Z3", 5)]
    a, b = generate(dig, seed), generate(dig, seed)
    assert texts(a) == texts(b)


# ---------------------------------------------------------------------------
# reference oracle


def test_reference_matches_fast_n2_case_b():
    dig = exchange_digamma(2)
    seed = [parse_term("Z1", 2)]
    assert generate(dig, seed).member_keys() == generate_reference(
        dig, seed
    ).member_keys()


def test_reference_trivial_width_one():
    g = generate_reference([], [parse_term("X1", 1)])
    assert texts(g) == ["X1"]


def test_reference_matches_fast_n3_seed_y1z2():
    dig = exchange_digamma(3)
    seed = [parse_term("Y1 Z2", 3)]
    assert generate(dig, seed).member_keys() == generate_reference(
        dig, seed
    ).member_keys()


def test_reference_refuses_large_width():
    with pytest.raises(ValueError):
        generate_reference(exchange_digamma(5), [parse_term("Z1", 5)])


def test_reference_equivalence_all_cases_small_n():
    for n in (2, 3):
        dig = exchange_digamma(n)
        for name, seed in cases_fitting(n).items():
            fast = generate(dig, [seed])
            ref = generate_reference(dig, [seed])
            assert fast.member_keys() == ref.member_keys(), (n, name)


# ---------------------------------------------------------------------------
# chain closed forms


def test_closed_form_n3_m1_x():
    cf = chain_closed_form(3, 1, "X")
    assert texts(cf) == ["X1", "Z1 Y2", "Z1 Z2 X3"]


def test_closed_form_extends_down_the_chain():
    # bracketing also walks below the seed site, so the ladder spans 1..N
    cf = chain_closed_form(4, 3, "X")
    assert texts(cf) == ["X1", "Z1 Y2", "Z1 Z2 X3", "Z1 Z2 Z3 Y4"]


def test_closed_form_alternation_and_seed_site():
    cf = chain_closed_form(6, 2, "Y")
    assert texts(cf)[1] == "Z1 Y2"
    for s, member in enumerate(cf.members, 1):
        assert member.highest_site() == s
        letter = member.cell(s)
        assert letter == ("Y" if (s - 2) % 2 == 0 else "X")


def test_closed_form_rejects_bad_inputs():
    with pytest.raises(ValueError):
        chain_closed_form(3, 0, "X")
    with pytest.raises(ValueError):
        chain_closed_form(3, 4, "X")
    with pytest.raises(ValueError):
        chain_closed_form(3, 1, "Q")


def test_closed_form_equals_generate_sweep():
    for n in range(2, 13):
        dig = exchange_digamma(n)
        for m in range(1, n + 1):
            for axis in ("X", "Y"):
                seed = PauliString.from_cells(
                    n, {**{j: "Z" for j in range(1, m)}, m: axis}
                )
                cf = chain_closed_form(n, m, axis)
                g = generate(dig, [seed])
                assert cf.member_keys() == g.member_keys(), (n, m, axis)


# ---------------------------------------------------------------------------
# structural properties


def test_monotone_in_digamma_prefixes():
    # closing with a longer chain prefix can only add members
    n = 6
    seed = [parse_term("Z1", n)]
    dig = exchange_digamma(n)
    prev = set()
    for links in range(1, n):
        prefix = [nu for nu in dig if nu.highest_site() <= links + 1]
        cur = set(generate(prefix, seed).member_keys())
        assert prev <= cur
        prev = cur


def test_single_member_regeneration_case_d_n5():
    dig = exchange_digamma(5)
    g = generate(dig, [parse_term("Y1 Z2", 5)])
    keys = g.member_keys()
    for member in g.members:
        assert generate(dig, [member]).member_keys() == keys


def test_case_d_counts():
    for n in range(2, 11):
        g = generate(exchange_digamma(n), [parse_term("Y1 Z2", n)])
        assert len(g) == (n**3 - n**2) // 2, n


def test_case_b_counts_are_squares():
    for n in range(2, 9):
        g = generate(exchange_digamma(n), [parse_term("Z1", n)])
        assert len(g) == n * n


# ---------------------------------------------------------------------------
# serialization


def test_set_json_round_trip():
    g = generate(exchange_digamma(3), [parse_term("Z1", 3)])
    back = accessible_set_from_json(accessible_set_to_json(g))
    assert texts(back) == texts(g)
    assert back.provenance == g.provenance


def test_set_text_format():
    g = generate(exchange_digamma(2), [parse_term("Z1", 2)])
    assert g.to_text() == "Z1\nY1 X2\nX1 Y2\nZ2\n"

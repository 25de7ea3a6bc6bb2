import itertools
import json
from fractions import Fraction

import pytest

import sawlab


def brute_saws(d, n):
    """All n-step self-avoiding walks by filtering every nearest-neighbour walk."""
    out = []
    for codes in itertools.product(range(2 * d), repeat=n):
        at = (0,) * d
        seen = {at}
        ok = True
        for c in codes:
            v = list(at)
            v[c // 2] += 1 if c % 2 == 0 else -1
            at = tuple(v)
            if at in seen:
                ok = False
                break
            seen.add(at)
        if ok:
            out.append(list(codes))
    return out


def test_counts_match_brute_force():
    for d, n_max in ((2, 6), (3, 4)):
        for n in range(n_max + 1):
            assert sawlab.count_saws(d, n) == len(brute_saws(d, n))
    assert sawlab.count_saws(5, 3) == 810


def test_listing_is_canonical():
    assert sawlab.list_saws(2, 4) == brute_saws(2, 4)


def test_enumerator_conditioned_counts():
    e = sawlab.Enumerator(workers=1)
    walks = brute_saws(2, 5)
    assert e.count_extensions(2, 5, [0, 2]) == sum(w[:2] == [0, 2] for w in walks)
    assert e.count_two_sided(2, 2, 3) == e.count(2, 5)
    rows = e.table(5, 2)
    assert rows[1]["nonintersection"] == Fraction(9, 10)


def test_big_counts_are_python_ints():
    n = sawlab.count_saws(2, 12)
    assert isinstance(n, int) and n > 2**17


def test_path_operations_and_errors():
    assert sawlab.validate([0, 2, 1], 2) == [0, 2, 1]
    with pytest.raises(sawlab.NotSelfAvoiding):
        sawlab.validate([0, 1], 2)
    with pytest.raises(sawlab.SawError):
        sawlab.validate([0, 9], 2)
    assert not sawlab.escapes([1], [0], 2)
    assert sawlab.shift([0, 2, 0], 1, 2) == [2, 0]
    assert sawlab.pattern_density([0, 2, 0, 2], [0, 2], 2) == Fraction(1, 2)
    assert sawlab.endpoint([0, 0, 3], 2) == [2, -1]


def test_sampler_is_reproducible_and_self_avoiding():
    s = sawlab.Sampler(3, seed=5)
    a = s.sample_many(30, 20, workers=1)
    b = s.sample_many(30, 20, workers=2)
    assert a == b
    for w in a:
        assert sawlab.validate(w, 3) == w
    w = s.sample_prefix_conditioned(10, [0, 2], index=3)
    assert w[:2] == [0, 2]
    tail = s.sample_escaping(6, [0, 2], index=4)
    assert sawlab.escapes(tail, [0, 2], 3)


def test_sampler_covers_saw_2():
    s = sawlab.Sampler(2, seed=1)
    seen = {tuple(w) for w in s.sample_many(2, 2000, workers=1)}
    assert seen == {tuple(w) for w in brute_saws(2, 2)}


def test_fixed_point_n1_is_uniform():
    fp = sawlab.fixed_point(5, 1)
    assert fp["Z"] == pytest.approx(9, abs=1e-9)
    assert fp["probabilities"] == pytest.approx([0.1] * 10, abs=1e-12)
    assert fp["residual"] <= 1e-10


def test_coupling_identical_prefixes_never_fail():
    s = sawlab.Sampler(5, seed=2)
    sched = sawlab.geometric_schedule(1, 3)
    assert sched[0] == 1 and sched == sorted(sched)
    trace = sawlab.couple(s, [0], [0], sched, index=0)
    assert all(r["success"] for r in trace["per_iter"])
    assert trace["first"] == trace["second"]
    levels = sawlab.decoupling_stats(s, [0], [2], sched, 200, workers=1)
    assert len(levels) == len(sched) - 1


def test_pattern_means():
    for n in range(1, 6):
        assert sawlab.exact_mean_density(2, n, [0]) == Fraction(1, 4)
    mean, var, (lo, hi) = sawlab.mc_density(sawlab.Sampler(5, seed=3), 20, [0], 500, workers=1)
    assert lo <= 0.1 + 0.02 and hi >= 0.1 - 0.02


def test_verify_and_cli(tmp_path):
    assert all(passed for _, passed, _ in sawlab.verify(2, 5))
    code, out, err = sawlab.run_command(
        ["count", "-d", "5", "-n", "3", "--out", str(tmp_path / "out"), "--cache", str(tmp_path / "c.jsonl")]
    )
    assert (code, out) == (0, "810\n")
    line = json.loads((tmp_path / "c.jsonl").read_text().splitlines()[0])
    assert line["count"] == "810"
    code, _, _ = sawlab.run_command(["count", "-d", "2", "-n", "40", "--node-limit", "100",
                                     "--out", str(tmp_path / "out"), "--cache", str(tmp_path / "c.jsonl")])
    assert code == 2

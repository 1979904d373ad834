import json
import random

import pytest

from berkdyn import verify
from berkdyn.dyn import analyze, tameness_report
from berkdyn.errors import InputError
from berkdyn.report import to_json


def test_instances_do_not_depend_on_batch_size():
    small = verify.run_suite("ratio", count=3, seed=5)
    large = verify.run_suite("ratio", count=6, seed=5)
    assert small == large[: len(small)]


def test_jobs_do_not_change_output():
    serial = verify.run("distortion", count=20, seed=2, jobs=1)
    pooled = verify.run("distortion", count=20, seed=2, jobs=2)
    assert to_json(serial) == to_json(pooled)


def test_seeds_give_different_instances():
    a = verify.run_suite("distortion", count=4, seed=0)
    b = verify.run_suite("distortion", count=4, seed=1)
    assert [r["detail"] for r in a] != [r["detail"] for r in b]


@pytest.mark.parametrize("suite", verify.SUITES)
def test_small_suites_pass(suite):
    records = verify.run_suite(suite, count=8, seed=13)
    assert records and all(r["passed"] for r in records)


def test_generated_polynomials_have_the_advertised_type():
    for i in range(30):
        f = verify.nontame_polynomial(random.Random(i))
        assert f.degree >= f.field.prime and tameness_report(f) == "nontame"
        f, r = verify.repelling_quadratic(random.Random(i))
        ctx = analyze(f, anchor=r)
        assert f(f.field.element(r)).to_fraction() == r
        assert f.derivative()(f.field.element(r)).log_abs > 0 and ctx.tame == "tame"


def test_cycle_measures_are_invariant():
    for i in range(20):
        for tame in (True, False):
            ctx, mu = verify.good_reduction_cycle(random.Random(i), tame)
            mu.check_invariant(ctx)
            assert all(not p.is_classical for p in mu.support)


def test_run_rejects_unknown_suite_and_negative_count():
    with pytest.raises(InputError):
        verify.run("nonsense")
    with pytest.raises(InputError):
        verify.run_suite("bounds", count=-1)


def test_fixture_listing():
    names = verify.fixture_names()
    assert {"no_return", "q2_sparse", "two_critical"} <= set(names)
    with pytest.raises(InputError):
        verify.load_fixture("missing")


def test_report_is_json_with_exact_margins():
    doc = json.loads(to_json(verify.run("bounds", count=3, seed=0)))
    assert doc["summary"]["failed"] == 0
    assert all(isinstance(r["margin"], str) for r in doc["verdicts"])

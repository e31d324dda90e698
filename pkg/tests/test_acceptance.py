"""Acceptance gate: thirteen end-to-end criteria, one test and one line each.

Run with ``pytest -s tests/test_acceptance.py`` to see the per-criterion
summary lines.  Tolerances here are the contract; unit tests elsewhere pin
the underlying numbers more tightly.
"""

import json
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest
from conftest import entry_for

from bregman_lab.actions import CoefficientFunction, make_action
from bregman_lab.generators import (
    GENERATOR_NAMES,
    bregman_distance,
    make_generator,
    three_point_residual,
)
from bregman_lab.means import FolnerBox, invariance_defect
from bregman_lab.report import canonical_json, run
from bregman_lab.scenarios import bundled_scenario_names, load_scenario
from bregman_lab.sets import (
    ball_set,
    box_set,
    bregman_project,
    projection_certificate,
    simplex_set,
    variational_inequality,
)

PASS_SCENARIOS_WITH_SANDWICH = (
    "rotation", "order4", "spiral", "scaling", "entropy_simplex",
)


def ok(number, detail):
    print(f"\n[criterion {number:2d}] PASS — {detail}")


def test_criterion_01_identity_suite_all_generators():
    rng = np.random.default_rng(101)
    started = time.perf_counter()
    worst = 0.0
    for name in GENERATOR_NAMES:
        g = make_generator(name, 4)
        triples = rng.uniform(0.05, 5.0, size=(1000, 3, 4))
        for x, y, z in triples:
            d_xy = bregman_distance(g, x, y)
            d_yz = bregman_distance(g, y, z)
            d_xz = bregman_distance(g, x, z)
            for value in (d_xy, d_yz, d_xz):
                assert value >= -1e-10
            residual = three_point_residual(g, x, y, z)
            scale = d_xy + d_yz + d_xz
            assert residual < 1e-10 * (1.0 + scale), (name, residual, scale)
            worst = max(worst, residual / (1.0 + scale))
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"identity suite took {elapsed:.2f}s"
    ok(1, f"5 generators x 1000 triples, max relative residual "
          f"{worst:.2e}, {elapsed:.2f}s")


def test_criterion_02_quadratic_closed_form_and_entropy_asymmetry():
    g = make_generator("sq_norm", 4)
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(1000):
        x, y = rng.uniform(-2.0, 2.0, size=(2, 4))
        diff = abs(bregman_distance(g, x, y) - math.fsum((x - y) ** 2))
        worst = max(worst, diff)
        assert diff < 1e-12
    h = make_generator("neg_entropy", 1)
    forward = bregman_distance(h, [1.0], [math.e])
    reverse = bregman_distance(h, [math.e], [1.0])
    assert abs(forward - (math.e - 2.0)) < 1e-9
    assert abs(reverse - 1.0) < 1e-9
    ok(2, f"quadratic matches the squared norm to {worst:.1e}; "
          f"entropy divergence is ({forward:.9f}, {reverse:.9f}) across (1) vs (e)")


def test_criterion_03_projections_certified_on_random_sets():
    rng = np.random.default_rng(103)
    cases = []
    for i in range(100):
        dim = int(rng.integers(2, 5))
        if i < 60:
            g = make_generator("sq_norm", dim)
            family = ("ball", "box", "simplex")[i % 3]
            if family == "ball":
                cset = ball_set(rng.uniform(-1, 1, dim), rng.uniform(0.5, 2.0))
                x = rng.uniform(-3, 3, dim)
            elif family == "box":
                lo = rng.uniform(-2.0, 0.0, dim)
                cset = box_set(lo, lo + rng.uniform(0.5, 2.0, dim))
                x = rng.uniform(-3, 3, dim)
            else:
                cset = simplex_set(dim)
                x = rng.uniform(-1, 1, dim)
        else:
            g = make_generator("neg_entropy", dim)
            if i % 2:
                lo = rng.uniform(0.05, 0.5, dim)
                cset = box_set(lo, lo + rng.uniform(0.5, 2.0, dim))
            else:
                cset = simplex_set(dim)
            x = rng.uniform(0.05, 3.0, dim)
        cases.append((g, cset, x))
    worst_cert, worst_vi = -np.inf, np.inf
    for seed, (g, cset, x) in enumerate(cases):
        xhat = bregman_project(g, cset, x).point
        cert = projection_certificate(g, cset, x, xhat, sample_count=1000, seed=seed)
        vi = variational_inequality(g, cset, x, xhat, sample_count=1000, seed=seed)
        assert cert <= 1e-6, (g.name, cset.name, x, cert)
        # Solutions from an objective-comparison line search carry ~sqrt(eps)
        # position error, which steep gradients amplify; hold the inner
        # product to the same scale as the certificate.
        assert vi >= -1e-6, (g.name, cset.name, x, vi)
        worst_cert = max(worst_cert, cert)
        worst_vi = min(worst_vi, vi)

    kl = make_generator("neg_entropy", 2)
    xhat = bregman_project(kl, simplex_set(2), [0.2, 0.2]).point
    np.testing.assert_allclose(xhat, [0.5, 0.5], atol=1e-6)
    grid = np.linspace(1e-4, 1.0 - 1e-4, 9999)
    values = [bregman_distance(kl, [t, 1.0 - t], [0.2, 0.2]) for t in grid]
    np.testing.assert_allclose(xhat, [grid[int(np.argmin(values))]] * 2, atol=1e-4)
    ok(3, f"100 projections certified (max certificate {worst_cert:.1e}, "
          f"min variational inner product {worst_vi:.1e}); "
          f"simplex projection of (0.2, 0.2) matches the line search")


def test_criterion_04_minimizer_identity_on_every_bundled_schedule():
    from bregman_lab.means import minimizer_identity_residual, minimizer_identity_scale

    worst = 0.0
    where = None
    for name in bundled_scenario_names():
        scenario = load_scenario(name)
        x = scenario.probe_point
        if x is None:
            x = scenario.action.base_point
        for box in scenario.schedule.boxes:
            residual = minimizer_identity_residual(
                scenario.generator, scenario.action, box, x)
            scale = minimizer_identity_scale(
                scenario.generator, scenario.action, box, x)
            relative = residual / (1.0 + scale)
            assert residual < 1e-10 * (1.0 + scale), (name, box.sides, residual)
            if relative > worst:
                worst, where = relative, (scenario.id, box.sides)
    ok(4, f"identity holds on every scenario and box; worst relative residual "
          f"{worst:.2e} at {where[0]} sides {where[1]}")


def test_criterion_05_translation_defect_of_dyadic_coefficients():
    cset = box_set([0.0], [1.0])
    action = make_action([{"kind": "scaling", "factor": 0.5}], cset, [1.0])
    f = CoefficientFunction("linear", action, np.array([1.0]))

    defect = invariance_defect(FolnerBox((9,), (0,)), f, (1,))
    assert defect == 0.09990234375  # exactly representable dyadic value
    assert abs(defect - 0.0999) < 1e-4

    bounds = []
    for n in (100, 1000, 10000):
        scaled = invariance_defect(FolnerBox((n,), (0,)), f, (1,)) * (n + 1)
        assert scaled <= 2.0  # 2 * sup|f| * arity
        bounds.append(scaled)
    ok(5, f"defect at side 9 is exactly 0.09990234375; "
          f"(N+1)-scaled defects {', '.join(f'{b:.3f}' for b in bounds)} all <= 2")


def test_criterion_06_quarter_turn_scenarios_pass_the_full_pipeline(report_cache):
    started = time.perf_counter()
    reports = {}
    for name in ("rotation", "order4"):
        reports[name] = run(load_scenario(name), "all")
        report_cache[(name, "all", None)] = reports[name]
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0, f"pipeline took {elapsed:.1f}s"
    for name, report in reports.items():
        assert entry_for(report, "classify_hybrid")["verdict"] == "PASS", name
        location = entry_for(report, "barycenter_location")
        assert location["verdict"] == "PASS" and location["value"] <= 2e-4, name
        fixed = entry_for(report, "fixed_point")
        assert fixed["verdict"] == "PASS" and fixed["value"] <= 1e-4, name
        attractive = entry_for(report, "attractive")
        assert attractive["verdict"] == "PASS" and attractive["value"] <= 1e-8, name
        assert not any(c["verdict"] == "FAIL" for c in report["checks"]), name
    ok(6, f"rotation and order4 pass hybrid classification, barycenter, "
          f"fixed-point, and attractiveness in {elapsed:.1f}s")


def test_criterion_07_nonspreading_scenario_passes_the_same_chain(get_report):
    report = get_report("spiral", "all")
    assert entry_for(report, "classify_nonspreading")["verdict"] == "PASS"
    location = entry_for(report, "barycenter_location")
    assert location["verdict"] == "PASS" and location["value"] <= 2e-4
    fixed = entry_for(report, "fixed_point")
    assert fixed["verdict"] == "PASS" and fixed["value"] <= 1e-4
    attractive = entry_for(report, "attractive")
    assert attractive["verdict"] == "PASS"
    assert not any(c["verdict"] == "FAIL" for c in report["checks"])
    ok(7, f"spiral is nonspreading (max violation "
          f"{entry_for(report, 'classify_nonspreading')['value']:.2e}) and passes "
          f"barycenter, fixed-point, and attractiveness")


def test_criterion_08_contraction_damps_and_collapses_to_the_fixed_point(get_report):
    report = get_report("scaling", "all")
    asymptotic = entry_for(report, "asymptotic")
    assert asymptotic["verdict"] == "PASS"
    assert asymptotic["witness"]["element"] == [0]
    assert asymptotic["value"] <= 0.1
    location = entry_for(report, "barycenter_location")
    assert location["verdict"] == "PASS" and location["value"] <= 3e-6
    fixed = entry_for(report, "fixed_point")
    assert fixed["verdict"] == "PASS" and fixed["value"] <= 2e-6
    ok(8, f"halving action damps immediately (witness element 0, defect "
          f"{asymptotic['value']:.2e}); barycenter within "
          f"{location['value']:.1e} of the fixed point")


def test_criterion_09_sandwich_ordering_and_equality(get_report):
    values = {}
    for name in PASS_SCENARIOS_WITH_SANDWICH:
        entry = entry_for(get_report(name, "all"), "sandwich")
        assert entry["verdict"] == "PASS", name
        assert entry["details"]["side"] == 20, name
        assert entry["value"] <= 1e-8, (name, entry["value"])
        values[name] = entry["value"]
    equality = entry_for(get_report("scaling", "all"), "sandwich_equality")
    assert equality["verdict"] == "PASS" and equality["value"] <= 1e-3
    ok(9, f"sup-inf sandwich ordered on {len(values)} scenarios "
          f"(max violation {max(values.values()):.1e}); halving equality gap "
          f"{equality['value']:.1e}")


def test_criterion_10_mean_independence_under_translated_schedules(get_report):
    diffs = {}
    for name in ("rotation", "scaling"):
        entry = entry_for(get_report(name, "all"), "independence")
        assert entry["verdict"] == "PASS", name
        assert entry["details"]["max_size"] == 10000, name
        assert entry["value"] <= 1e-3, (name, entry["value"])
        diffs[name] = entry["value"]
    ok(10, f"translated-schedule barycenters agree to "
           f"{max(diffs.values()):.1e} at box size 10^4")


def test_criterion_11_projections_onto_the_attractive_model_converge(get_report):
    tails = {}
    for name in ("rotation", "scaling"):
        entry = entry_for(get_report(name, "all"), "projection_limit")
        assert entry["verdict"] == "PASS", name
        assert entry["value"] <= 1e-3, (name, entry["value"])
        details = entry["details"]
        assert len(details["distances"]) == 21
        assert details["constraint_count"] > 0
        tails[name] = entry["value"]
    ok(11, f"halfspace-model projections of deep orbit points stay within "
           f"{max(tails.values()):.1e} of the barycenter beyond the midpoint")


def test_criterion_12_counterexamples_fail_loudly_and_reproducibly(get_report):
    first = run(load_scenario("expansion"), "classify")
    second = run(load_scenario("expansion"), "classify")
    assert canonical_json(first) == canonical_json(second)
    kinds = ("classify_nonexpansive", "classify_nonspreading", "classify_hybrid")
    for kind in kinds:
        entry = entry_for(first, kind)
        assert entry["verdict"] == "FAIL", kind
        assert entry["witness"] is not None, kind
        assert entry["value"] > 1.0, kind  # doubling violates by whole units
    in_set = entry_for(get_report("circle", "verify"), "in_set")
    assert in_set["verdict"] == "FAIL"
    assert in_set["value"] > 0.1
    ok(12, f"doubling fails all three classifications with stable witnesses "
           f"(violations > 1); circle barycenter sits "
           f"{in_set['value']:.3f} from the orbit set")


def test_criterion_13_reports_are_bitwise_identical_across_thread_counts(tmp_path):
    outputs = []
    for label, threads in (("a", "1"), ("b", "1"), ("c", "8")):
        out = tmp_path / f"report_{label}.json"
        env = dict(os.environ, BREGMAN_LAB_THREADS=threads)
        proc = subprocess.run(
            ["bregman-lab", "all", "--scenario", "rotation.json",
             "--seed", "42", "--out", str(out)],
            env=env, capture_output=True, text=True, timeout=300,
        )
        assert proc.returncode == 0, proc.stderr
        outputs.append(canonical_json(json.loads(out.read_text())))
    assert outputs[0] == outputs[1], "same-thread reruns differ"
    assert outputs[0] == outputs[2], "1-thread vs 8-thread reports differ"
    ok(13, f"three independent runs (threads 1, 1, 8) agree byte-for-byte "
           f"on {len(outputs[0])} canonical bytes")

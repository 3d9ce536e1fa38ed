import json
import math

import numpy as np
import pytest

from yukawa_mc import oracles
from yukawa_mc.domains import Ball
from yukawa_mc.estimators import BoundaryFn
from yukawa_mc.rng import RngStream, uniform_sphere_point

from conftest import PSI_2_1, PSI_3_1


def test_psi_closed_form():
    v = oracles.psi_closed_form_check()
    assert v.passed and v.stats["max_rel_err"] < 1e-10 and v.stats["grid_points"] == 200


def test_bessel_half_integer():
    assert oracles.bessel_half_integer_check().passed


def test_psi_properties():
    v = oracles.psi_property_check()
    assert v.passed
    assert v.stats["psi_2_at_10"] < 0.01


def test_mean_value_case_targets():
    assert oracles.mean_value_case(3, 1.0, 1.0).exact_value == PSI_3_1
    assert oracles.mean_value_case(2, 1.0, 1.0).exact_value == PSI_2_1
    assert oracles.mean_value_case(3, 2.0, 0.5).exact_value == PSI_3_1
    assert oracles.mean_value_case(3, 1.0, 1.0).provenance == "closed-form-psi"


def test_mean_value_small():
    v = oracles.mean_value_check(3, 1.0, 1.0, n_samples=5000, seed=1)
    assert v.passed
    assert set(v.stats["estimators"]) == {"discounted", "killed", "duffin", "wos"}


@pytest.mark.parametrize("f", [BoundaryFn.constant(1.0), BoundaryFn.constant(0.0), BoundaryFn.indicator(1)])
def test_domination(f):
    d = Ball((0.0, 0.0, 0.0), 1.0)
    v = oracles.domination_check(d, (0.2, 0.0, 0.0), f, 0.0, 1.0, n_samples=2000)
    assert v.passed
    if f.value == 0.0 and f.kind == "constant":
        assert v.stats["mean_mu"] == v.stats["mean_nu"] == 0.0


def test_domination_order_checked():
    with pytest.raises(ValueError):
        oracles.domination_check(Ball((0.0, 0.0), 1.0), (0.0, 0.0), BoundaryFn.constant(), 2.0, 1.0)


def test_harmonic_reduction():
    assert oracles.harmonic_reduction_check(n_samples=2000).passed


def test_uniformity_small():
    assert oracles.uniformity_check(2, n_samples=20_000, bins=16).passed
    assert oracles.uniformity_check(3, n_samples=20_000, bins=10).passed


def test_uniformity_rejects_biased_sampler():
    def biased(rng, n):
        pts = uniform_sphere_point(rng, [0.0, 0.0], 1.0, size=n)
        pts[:, 0] = np.abs(pts[:, 0]) * np.where(rng.uniform(n) < 0.45, -1.0, 1.0)
        return pts

    v = oracles.uniformity_check(2, n_samples=20_000, sampler=biased)
    assert not v.passed and v.attempts == 2


def test_stepper_marginal():
    assert oracles.stepper_marginal_check(n_samples=4000).passed


def test_disintegration():
    assert oracles.disintegration_check(n_samples=4000).passed


def test_two_stage_retries_on_a_new_stream():
    seen = []

    def flaky(rng):
        seen.append(rng.seed)
        return len(seen) > 1, {}

    v = oracles._two_stage("flaky", flaky, RngStream(3))
    assert v.passed and v.attempts == 2 and seen[0] != seen[1]


def test_suite_report_is_json():
    rep = oracles.run_suite("specfun", seed=7)
    assert rep["passed"] and rep["seed"] == 7
    json.dumps(rep)


def test_unknown_suite():
    with pytest.raises(KeyError):
        oracles.run_suite("bogus")

"""Scalar profile functions: frozen values, branch continuity, monotonicity."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmevade import (
    SwarmParams,
    cohesion_profile,
    escape_profile,
    following_weight,
    separation_profile,
)
from swarmevade.types import ParameterError

# Parameter values the worked examples below were computed against
# (independent high-precision evaluation, frozen here).
EXAMPLE = SwarmParams(
    l=0.6, l_min=0.1, d_min=0.2, d_c=2.0, k1c=0.3, k2c=1.2, k3c=1.0,
    d_s=1.0, d_max=4.0, k1s=0.2, k2s=2.0, k_e=8.0, d_e1=8.0, d_e2=11.0,
    k_f=1.0, k_v=1.0, d_f=1.0,
)


@st.composite
def valid_params(draw):
    l = draw(st.floats(0.0, 2.0))
    l_min = draw(st.floats(0.01, 0.8))
    d_min = draw(st.floats(0.0, 2.0))
    d_c = d_min + draw(st.floats(0.2, 4.0))
    d_max = draw(st.floats(0.7, 8.0))
    d_s = d_max * draw(st.floats(0.1, 0.9))
    d_e2 = draw(st.floats(0.5, 15.0))
    d_e1 = d_e2 * draw(st.floats(0.1, 1.0))
    gain = st.floats(0.0, 10.0)
    return SwarmParams(
        l=l, l_min=l_min, d_min=d_min, d_c=d_c,
        k1c=draw(gain), k2c=draw(gain), k3c=draw(st.floats(0.1, 5.0)),
        d_s=d_s, d_max=d_max, k1s=draw(gain), k2s=draw(gain),
        d_e1=max(d_e1, 1e-3), d_e2=d_e2,
        k_e=draw(gain), k_f=draw(gain), k_v=draw(gain),
        d_f=draw(st.floats(1.0, 5.0)),
    )


class TestCohesionProfile:
    def test_zero_at_onset(self):
        # The exact branch at the float boundary is value-neutral (continuity).
        assert cohesion_profile(EXAMPLE.l + EXAMPLE.d_min, EXAMPLE) == pytest.approx(
            0.0, abs=1e-30
        )

    def test_quadratic_log_junction(self):
        expected = EXAMPLE.k1c * (EXAMPLE.d_c - EXAMPLE.d_min) ** 2
        assert cohesion_profile(EXAMPLE.l + EXAMPLE.d_c, EXAMPLE) == pytest.approx(
            expected, rel=1e-12
        )

    def test_log_branch_value(self):
        # delta_C + 1.2*ln(4), evaluated independently at high precision
        assert cohesion_profile(EXAMPLE.l + EXAMPLE.d_c + 3.0, EXAMPLE) == pytest.approx(
            2.6355532333438687, rel=1e-12
        )

    def test_zero_below_onset(self):
        assert cohesion_profile(0.0, EXAMPLE) == 0.0
        assert cohesion_profile(EXAMPLE.l, EXAMPLE) == 0.0


class TestSeparationProfile:
    def test_zero_at_cutoff(self):
        assert separation_profile(EXAMPLE.l + EXAMPLE.d_max, EXAMPLE) == pytest.approx(
            0.0, abs=1e-30
        )

    def test_quadratic_steep_junction(self):
        expected = EXAMPLE.k1s * (EXAMPLE.d_s - EXAMPLE.d_max) ** 2
        assert separation_profile(EXAMPLE.l + EXAMPLE.d_s, EXAMPLE) == pytest.approx(
            expected, rel=1e-12
        )
        assert expected == pytest.approx(1.8, rel=1e-12)

    def test_fully_clamped_value(self):
        # k2s*(1/sqrt(l_min) - 1/sqrt(d_max)) + delta_S, independent evaluation
        assert separation_profile(EXAMPLE.l, EXAMPLE) == pytest.approx(
            6.124555320336759, rel=1e-12
        )

    def test_constant_inside_clamp(self):
        at_zero = separation_profile(0.0, EXAMPLE)
        at_floor = separation_profile(EXAMPLE.l + EXAMPLE.l_min, EXAMPLE)
        assert at_zero == at_floor == separation_profile(EXAMPLE.l / 2, EXAMPLE)


class TestEscapeProfile:
    def test_zero_at_cutoff(self):
        assert escape_profile(EXAMPLE.l + EXAMPLE.d_e2, EXAMPLE) == 0.0

    def test_clamped_maximum(self):
        expected = EXAMPLE.k_e * (1 / math.sqrt(EXAMPLE.l_min) - 1 / math.sqrt(EXAMPLE.d_e2))
        assert escape_profile(0.0, EXAMPLE) == pytest.approx(expected, rel=1e-12)
        assert escape_profile(EXAMPLE.l + EXAMPLE.l_min, EXAMPLE) == pytest.approx(
            expected, rel=1e-12
        )

    def test_mid_range_value(self):
        # 8*(1/2 - 1/sqrt(11)), independent evaluation
        assert escape_profile(EXAMPLE.l + 4.0, EXAMPLE) == pytest.approx(
            1.5879092433778910, rel=1e-12
        )


class TestFollowingWeight:
    def test_zero_speed(self):
        assert following_weight(0.0, EXAMPLE) == 0.0

    def test_unit_weight_at_e_minus_one(self):
        speed = (math.e - 1.0) / EXAMPLE.k_v
        assert following_weight(speed, EXAMPLE) == pytest.approx(1.0, rel=1e-12)

    def test_log_value(self):
        assert following_weight(2.0, EXAMPLE) == pytest.approx(
            1.0986122886681098, rel=1e-12
        )


BOUNDARY_EPS = 1e-7
CONTINUITY_TOL = 1e-9


def _branch_points(params):
    yield "cohesion", cohesion_profile, params.l + params.d_min
    yield "cohesion", cohesion_profile, params.l + params.d_c
    yield "separation", separation_profile, params.l + params.d_s
    yield "separation", separation_profile, params.l + params.d_max
    yield "separation", separation_profile, params.l + params.l_min
    yield "escape", escape_profile, params.l + params.d_e2
    yield "escape", escape_profile, params.l + params.l_min


@settings(max_examples=100, deadline=None)
@given(valid_params())
def test_profiles_continuous_at_branch_boundaries(params):
    for name, fn, at in _branch_points(params):
        left = fn(max(at - BOUNDARY_EPS, 0.0), params)
        right = fn(at + BOUNDARY_EPS, params)
        scale = max(1.0, abs(fn(at, params)))
        assert abs(left - right) < CONTINUITY_TOL * scale + 1e-6, (
            f"{name} jumps at {at}: {left} vs {right}"
        )


@settings(max_examples=40, deadline=None)
@given(valid_params())
def test_profile_monotonicity(params):
    grid = np.linspace(0.0, params.l + params.d_max + params.d_e2 + 5.0, 1000)
    coh = [cohesion_profile(d, params) for d in grid]
    sep = [separation_profile(d, params) for d in grid]
    esc = [escape_profile(d, params) for d in grid]
    assert all(b - a >= -1e-12 for a, b in zip(coh, coh[1:]))
    assert all(b - a <= 1e-12 for a, b in zip(sep, sep[1:]))
    assert all(b - a <= 1e-12 for a, b in zip(esc, esc[1:]))


class TestParamValidation:
    def test_rejects_nonpositive_l_min(self):
        with pytest.raises(ParameterError):
            SwarmParams(l_min=0.0)

    def test_rejects_inverted_cohesion_band(self):
        with pytest.raises(ParameterError):
            SwarmParams(d_min=3.0, d_c=2.0)

    def test_rejects_inverted_separation_band(self):
        with pytest.raises(ParameterError):
            SwarmParams(d_s=5.0, d_max=4.0)

    def test_rejects_inverted_evasion_band(self):
        with pytest.raises(ParameterError):
            SwarmParams(d_e1=12.0, d_e2=11.0)

    def test_rejects_negative_gain(self):
        with pytest.raises(ParameterError):
            SwarmParams(k1c=-0.1)

    def test_rejects_following_offset_below_one(self):
        with pytest.raises(ParameterError):
            SwarmParams(d_f=0.5)

    def test_passive_scaling_touches_only_cohesion_separation(self):
        p = SwarmParams(passive_gain_scale=2.0)
        scaled = p.scaled_for_passive()
        assert scaled.k1c == 2 * p.k1c and scaled.k2c == 2 * p.k2c
        assert scaled.k1s == 2 * p.k1s and scaled.k2s == 2 * p.k2s
        assert scaled.k_a == p.k_a and scaled.k_e == p.k_e and scaled.k_f == p.k_f

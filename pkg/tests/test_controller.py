import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from customs_adapt import bandit, controller
from customs_adapt.bandit import BanditParams
from customs_adapt.controller import Method

GRID = bandit.arm_grid(21)


def _state(eps=0.1):
    return bandit.init_state(GRID, BanditParams(epsilon=eps))


def test_filter_examples():
    u = np.full(21, 1 / 21)
    q = controller.filter_arms(u, GRID, 0.1, 0.25)
    assert np.flatnonzero(q).tolist() == list(range(8))
    assert q[:8] == pytest.approx(np.full(8, 1 / 8))
    assert np.flatnonzero(controller.filter_arms(u, GRID, 0.5, 0.25)).tolist() == list(range(5, 16))
    p = np.random.default_rng(0).dirichlet(np.ones(21))
    assert controller.filter_arms(p, GRID, 0.3, 1.0) == pytest.approx(p)


def test_empty_window_falls_back_to_nearest_arm(rng):
    s = _state(eps=0.0)
    s.weights = np.full(21, 1e-300)
    s.weights[-1] = 21.0
    p = bandit.selection_probabilities(s)
    p[:-1] = 0.0  # exact point mass on arm 1.0
    q = controller.filter_arms(p, GRID, 0.0, 0.25)
    assert q[0] == 1.0 and q.sum() == 1.0


def test_decide_adapt_stays_in_window(rng):
    s = _state()
    ks = {controller.decide_adapt(s, GRID, 0.1, 0.25, rng).ratio for _ in range(300)}
    assert ks <= set(np.round(GRID[:8], 10)) | set(GRID[:8])
    assert max(ks) <= 0.35 + 1e-12


def test_decisions_are_deterministic():
    a = controller.decide_adapt(_state(), GRID, 0.4, 0.25, np.random.default_rng(5))
    b = controller.decide_adapt(_state(), GRID, 0.4, 0.25, np.random.default_rng(5))
    assert a.ratio == b.ratio and a.arm == b.arm


def test_apt_equals_full_window_adapt():
    a = controller.decide_apt(_state(), GRID, np.random.default_rng(2))
    b = controller.decide_adapt(_state(), GRID, 0.0, 1.0, np.random.default_rng(2))
    assert (a.ratio, a.arm, a.method, a.drift) == (b.ratio, b.arm, Method.APT, None)
    seen = {controller.decide_apt(_state(), GRID, np.random.default_rng(i)).arm for i in range(400)}
    assert seen == set(range(21))


def test_ada_and_fixed_are_identity():
    for s in (0.0, 0.37, 1.0):
        assert controller.decide_ada(s).ratio == s
    assert controller.decide_fixed(0.1).ratio == 0.1
    with pytest.raises(ValueError):
        controller.decide_ada(1.2)


def test_feedback_at_mean_keeps_order():
    s = _state()
    s.weights = np.linspace(0.5, 1.5, 21) * 21 / np.linspace(0.5, 1.5, 21).sum()
    d = controller.decide_apt(s, GRID, np.random.default_rng(0))
    controller.post_feedback(d, 0.4, s)  # first observation is its own mean, R = 0
    assert np.all(np.diff(s.weights) > 0)


def test_feedback_uses_filtered_probability():
    s = _state()
    d = controller.decide_adapt(s, GRID, 0.1, 0.25, np.random.default_rng(1))
    s.observe(0.2)
    w0 = s.weights.copy()
    controller.post_feedback(d, 0.6, s)
    # R = (0.6 - pi_bar) / 0.6 with pi_bar over (0.2, 0.6)
    pi_bar = (0.6 + 0.9 * 0.2) / 1.9
    R = (0.6 - pi_bar) / 0.6
    for p_played, should_match in ((1 / 8, True), (1 / 21, False)):
        ref = bandit.init_state(GRID, BanditParams())
        ref.weights = w0.copy()
        bandit.update(ref, d.arm, R, p_played)
        assert np.allclose(ref.weights, s.weights) is should_match


def test_feedback_ignored_for_stateless_methods():
    assert controller.post_feedback(controller.decide_ada(0.3), 0.5, None) is None


def test_identical_feedback_gives_identical_states():
    def play():
        s, r = _state(), np.random.default_rng(8)
        for pi in (0.3, 0.5, 0.1, 0.9, 0.4):
            controller.post_feedback(controller.decide_adapt(s, GRID, 0.3, 0.25, r), pi, s)
        return s.weights
    assert np.array_equal(play(), play())


def test_repeated_high_reward_dominates(rng):
    s = _state()
    for t in range(200):
        d = controller.decide_apt(s, GRID, rng)
        controller.post_feedback(d, 0.9 if d.arm == 4 else 0.1, s)
    draws = [controller.decide_apt(s, GRID, rng).arm for _ in range(500)]
    assert np.bincount(draws, minlength=21).argmax() == 4


@settings(max_examples=300, deadline=None)
@given(
    st.lists(st.floats(0, 1), min_size=21, max_size=21).filter(lambda w: sum(w) > 0),
    st.floats(0, 1),
    st.floats(0.01, 1),
)
def test_filter_properties(w, s, l):
    p = np.asarray(w) / sum(w)
    q = controller.filter_arms(p, GRID, s, l)
    assert q.sum() == pytest.approx(1.0)
    lo, hi = max(0, s - l), min(1, s + l)
    outside = (GRID < lo - 1e-9) | (GRID > hi + 1e-9)
    if (p[~outside] > 0).any():
        assert np.all(q[outside] == 0)

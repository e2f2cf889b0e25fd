import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavelattice.collision import (
    DEFAULT_CQ,
    cq_check,
    grid_rates,
    pair_with,
    random_unit_state,
    rhs,
    weak_eval,
)
from wavelattice.lattice import ZERO, canonical
from wavelattice.state import FullState, ShellState, snorm

from conftest import RandomTable, random_shell_state, small_config

seeds = st.integers(0, 2**32 - 1)


def R(m, eta=0):
    return canonical(3, m, eta)


def test_single_shell_rates():
    d = rhs(ShellState({R(1, 1): 0.5}))
    assert d.rates == {R(1, 1): -0.5, R(2, 1): 0.25}
    assert d.condensate_rate == 0.5


def test_two_shell_rates():
    d = rhs(ShellState({R(1): 1.0, R(2): 1.0}))
    assert d.rates == {R(1): 0.0, R(2): -5.0, R(3): 2.0, R(4): 1.0}
    assert d.condensate_rate == 4.0
    assert d.mass_rate() == -2.0
    assert d.energy_rate() == 0.0


def test_empty_state():
    d = rhs(ShellState())
    assert d.rates == {} and d.condensate_rate == 0.0
    assert weak_eval(ShellState(), lambda r: 1.0) == 0.0


def test_weak_eval_examples():
    s = ShellState({R(1): 1.0, R(2): 1.0})
    assert weak_eval(s, float) == 0.0
    assert weak_eval(s, lambda r: 0.0 if r.is_zero else 1.0) == -2.0


def test_overflow_routing():
    d = rhs(ShellState({R(1): 1.0}), r_max=R(1))
    assert d.rates == {R(1): -2.0}
    assert d.overflow_mass_rate == 1.0
    assert d.overflow_energy_rate == 2.0
    assert d.energy_rate() == 0.0


def test_channel_off_discards():
    d = rhs(ShellState({R(1): 1.0}), condensate_channel=False)
    assert d.condensate_rate == 0.0
    assert d.discarded_rate == 2.0


@given(seeds)
@settings(max_examples=100, deadline=None)
def test_oracle_equivalence(seed):
    rng = np.random.default_rng(seed)
    s = random_shell_state(rng)
    phi = RandomTable(rng)
    d = rhs(s)
    lhs = pair_with(d, phi)
    ref = weak_eval(s, phi)
    scale = sum(abs(phi(r) * v) for r, v in d.rates.items()) + abs(phi(ZERO) * d.condensate_rate)
    assert abs(lhs - ref) <= 1e-12 * max(scale, 1e-300)


@given(seeds, st.floats(0.0, 5.0))
@settings(max_examples=50, deadline=None)
def test_phi_tilde_bracket_nonnegative(seed, c):
    s = random_shell_state(np.random.default_rng(seed))
    val = weak_eval(s, lambda r: c if r.is_zero else max(c - float(r), 0.0))
    assert val >= -1e-12 * c * sum(s.shells.values()) ** 2


@given(seeds)
@settings(max_examples=100, deadline=None)
def test_identities(seed):
    s = random_shell_state(np.random.default_rng(seed))
    d = rhs(s)
    sq = sum(g * g for g in s.shells.values())
    assert d.mass_rate() == pytest.approx(-sq, rel=1e-12)
    assert abs(d.energy_rate()) <= 1e-12 * sum(
        abs(float(r) * v) for r, v in d.rates.items())
    assert d.condensate_rate == pytest.approx(2 * sq, rel=1e-12)
    top = s.max_level()
    for r in d.rates:
        assert r.eta <= top
        assert r.m % 3 != 0 or r.eta == 0


@given(seeds, st.booleans())
@settings(max_examples=50, deadline=None)
def test_dense_rates_match_sparse(seed, channel):
    rng = np.random.default_rng(seed)
    cfg = small_config(r_max=(40, 0), eta_max=4, condensate_channel=channel)
    dirs = [random_shell_state(rng, max_numerator=40) for _ in range(2)]
    full = FullState.from_directions(dirs, cfg, level=4)
    rates = grid_rates(full.amps, full.grid, channel)
    net = rates.net(full.amps)
    for i, d in enumerate(dirs):
        ref = rhs(d, condensate_channel=channel, r_max=cfg.r_max_radius)
        dense = {full.grid.radius_at(j): net[i, j] for j in np.flatnonzero(net[i])}
        scale = max(abs(v) for v in ref.rates.values()) or 1.0
        for r in set(dense) | set(ref.rates):
            assert dense.get(r, 0.0) == pytest.approx(ref.rates.get(r, 0.0), abs=1e-13 * scale)
        assert rates.condensate_rate[i] == pytest.approx(ref.condensate_rate, rel=1e-13)
        assert rates.discarded_rate[i] == pytest.approx(ref.discarded_rate, rel=1e-13)
        assert rates.overflow_mass_rate[i] == pytest.approx(ref.overflow_mass_rate,
                                                            rel=1e-12, abs=1e-13 * scale)
        assert rates.overflow_energy_rate[i] == pytest.approx(ref.overflow_energy_rate,
                                                              rel=1e-12, abs=1e-12 * scale)


def test_loss_coefficient_is_nonnegative_and_bounded(rng):
    cfg = small_config(r_max=(40, 0), eta_max=4)
    full = FullState.from_directions([random_shell_state(rng, max_numerator=40) for _ in range(3)],
                                    cfg, level=4)
    rates = grid_rates(full.amps, full.grid)
    lam = 4 * full.positive_mass() + 2 * full.amps.max(axis=1)
    assert np.all(rates.loss_coef >= 0)
    assert np.all(rates.loss_coef <= lam[:, None])


def test_cq_zero_state():
    full = FullState.zeros(small_config(), level=1, n_dir=1)
    check = cq_check(full)
    assert check.lhs == 0.0 and check.rhs_bound == 0.0 and check.ok


def test_cq_single_shell_by_hand():
    # rates -2 at 1 and +1 at 2; radius-weighted absolute values 2 and 2, both level 0
    full = FullState.from_directions([ShellState({R(1): 1.0})], small_config(), level=0)
    check = cq_check(full)
    assert check.lhs == 4.0
    assert check.rhs_bound == DEFAULT_CQ
    assert check.ok


def test_cq_holds_on_random_unit_states():
    rng = np.random.default_rng(2024)
    cfg = small_config(r_max=(4, 0))
    for _ in range(1000):
        st_ = random_unit_state(rng, cfg)
        assert snorm(st_) == pytest.approx(1.0)
        assert cq_check(st_).ok

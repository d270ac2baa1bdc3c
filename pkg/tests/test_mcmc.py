import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cyclone_risk.core.mcmc import (
    Block,
    MCMCConfig,
    ParameterSpec,
    ParameterTransform,
    PosteriorChain,
    Support,
    adapt_step_sizes,
    run_chains,
    run_metropolis_within_gibbs,
)
from cyclone_risk.exceptions import DimensionMismatchError, InvalidParamsError, SamplerError


def standard_normal(x):
    return -0.5 * float(x[0] ** 2)


def test_adaptation_direction():
    assert adapt_step_sizes({"a": 1.0}, {"a": 0.6})["a"] > 1.0
    assert adapt_step_sizes({"a": 1.0}, {"a": 0.0})["a"] < 1.0
    assert adapt_step_sizes({"a": 1.0}, {"a": 0.2})["a"] == pytest.approx(1.0)
    assert adapt_step_sizes({"a": 2.0, "b": 3.0}, {"a": 0.2}) == {"a": 2.0, "b": 3.0}
    # 后期轮次步长变化更小
    early = adapt_step_sizes({"a": 1.0}, {"a": 0.6}, adaptation_round=1)["a"]
    late = adapt_step_sizes({"a": 1.0}, {"a": 0.6}, adaptation_round=100)["a"]
    assert early > late > 1.0


def test_same_seed_same_chain():
    cfg = MCMCConfig(iterations=500, burn_in=100, seed=7)
    specs = [ParameterSpec("x", step=1.0)]
    a = run_metropolis_within_gibbs(standard_normal, specs, cfg)
    b = run_metropolis_within_gibbs(standard_normal, specs, cfg)
    np.testing.assert_array_equal(a.samples, b.samples)
    c = run_metropolis_within_gibbs(standard_normal, specs, MCMCConfig(iterations=500, burn_in=100, seed=8))
    assert not np.array_equal(a.samples, c.samples)


def test_thinning_and_burn_in_counts():
    cfg = MCMCConfig(iterations=1000, burn_in=200, thin=4, seed=1)
    chain = run_metropolis_within_gibbs(standard_normal, [ParameterSpec("x")], cfg)
    assert chain.n_samples == 200
    assert chain.proposed["all"] == 800
    assert chain.log_posterior.shape == (200,)


def test_standard_normal_moments():
    cfg = MCMCConfig(iterations=20000, burn_in=5000, seed=3)
    chain = run_metropolis_within_gibbs(standard_normal, [ParameterSpec("x", step=1.0)], cfg)
    x = chain.column("x")
    assert abs(x.mean()) < 0.15
    assert x.std() == pytest.approx(1.0, abs=0.1)


@pytest.mark.slow
def test_standard_normal_moments_long_run():
    cfg = MCMCConfig(iterations=110000, burn_in=10000, seed=3)
    chain = run_metropolis_within_gibbs(standard_normal, [ParameterSpec("x", step=1.0)], cfg)
    x = chain.column("x")
    assert chain.n_samples == 100000
    assert abs(x.mean()) < 0.02
    assert abs(x.std() - 1.0) < 0.03
    assert 0.15 <= chain.acceptance_rates()["all"] <= 0.30


@pytest.mark.slow
def test_acceptance_tuned_to_target():
    cfg = MCMCConfig(iterations=60000, burn_in=30000, seed=11)
    chain = run_metropolis_within_gibbs(standard_normal, [ParameterSpec("x", step=1.0)], cfg)
    assert 0.15 <= chain.acceptance_rates()["all"] <= 0.30


@pytest.mark.slow
def test_three_state_occupancy():
    # [k, k+1) 上的分段常数密度, 区间质量即离散目标
    weights = np.array([0.2, 0.5, 0.3])

    def logpost(x):
        if not 0.0 <= x[0] < 3.0:
            return -np.inf
        return float(np.log(weights[int(x[0])]))

    cfg = MCMCConfig(iterations=400000, burn_in=20000, seed=19)
    chain = run_metropolis_within_gibbs(logpost, [ParameterSpec("x", initial=1.5, step=1.0)], cfg)
    states = np.floor(chain.column("x")).astype(int)
    occupancy = np.bincount(states, minlength=3) / chain.n_samples
    np.testing.assert_allclose(occupancy, weights, atol=0.01)


def test_adaptation_frozen_after_burn_in():
    specs = [ParameterSpec("x", step=50.0)]
    short = run_metropolis_within_gibbs(standard_normal, specs, MCMCConfig(iterations=2000, burn_in=1000, seed=13))
    long = run_metropolis_within_gibbs(standard_normal, specs, MCMCConfig(iterations=8000, burn_in=1000, seed=13))
    # 初始步长过大, burn-in 期间必然缩小
    assert short.step_sizes["all"] < 1.0
    assert long.step_sizes == short.step_sizes
    # burn-in 之后的样本与同一步长下的延续一致
    np.testing.assert_array_equal(long.samples[:short.n_samples], short.samples)

    no_burn = run_metropolis_within_gibbs(standard_normal, specs, MCMCConfig(iterations=2000, burn_in=0, seed=13))
    assert no_burn.step_sizes == {"all": 1.0}


def test_exact_conjugate_block_always_accepted():
    def draw(x, rng):
        return rng.normal(size=1)

    cfg = MCMCConfig(iterations=4000, burn_in=500, seed=2, blocks=[Block("x", ["x"], conjugate=draw)])
    chain = run_metropolis_within_gibbs(standard_normal, [ParameterSpec("x")], cfg)
    assert chain.acceptance_rates()["x"] == 1.0
    assert abs(chain.column("x").mean()) < 0.1


def test_conjugate_correction_targets_product():
    # 提议 N(0,1), 修正项 x, 目标 N(1,1)
    def draw(x, rng):
        return rng.normal(size=1)

    cfg = MCMCConfig(
        iterations=20000, burn_in=1000, seed=5,
        blocks=[Block("x", ["x"], conjugate=draw, correction=lambda x: float(x[0]))],
    )
    chain = run_metropolis_within_gibbs(lambda x: -0.5 * float((x[0] - 1) ** 2), [ParameterSpec("x")], cfg)
    assert chain.column("x").mean() == pytest.approx(1.0, abs=0.1)
    assert chain.acceptance_rates()["x"] < 1.0


def test_bounded_and_positive_support():
    specs = [
        ParameterSpec("u", Support.BOUNDED, initial=0.5, step=1.0, lower=0.0, upper=1.0),
        ParameterSpec("s", Support.POSITIVE, initial=1.0, step=0.5),
    ]

    def logpost(x):
        # u ~ Uniform(0, 1), s ~ Exponential(1)
        return -float(x[1])

    cfg = MCMCConfig(
        iterations=20000, burn_in=2000, seed=4,
        blocks=[Block("u", ["u"]), Block("s", ["s"])],
    )
    chain = run_metropolis_within_gibbs(logpost, specs, cfg)
    u, s = chain.column("u"), chain.column("s")
    assert np.all((u > 0) & (u < 1)) and np.all(s > 0)
    assert u.mean() == pytest.approx(0.5, abs=0.05)
    assert s.mean() == pytest.approx(1.0, abs=0.1)


def test_run_chains_uses_distinct_seeds():
    cfg = MCMCConfig(iterations=300, burn_in=50, seed=9)
    chains = run_chains(standard_normal, [ParameterSpec("x")], cfg, n_chains=3)
    assert len({c.seed for c in chains}) == 3
    again = run_chains(standard_normal, [ParameterSpec("x")], cfg, n_chains=3)
    for a, b in zip(chains, again):
        np.testing.assert_array_equal(a.samples, b.samples)


def test_invalid_configuration():
    with pytest.raises(InvalidParamsError):
        MCMCConfig(iterations=10, burn_in=10)
    with pytest.raises(InvalidParamsError):
        ParameterSpec("s", Support.POSITIVE, initial=-1.0)
    with pytest.raises(InvalidParamsError):
        ParameterSpec("u", Support.BOUNDED, initial=0.5, lower=1.0, upper=0.0)
    with pytest.raises(DimensionMismatchError):
        run_metropolis_within_gibbs(
            standard_normal, [ParameterSpec("x")], MCMCConfig(iterations=10, burn_in=0, blocks=[Block("y", ["y"])])
        )
    with pytest.raises(DimensionMismatchError):
        run_metropolis_within_gibbs(
            lambda x: 0.0, [ParameterSpec("x"), ParameterSpec("y")],
            MCMCConfig(iterations=10, burn_in=0, blocks=[Block("x", ["x"])]),
        )
    with pytest.raises(SamplerError):
        run_metropolis_within_gibbs(lambda x: -np.inf, [ParameterSpec("x")], MCMCConfig(iterations=10, burn_in=0))


SPECS = [
    ParameterSpec("a"),
    ParameterSpec("b", Support.POSITIVE, initial=1.0),
    ParameterSpec("c", Support.BOUNDED, initial=0.0, lower=-0.5, upper=0.5),
]


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_transform_round_trip(values):
    transform = ParameterTransform(SPECS)
    y = np.array(values)
    np.testing.assert_allclose(transform.to_unconstrained(transform.to_constrained(y)), y, atol=1e-8)


def test_transform_derivative_matches_finite_difference():
    transform = ParameterTransform(SPECS)
    y = np.array([0.3, -0.7, 1.2])
    h = 1e-6
    numeric = np.array([
        (transform.to_constrained(y + h * e) - transform.to_constrained(y - h * e))[i] / (2 * h)
        for i, e in enumerate(np.eye(3))
    ])
    np.testing.assert_allclose(transform.derivative(y), numeric, rtol=1e-6)
    assert transform.log_jacobian(y) == pytest.approx(np.sum(np.log(np.abs(numeric))), rel=1e-6)


def test_point_mass_chain():
    chain = PosteriorChain.point_mass(["a", "b"], [1.0, 2.0], method="mle")
    assert chain.n_samples == 1
    assert chain.mean() == {"a": 1.0, "b": 2.0}
    assert chain.metadata == {"method": "mle"}
    with pytest.raises(DimensionMismatchError):
        PosteriorChain.point_mass(["a"], [1.0, 2.0])

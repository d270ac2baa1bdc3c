import numpy as np
import pytest
from scipy import stats

from cyclone_risk.core.mcmc import MCMCConfig, PosteriorChain
from cyclone_risk.core.seasonal import (
    CovariateScaling,
    PredictiveSample,
    SeasonalModel,
    SeasonalModelParams,
    SeasonalPrior,
    combined_expected_damage,
    damage_event_log_likelihood,
    damage_value_log_likelihood,
    expected_damage_summary,
    fit_seasonal,
    frequency_log_likelihood,
    predict_season,
    predictive_check,
    seasonal_log_likelihood,
    simulate_seasons,
)
from cyclone_risk.exceptions import (
    InconsistentObservationError,
    InsufficientDataError,
    InvalidParamsError,
)
from cyclone_risk.schemas import IntensityGroup, SaffirSimpson, SeasonObservation, StormRecord
from cyclone_risk.services.dataset import build_season_observations

from .conftest import COVARIATE_NAMES, make_covariate_row, make_season, random_covariate_rows

Q = len(COVARIATE_NAMES) + 1


def low_params(theta=0.39, r=4.0, beta0=1.0):
    return SeasonalModelParams(
        group=IntensityGroup.LOW, beta=[beta0] + [0.1] * (Q - 1), theta=theta, mu_dam=20.0, sigma_dam=2.0, r=r
    )


def high_params(theta=0.39, rate=3.0):
    return SeasonalModelParams(
        group=IntensityGroup.HIGH, beta=[np.log(rate)] + [0.0] * (Q - 1), theta=theta, mu_dam=21.0, sigma_dam=1.5
    )


def point_mass_chain(params: SeasonalModelParams) -> PosteriorChain:
    scaling = CovariateScaling.identity(["intercept"] + COVARIATE_NAMES)
    model = SeasonalModel(params.group)
    names = model.parameter_names(scaling)
    values = list(params.beta) + ([params.r] if params.r is not None else []) + [
        params.theta, params.mu_dam, params.sigma_dam,
    ]
    return PosteriorChain.point_mass(names, values, covariate_scaling=scaling.to_dict())


def test_params_validation():
    with pytest.raises(InvalidParamsError):
        SeasonalModelParams(group=IntensityGroup.LOW, beta=[0.0], theta=0.5, mu_dam=0, sigma_dam=1)
    with pytest.raises(InvalidParamsError):
        SeasonalModelParams(group=IntensityGroup.HIGH, beta=[0.0], theta=0.5, mu_dam=0, sigma_dam=1, r=2.0)
    with pytest.raises(InvalidParamsError):
        SeasonalModelParams(group=IntensityGroup.HIGH, beta=[0.0], theta=1.5, mu_dam=0, sigma_dam=1)
    with pytest.raises(InvalidParamsError):
        SeasonalModelParams(group=IntensityGroup.HIGH, beta=[0.0], theta=0.5, mu_dam=0, sigma_dam=0)


def test_empty_season_contributes_frequency_only():
    params = low_params()
    season = make_season(2000, IntensityGroup.LOW, n=0, l=0, d=0.0)
    x = np.array([season.covariates.values])
    assert damage_event_log_likelihood(params.theta, np.array([0.0]), np.array([0.0])) == 0.0
    assert seasonal_log_likelihood(params, [season]) == pytest.approx(
        frequency_log_likelihood(params, np.array([0.0]), x)
    )


def test_no_damage_with_storms():
    params = high_params(theta=0.39)
    value = damage_value_log_likelihood(params, np.array([2.0]), np.array([0.0]), np.array([0.0]))
    assert value == pytest.approx(2 * np.log(0.61))


def naive_log_likelihood(params: SeasonalModelParams, season: SeasonObservation) -> float:
    rate = np.exp(np.dot(season.covariates.values, params.beta))
    n, l, d = season.n_storms, season.n_damaging, season.total_damage_usd
    if params.r is not None:
        freq = stats.nbinom.logpmf(n, params.r, params.r / (params.r + rate))
    else:
        freq = stats.poisson.logpmf(n, rate)
    event = stats.binom.logpmf(l, n, params.theta)
    if d == 0:
        value = n * np.log(1 - params.theta)
    else:
        value = np.log(1 - (1 - params.theta) ** n) + stats.lognorm.logpdf(
            d, s=params.sigma_dam, scale=np.exp(params.mu_dam)
        )
    return float(freq + event + value)


@pytest.mark.parametrize("params", [low_params(), high_params()])
def test_log_likelihood_matches_direct_evaluation(params, rng):
    seasons = []
    for row in random_covariate_rows(rng, range(1990, 2010)):
        n = int(rng.integers(0, 8))
        l = int(rng.integers(0, n + 1))
        d = float(np.exp(rng.normal(20, 2))) if l else 0.0
        seasons.append(make_season(row.season, params.group, n, l, d, covariates=row))
    total = seasonal_log_likelihood(params, seasons)
    assert total == pytest.approx(sum(naive_log_likelihood(params, s) for s in seasons), rel=1e-10)
    # 按季节可加
    assert total == pytest.approx(sum(seasonal_log_likelihood(params, [s]) for s in seasons), rel=1e-10)


def test_inconsistent_observation_rejected():
    bad = SeasonObservation.model_construct(
        season=2001, group=IntensityGroup.HIGH, n_storms=2, n_damaging=0, total_damage_usd=5.0e6,
        covariates=make_covariate_row(2001),
    )
    with pytest.raises(InconsistentObservationError):
        seasonal_log_likelihood(high_params(), [bad])


def test_group_mismatch_rejected():
    with pytest.raises(InvalidParamsError):
        seasonal_log_likelihood(high_params(), [make_season(2000, IntensityGroup.LOW, 1, 0, 0.0)])


@pytest.mark.parametrize("theta", [0.142, 0.39])
def test_zero_damage_probability_given_count(theta, rng):
    params = high_params(theta=theta, rate=3.0)
    sample = predict_season(point_mass_chain(params), make_covariate_row(2020), IntensityGroup.HIGH, 200000, rng)
    for k in range(1, 6):
        mask = sample.n == k
        assert mask.sum() > 1000
        assert np.mean(sample.d[mask] == 0) == pytest.approx((1 - theta) ** k, abs=0.02)
    assert np.all((sample.d > 0) == (sample.l > 0))


def test_theta_zero_means_no_damage(rng):
    sample = predict_season(
        point_mass_chain(high_params(theta=0.0)), make_covariate_row(2020), IntensityGroup.HIGH, 5000, rng
    )
    assert np.all(sample.l == 0) and np.all(sample.d == 0)
    assert sample.zero_damage_probability == 1.0


def test_predictive_moments(rng):
    params = low_params(theta=0.3, r=4.0, beta0=np.log(5.0))
    row = make_covariate_row(2020)
    sample = predict_season(point_mass_chain(params), row, IntensityGroup.LOW, 200000, rng)
    assert sample.n_draws == 200000
    assert sample.n.mean() == pytest.approx(5.0, rel=0.02)
    assert sample.n.var() == pytest.approx(5.0 + 25.0 / 4.0, rel=0.05)
    assert sample.l.mean() == pytest.approx(1.5, rel=0.03)


def test_predictive_check_percentiles():
    draws = np.arange(1001, dtype=float)
    sample = PredictiveSample(group=IntensityGroup.HIGH, season=2000, n=draws, l=draws, d=draws)
    at_median = predictive_check(sample, make_season(2000, IntensityGroup.HIGH, 500, 500, 500.0))
    assert at_median.percentile == {"n": 0.5, "l": 0.5, "d": 0.5}
    assert all(at_median.inside_interval.values())

    beyond = predictive_check(sample, make_season(2000, IntensityGroup.HIGH, 2000, 2000, 5000.0))
    assert beyond.percentile["n"] == 1.0
    assert not beyond.inside_interval["d"]


def test_insufficient_seasons():
    seasons = [make_season(2000 + k, IntensityGroup.HIGH, 1, 0, 0.0) for k in range(5)]
    with pytest.raises(InsufficientDataError):
        fit_seasonal(seasons, None, MCMCConfig(iterations=100, burn_in=10))


def test_prior_only_run():
    chain = SeasonalModel(IntensityGroup.LOW).fit([], MCMCConfig(iterations=6000, burn_in=1000, seed=21))
    theta = chain.column("theta")
    assert theta.mean() == pytest.approx(0.5, abs=0.05)
    r = chain.column("r")
    assert np.all((r > 0) & (r < 70))
    assert chain.metadata["n_seasons"] == 0
    assert chain.acceptance_rates()["theta"] == 1.0


def small_dataset(rng, group, n_seasons=15, params=None):
    rows = random_covariate_rows(rng, range(1980, 1980 + n_seasons))
    params = params or (low_params(beta0=1.0) if group == IntensityGroup.LOW else high_params())
    return simulate_seasons(params, rows, rng)


def test_fit_low_group_layout(rng):
    data = small_dataset(rng, IntensityGroup.LOW)
    chain = fit_seasonal(data, None, MCMCConfig(iterations=800, burn_in=200, seed=3))
    assert chain.names == [f"beta_{n}" for n in ["intercept"] + COVARIATE_NAMES] + [
        "r", "theta", "mu_dam", "sigma_dam",
    ]
    assert chain.metadata["group"] == "low"
    assert chain.metadata["seasons"] == list(range(1980, 1995))
    r = chain.column("r")
    assert np.all((r > 0) & (r < 70))
    assert np.all(chain.column("sigma_dam") > 0)
    scaling = CovariateScaling.from_dict(chain.metadata["covariate_scaling"])
    assert scaling.names == ["intercept"] + COVARIATE_NAMES


def test_fit_is_deterministic(rng):
    data = small_dataset(rng, IntensityGroup.HIGH)
    cfg = MCMCConfig(iterations=400, burn_in=100, seed=17)
    a = fit_seasonal(data, None, cfg)
    b = fit_seasonal(data, None, cfg)
    np.testing.assert_array_equal(a.samples, b.samples)


def test_covariate_mask_keeps_intercept(rng):
    data = small_dataset(rng, IntensityGroup.HIGH)
    chain = fit_seasonal(data, None, MCMCConfig(iterations=300, burn_in=50), covariate_mask=["SST"])
    assert chain.names[:2] == ["beta_intercept", "beta_SST"]


def test_covariate_scaling_standardizes(rng):
    rows = random_covariate_rows(rng, range(2000, 2020))
    scaling = CovariateScaling.fit(rows)
    x = scaling.design(rows)
    np.testing.assert_allclose(x[:, 0], 1.0)
    np.testing.assert_allclose(x[:, 1:].mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(x[:, 1:].std(axis=0, ddof=1), 1.0)
    again = CovariateScaling.from_dict(scaling.to_dict())
    np.testing.assert_array_equal(again.design(rows), x)


def test_expected_damage_summary():
    n = 100
    chain = PosteriorChain(
        names=["mu_dam", "sigma_dam"],
        samples=np.column_stack([np.full(n, 1.0), np.full(n, 1.0)]),
        log_posterior=np.zeros(n),
        accepted={}, proposed={}, burn_in=0, thin=1, seed=0,
    )
    summary = expected_damage_summary(chain)
    assert summary["median_damage"]["mean"] == pytest.approx(np.e)
    assert summary["mean_damage"]["mean"] == pytest.approx(np.exp(1.5))
    assert summary["log_scale_mu"]["lower"] == pytest.approx(1.0)
    combined = combined_expected_damage([chain, chain])
    assert combined["mean"] == pytest.approx(2 * np.e)
    assert combined_expected_damage([chain, chain], statistic="mean_damage")["mean"] == pytest.approx(
        2 * np.exp(1.5)
    )
    with pytest.raises(InvalidParamsError):
        combined_expected_damage([chain], statistic="mode")


@pytest.mark.slow
def test_parameter_recovery(rng):
    truth = SeasonalModelParams(
        group=IntensityGroup.HIGH, beta=[np.log(2.5)] + [0.0] * (Q - 2) + [0.4],
        theta=0.35, mu_dam=21.0, sigma_dam=1.2,
    )
    rows = random_covariate_rows(rng, range(1900, 2100))
    data = simulate_seasons(truth, rows, rng)
    chain = fit_seasonal(data, None, MCMCConfig(iterations=20000, burn_in=5000, seed=5), covariate_mask=["SSN"])
    assert chain.column("theta").mean() == pytest.approx(0.35, abs=0.05)
    assert chain.column("mu_dam").mean() == pytest.approx(21.0, abs=0.3)
    assert chain.column("sigma_dam").mean() == pytest.approx(1.2, abs=0.2)
    assert chain.column("beta_SSN").mean() == pytest.approx(0.4, abs=0.15)


def make_storm(storm_id: str, season: int, category: SaffirSimpson, damage: float) -> StormRecord:
    return StormRecord(
        storm_id=storm_id,
        name=storm_id,
        season=season,
        max_wind_speed=120.0 if category.is_major else 70.0,
        min_central_pressure=950.0 if category.is_major else 990.0,
        mean_latitude=25.0,
        category=category,
        intensity_group=IntensityGroup.for_category(category),
        damage_usd_2019=damage,
    )


def test_fit_and_predict_from_ingested_seasons(rng):
    rows = random_covariate_rows(rng, range(2000, 2015))
    storms = []
    for row in rows:
        for k in range(int(rng.integers(0, 5))):
            category = SaffirSimpson.CAT4 if rng.random() < 0.3 else SaffirSimpson.CAT1
            damage = float(rng.lognormal(20, 1.5)) if rng.random() < 0.4 else 0.0
            storms.append(make_storm(f"AL{k:02d}{row.season}", row.season, category, damage))
    seasons = build_season_observations(storms, {row.season: row for row in rows}, 2000, 2014)
    assert len(seasons) == 30

    for group in IntensityGroup:
        data = [s for s in seasons if s.group == group]
        params = low_params() if group == IntensityGroup.LOW else high_params()
        expected = sum(naive_log_likelihood(params, s) for s in data)
        assert seasonal_log_likelihood(params, data) == pytest.approx(expected, rel=1e-10)

        chain = fit_seasonal(data, None, MCMCConfig(iterations=300, burn_in=100, seed=2))
        assert chain.metadata["seasons"] == list(range(2000, 2015))
        sample = predict_season(chain, rows[-1], group, 2000, rng)
        assert sample.n_draws == 2000
        assert np.all((sample.d > 0) == (sample.l > 0))


def test_log_prior_matches_direct_densities():
    prior = SeasonalPrior()
    params = low_params(theta=0.39, r=4.0)
    expected = (
        np.sum(stats.norm.logpdf(params.beta, 0.0, np.sqrt(prior.beta_var)))
        + stats.beta.logpdf(params.theta, 1.0, 1.0)
        + stats.norm.logpdf(params.mu_dam, 0.0, np.sqrt(prior.mu_var))
        + stats.gamma.logpdf(params.sigma_dam ** -2, 1.0, scale=1.0)
        + np.log(2.0) - 3.0 * np.log(params.sigma_dam)
        - np.log(70.0)
    )
    assert SeasonalModel(IntensityGroup.LOW).log_prior(params) == pytest.approx(expected, rel=1e-12)
    assert SeasonalModel(IntensityGroup.LOW).log_prior(low_params(r=75.0)) == -np.inf


RECOVERY_TRUTH = {
    IntensityGroup.LOW: {"intercept": np.log(4.0), "SST": 0.3, "r": 4.0, "theta": 0.39, "mu_dam": 20.0,
                         "sigma_dam": 2.0},
    IntensityGroup.HIGH: {"intercept": np.log(2.0), "SST": 0.3, "theta": 0.5, "mu_dam": 21.0, "sigma_dam": 1.5},
}


def recovery_hits(group: IntensityGroup, seed: int) -> list:
    truth = RECOVERY_TRUTH[group]
    rng = np.random.default_rng(seed)
    beta = [truth["intercept"]] + [0.0] * (Q - 1)
    beta[1 + COVARIATE_NAMES.index("SST")] = truth["SST"]
    params = SeasonalModelParams(
        group=group, beta=beta, theta=truth["theta"], mu_dam=truth["mu_dam"], sigma_dam=truth["sigma_dam"],
        r=truth.get("r"),
    )
    data = simulate_seasons(params, random_covariate_rows(rng, range(1950, 2010)), rng)
    chain = fit_seasonal(data, None, MCMCConfig(iterations=5000, burn_in=1000, seed=seed), covariate_mask=["SST"])

    # 拟合在标准化协变量上进行, 真值换算到同一尺度
    sst = CovariateScaling.from_dict(chain.metadata["covariate_scaling"]).transforms["SST"]
    expected = {
        "beta_intercept": truth["intercept"] + truth["SST"] * sst.mean,
        "beta_SST": truth["SST"] * sst.sd,
        **{k: v for k, v in truth.items() if k not in ("intercept", "SST")},
    }
    return [
        abs(chain.column(name).mean() - value) <= 2 * chain.column(name).std(ddof=1)
        for name, value in expected.items()
    ]


@pytest.mark.slow
def test_sixty_season_recovery():
    hits = [hit for group in IntensityGroup for seed in range(20) for hit in recovery_hits(group, seed)]
    assert len(hits) == 20 * (6 + 5)
    assert np.mean(hits) >= 0.9

from .mcmc import MCMCConfig, PosteriorChain, run_metropolis_within_gibbs
from .seasonal import SeasonalModel, fit_seasonal, predict_season
from .cyclone_gev import fit_bayes, fit_mle, predict_cyclone
from .scoring import delta_score, rarity

__all__ = [
    "MCMCConfig",
    "PosteriorChain",
    "run_metropolis_within_gibbs",
    "SeasonalModel",
    "fit_seasonal",
    "predict_season",
    "fit_bayes",
    "fit_mle",
    "predict_cyclone",
    "delta_score",
    "rarity",
]

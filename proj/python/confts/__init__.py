"""Conformal prediction intervals for multi-step time-series forecasts."""

from ._confts import (
    AciState,
    ConftsError,
    aci_update,
    conformal_quantile,
    cqr_interval,
    evaluate,
    gen_synthetic,
    init_gamma,
    miou,
    picp,
    pinaw,
    pinball_loss,
    run,
    run_experiment,
    score_absolute,
    score_cqr,
)

__all__ = [
    "AciState",
    "ConftsError",
    "aci_update",
    "conformal_quantile",
    "cqr_interval",
    "evaluate",
    "gen_synthetic",
    "init_gamma",
    "miou",
    "picp",
    "pinaw",
    "pinball_loss",
    "run",
    "run_experiment",
    "score_absolute",
    "score_cqr",
]

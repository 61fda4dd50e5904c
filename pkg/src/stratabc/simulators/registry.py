"""Model lookup by id, used by the experiment service."""

from typing import Any, Callable

from stratabc.exceptions import ConfigError
from stratabc.simulators.base import Simulator
from stratabc.simulators.gandk import GAndK
from stratabc.simulators.gaussian import GaussianToy
from stratabc.simulators.ising import IsingModel
from stratabc.simulators.lotka_volterra import LotkaVolterra

MODELS: dict[str, Callable[..., Simulator]] = {
    "gaussian": GaussianToy,
    "gandk": GAndK,
    "ising": IsingModel,
    "lotka_volterra": LotkaVolterra,
}


def get_model(model_id: str, **options: Any) -> Simulator:
    try:
        factory = MODELS[model_id]
    except KeyError:
        raise ConfigError([f"unknown model {model_id!r}; expected one of {sorted(MODELS)}"]) from None
    try:
        return factory(**options)
    except TypeError as e:
        raise ConfigError([f"invalid options for model {model_id!r}: {e}"]) from e

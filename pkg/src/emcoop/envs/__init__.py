from .base import ConceptError, ConceptExecutor, ConceptOutcome, Environment
from .cube import CubeEnv
from .craftlite import CraftliteEnv

ENVS = {"cube": CubeEnv, "craftlite": CraftliteEnv}


def make_env(name: str, difficulty: str, n_agents: int, seed: int, **kw) -> Environment:
    if name not in ENVS:
        raise ValueError(f"unknown environment: {name!r}")
    return ENVS[name].generate(difficulty=difficulty, n_agents=n_agents, seed=seed, **kw)

"""Rely/guarantee proof checking and exhaustive exploration for small concurrent programs."""

from .checks import Verdict, implies_pred, implies_rel, stable
from .clh import ClhConfig, build, build_theorem_derivations
from .explorer import Bounds, check_quintuple_semantic, explore, replay
from .rg import Quintuple, check_derivation, load_derivation
from .state import State, Universe

__version__ = "0.1.0"

__all__ = [
    "Verdict", "implies_pred", "implies_rel", "stable", "ClhConfig", "build",
    "build_theorem_derivations", "Bounds", "check_quintuple_semantic", "explore", "replay",
    "Quintuple", "check_derivation", "load_derivation", "State", "Universe",
]

"""Leakage games: a defender mixes channels, an attacker picks an action, utility is vulnerability."""

from .channel import Channel, ChannelError, Prior, compose_convex, decompose, pad_compatible, validate_channel
from .game import LeakageGame, MixedStrategy, attacker_best_response, mixed_utility, pure_utility, utility_table
from .solver import SolverConfig, solve_lp_bayes, solve_minimax
from .vulnerability import Bayes, CustomConvex, GVulnerability, leakage, posterior_vulnerability

__version__ = "0.1.0"

__all__ = [
    "Bayes",
    "Channel",
    "ChannelError",
    "CustomConvex",
    "GVulnerability",
    "LeakageGame",
    "MixedStrategy",
    "Prior",
    "SolverConfig",
    "attacker_best_response",
    "compose_convex",
    "decompose",
    "leakage",
    "mixed_utility",
    "pad_compatible",
    "posterior_vulnerability",
    "pure_utility",
    "solve_lp_bayes",
    "solve_minimax",
    "utility_table",
    "validate_channel",
]

"""Expected-utility maximization under proportional transaction costs.

Thin wrapper over the compiled ``_tcmarket`` module: scenarios and reports
travel as canonical JSON documents; ``loads`` turns a report into a dict.
"""

import json as _json

try:  # installed layout: extension lives inside the package
    from . import _tcmarket as _impl
except ImportError:  # development layout: extension directly on sys.path
    import _tcmarket as _impl

MarketError = _impl.MarketError
arbitrage = _impl.arbitrage
brute_force_value = _impl.brute_force_value
counterexample = _impl.counterexample
diagnose = _impl.diagnose
pins = _impl.pins
scps = _impl.scps
shadow = _impl.shadow
solve = _impl.solve
solve_value = _impl.solve_value
validate = _impl.validate

__all__ = [
    "MarketError",
    "arbitrage",
    "brute_force_value",
    "counterexample",
    "diagnose",
    "loads",
    "pins",
    "scps",
    "shadow",
    "solve",
    "solve_value",
    "validate",
]


def loads(report: str):
    """Parse a structured report (or scenario) document into python objects."""
    return _json.loads(report)

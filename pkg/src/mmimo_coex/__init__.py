"""Monte-Carlo system simulator for indoor unlicensed-band networks.

Compares three deployments on one floor: three single-antenna Wi-Fi APs,
the same layout with the central AP upgraded to massive MIMO, and a central
massive-MIMO AP that additionally steers radiation nulls towards coexisting
nodes during both channel sensing and data transmission.
"""

__version__ = "0.1.0"

from .config import ScenarioConfig, load_config
from .engine import run_simulation
from .results import ResultSet, aggregate_cdf, emit_results

__all__ = [
    "ScenarioConfig",
    "load_config",
    "run_simulation",
    "ResultSet",
    "aggregate_cdf",
    "emit_results",
    "__version__",
]

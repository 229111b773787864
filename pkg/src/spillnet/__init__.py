"""Volatility spillover networks from daily OHLC panels.

The pipeline: range-based volatility estimation (ingest), rolling-window
elastic-net VAR (varnet), generalized forecast-error variance decomposition
and connectedness tables (fevd), force-directed layouts with day-to-day
continuity (layout), and a snapshot-per-date driver (rolling). The ``cli``
module ties everything together as a batch command-line tool.
"""

from spillnet.ingest import (
    FirmMeta,
    OhlcBar,
    TradingCalendar,
    VolatilityPanel,
    garman_klass,
)
from spillnet.varnet import ElasticNetFit, LagDesign, VarModel, elastic_net_fit, fit_var
from spillnet.fevd import (
    ConnectednessTable,
    ImpulseResponseSet,
    build_table,
    gfevd,
    impulse_responses,
    normalize_rows,
    table_diff,
)
from spillnet.layout import ForceState, LayoutGraph, LayoutParams, edges_from_table, run_layout
from spillnet.rolling import NetworkSnapshot, RollingConfig, enumerate_windows, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "OhlcBar",
    "FirmMeta",
    "TradingCalendar",
    "VolatilityPanel",
    "garman_klass",
    "LagDesign",
    "ElasticNetFit",
    "VarModel",
    "elastic_net_fit",
    "fit_var",
    "ImpulseResponseSet",
    "ConnectednessTable",
    "impulse_responses",
    "gfevd",
    "normalize_rows",
    "build_table",
    "table_diff",
    "LayoutGraph",
    "ForceState",
    "LayoutParams",
    "edges_from_table",
    "run_layout",
    "RollingConfig",
    "NetworkSnapshot",
    "enumerate_windows",
    "run_pipeline",
]

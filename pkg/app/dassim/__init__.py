"""
Dual-polarization Rayleigh backscatter simulator for phase-sensitive OTDR.
"""

from .das_campaign import CampaignRunner, crossing_fractions, run_campaign, snr_summary
from .das_errors import (
    ConfigError,
    InvalidArgumentError,
    PartialResultsError,
    PersistenceError,
    ResourceBudgetError,
    SimulationError,
)
from .das_fiber import dual_pass_response, synthesize
from .das_interrogation import estimate_channel, fast_channel_sim, golay_pair, simulate_backscatter
from .das_models import (
    CampaignConfig,
    CampaignStats,
    ChannelEstimate,
    FiberConfig,
    FiberRealization,
    PhaseTraceSet,
    ProbeConfig,
    Scheme,
    StdvProfile,
)

__all__ = [
    'CampaignRunner',
    'run_campaign',
    'crossing_fractions',
    'snr_summary',
    'synthesize',
    'dual_pass_response',
    'golay_pair',
    'simulate_backscatter',
    'estimate_channel',
    'fast_channel_sim',
    'CampaignConfig',
    'CampaignStats',
    'ChannelEstimate',
    'FiberConfig',
    'FiberRealization',
    'PhaseTraceSet',
    'ProbeConfig',
    'Scheme',
    'StdvProfile',
    'SimulationError',
    'ConfigError',
    'InvalidArgumentError',
    'PartialResultsError',
    'PersistenceError',
    'ResourceBudgetError',
]

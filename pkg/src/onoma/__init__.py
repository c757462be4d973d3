"""Indoor visible light communication simulator for power-domain NOMA.

Link- and network-level building blocks for LED downlinks: Lambertian LOS
channel geometry, user power allocation (FPA, GRPA, exhaustive search),
a DCO-OFDM PHY with superposition coding and SIC detection, multi-cell
interference classification with cell zooming and FOV-based handover,
hybrid OMA/NOMA user pairing, and a config-driven scenario runner.
"""

__version__ = "0.1.0"

from .allocation import (InfeasibleError, PowerVector, SortedUserChannels,
                         fpa, grpa, optimal_search, sort_users)
from .geometry import (Luminaire, PowerMap, Receiver, RoomConfig,
                       lambert_order, los_gain, power_map)
from .link import (BerEstimate, CsiModel, LinkScenario, SicResult,
                   UserSignal, apply_channel, ber_montecarlo,
                   coverage_probability, impair_csi, rate, rate_ofdma,
                   sic_decode, sinr_noma, superpose)
from .multicell import (AreaClass, AssociationMap, CellLayout, GreyHoleError,
                        ZoomResult, assign_frequency_groups, associate_users,
                        cell_zoom, classify_area, coverage_set,
                        handover_count)
from .ofdm import DcoOfdmConfig, dco_ofdm_demodulate, dco_ofdm_modulate
from .pairing import PairingPlan, pair_max_disparity, pair_random, schedule_hybrid

__all__ = [
    "__version__",
    "AreaClass", "AssociationMap", "BerEstimate", "CellLayout", "CsiModel",
    "DcoOfdmConfig", "GreyHoleError", "InfeasibleError", "LinkScenario",
    "Luminaire", "PairingPlan", "PowerMap", "PowerVector", "Receiver",
    "RoomConfig", "SicResult", "SortedUserChannels", "UserSignal",
    "ZoomResult", "apply_channel", "assign_frequency_groups",
    "associate_users", "ber_montecarlo", "cell_zoom", "classify_area",
    "coverage_probability", "coverage_set", "dco_ofdm_demodulate",
    "dco_ofdm_modulate", "fpa", "grpa", "handover_count", "impair_csi",
    "lambert_order", "los_gain", "optimal_search", "pair_max_disparity",
    "pair_random", "power_map", "rate", "rate_ofdma", "schedule_hybrid",
    "sic_decode", "sinr_noma", "sort_users", "superpose",
]

"""Lane-parallel Metropolis simulation of two-dimensional spin models.

The update engine emulates a hardware design: spins on one checkerboard
colour are updated in row blocks by independent lanes, each drawing 12-bit
random numbers from a shared 32-bit LFSR XORed with its own 12-bit LFSR,
and accepting moves through a fixed-point Boltzmann lookup table.
"""

__version__ = "0.1.0"

from .analysis import (
    TC_EXACT,
    ExactAverages,
    LorentzianFit,
    ScalingFit,
    TcFit,
    exhaustive_oracle,
    lorentzian_fit,
    onsager_m,
    power_law_fit,
    tc_extrapolate,
)
from .errors import CapacityError, ConfigurationError, FitError, InsufficientDataError, ModelMismatchError
from .kernel import (
    BoltzmannTable,
    RowBlockSchedule,
    build_boltzmann_table,
    half_sweep,
    mcs,
    row_block_schedule,
    run_lane_mcs,
    sequential_mcs_reference,
    update_spin,
)
from .lattice import BLACK, WHITE, Init, Model, ModelParams, SpinLattice, new_lattice
from .observables import PointStats, Protocol, SampleSeries, run_temperature_point, susceptibility, temperature_sweep
from .rng import LaneRngBank, export_bitstream, lfsr12_next, lfsr32_next, seed_lanes

__all__ = [
    "BLACK",
    "WHITE",
    "TC_EXACT",
    "BoltzmannTable",
    "CapacityError",
    "ConfigurationError",
    "ExactAverages",
    "FitError",
    "Init",
    "InsufficientDataError",
    "LaneRngBank",
    "LorentzianFit",
    "Model",
    "ModelMismatchError",
    "ModelParams",
    "PointStats",
    "Protocol",
    "RowBlockSchedule",
    "SampleSeries",
    "ScalingFit",
    "SpinLattice",
    "TcFit",
    "build_boltzmann_table",
    "exhaustive_oracle",
    "export_bitstream",
    "half_sweep",
    "lfsr12_next",
    "lfsr32_next",
    "lorentzian_fit",
    "mcs",
    "new_lattice",
    "onsager_m",
    "power_law_fit",
    "row_block_schedule",
    "run_lane_mcs",
    "run_temperature_point",
    "seed_lanes",
    "sequential_mcs_reference",
    "susceptibility",
    "tc_extrapolate",
    "temperature_sweep",
    "update_spin",
]

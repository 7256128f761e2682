"""nlclaw: finite-volume simulation of nonlocal multi-population transport.

Densities move with a velocity obtained by applying a bounded closure to the
gradient of their kernel-smoothed average; the resulting continuity system
conserves mass, preserves positivity, propagates supports at finite speed,
keeps well-separated clusters independent, and is reversible in time, which
doubles as a toy encryption scheme.
"""

__version__ = "0.1.0"

from .grid import (
    BoundingBox,
    DensityField,
    Grid,
    cell_center,
    l1_norm,
    region_mass,
    support_bbox,
    total_mass,
)
from .errors import ConfigError, ParseError, StepRejectionError
from .kernels import (
    Kernel,
    build_bump_kernel_1d,
    build_cosine_kernel_2d,
    build_radial_kernel,
    convolve_gradient,
    kernel_from_spec,
)
from .nlcd import read_nlcd, write_nlcd
from .velocity import VelocityField, VelocityModel, assemble_velocity, eval_velocity
from .scheme import SchemeConfig, advance, cfl_timestep, step, sweep_axis
from .solver import (
    Ball,
    RunReport,
    check_cluster_independence,
    check_propagation_bound,
    check_symmetry,
    evolve,
)
from .characteristics import (
    CharacteristicPath,
    PicardResult,
    SampledVelocity,
    lagrangian_density,
    lagrangian_field,
    picard_solve,
    trace_characteristic,
)
from .crypt import (
    CryptKey,
    KeyQualityWarning,
    RoundtripReport,
    decrypt,
    encrypt,
    ingest_payload_1d,
    ingest_payload_2d,
    roundtrip_report,
)
from .scenarios import Scenario, parse_scenario, preset_names, preset_text, run

__all__ = [name for name in dir() if not name.startswith("_")]

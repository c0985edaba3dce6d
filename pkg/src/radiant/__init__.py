"""Collective (super- and subradiant) decay of single-excitation atomic media
coupled through scalar photons, with an optional exponential correlation
regulator."""

from .continuum import (
    DispersionCurve,
    PeakSummary,
    Regime,
    dispersion,
    dispersion_curve,
    kernel_transform_quadrature,
    locate_peak,
    mode_count_dicke,
    mode_count_identity_check,
    mode_count_shell,
    peak_summary,
)
from .dynamics import (
    DecayTrace,
    WavePacket,
    bilinear_quotient,
    evolve,
    plane_wave_quotient_experiment,
    rayleigh_quotient,
    wave_packet,
)
from .errors import DomainError, NumericalError, PoleError, RadiantError, RegimeError
from .kernel import CouplingMatrix, assemble_matrix, eval_kernel
from .medium import (
    Geometry,
    PhysicalParams,
    Sample,
    density_to_count,
    dicke_cluster,
    read_sample,
    uniform_ball_sample,
    write_sample,
)
from .spectra import (
    Spectrum,
    SpectrumStats,
    classify,
    eigendecompose,
    superradiant_count_prediction,
    superradiant_rate_prediction,
)

__version__ = "0.1.0"

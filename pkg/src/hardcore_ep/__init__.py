"""Non-Hermitian hardcore Bose-Hubbard lattices: condensate eigenstates,
exceptional-point structure and non-unitary dynamics."""

__version__ = "0.1.0"

from .errors import ConfigError, DomainError, HardcoreEPError, NumericalError, ResourceLimitError
from .lattice import (
    Bond,
    LatticeSpec,
    ResonantParams,
    bonds,
    chain,
    condensate_energy,
    critical_momenta,
    resonant_parameters,
    site_coords,
    site_index,
    site_phases,
)
from .fockspace import (
    FockBasis,
    SparseOperator,
    StateVector,
    build_hamiltonian,
    enumerate_basis,
    hop_element,
    number_operator,
)
from .states import (
    CondensateSpec,
    WavepacketSpec,
    biorthogonal_overlap,
    condensate,
    condensate_state,
    correlation,
    gaussian_wavepacket,
    product_state,
)
from .spectra import SpectralReport, Tolerances, classify, eigendecompose, ep_order_free_boson, verify_eigenstate
from .dynamics import (
    ObservableSeries,
    Trajectory,
    evolve,
    fidelity,
    fit_power_law,
    site_profile,
    total_probability,
)

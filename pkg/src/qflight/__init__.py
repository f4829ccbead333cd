"""Entanglement dynamics of qubits moving through leaky cavities.

Solves the rotating-frame memory-kernel Volterra equation for the
excited-state amplitude of a qubit crossing a lossy cavity, builds the
one- and two-qubit density matrices, tracks concurrence and the
time-dependent decay rate, and reproduces the published velocity,
bandwidth, and detuning studies as CSV plus rendered figures.
"""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    CavityGeometry,
    CouplingRegime,
    FeasibilityReport,
    ParameterError,
    SystemParams,
    check_feasibility,
    coupling_regime,
    desk_scale_geometry,
    map_velocity,
    params_from_mapping,
    validate_params,
)
from .kernel import (  # noqa: F401
    ExponentialKernel,
    KernelError,
    eval_exponential_kernel,
    residue_kernel,
    shape_function,
    spectral_density,
)
from .quadrature import (  # noqa: F401
    QuadratureConfig,
    QuadratureConvergenceError,
    SplineLagKernel,
    quadrature_kernel,
)
from .volterra import (  # noqa: F401
    AmplitudeTrajectory,
    BlowupError,
    TimeGrid,
    make_grid,
    solve_aux,
    solve_history,
    stationary_analytic,
)
from .dynamics import (  # noqa: F401
    RateSeries,
    StateError,
    assemble_two_qubit,
    rate_series,
    single_qubit_state,
    validate_density_matrix,
)
from .entanglement import (  # noqa: F401
    ConcurrenceValue,
    bell_psi,
    concurrence,
    concurrence_general,
    concurrence_x,
)
from .harness import (  # noqa: F401
    InitialState,
    Observable,
    Scenario,
    ScenarioError,
    ScenarioResult,
    SweepResult,
    figure_preset,
    read_config,
    run_scenario,
    sweep_param,
    sweep_velocity,
    write_outputs,
)

"""Pseudo-spectral simulation of nematic liquid-crystal hydrodynamics.

An incompressible flow coupled to a Ginzburg-Landau director field on the
periodic box, plus a Lagrangian-averaged variant, with diagnostics aimed at
checking energy laws, conservation properties, and maximum principles.
"""

__version__ = "0.1.0"

from .fields import (
    Field,
    Grid,
    VectorField,
    curl,
    dealias,
    def_tensor,
    divergence,
    gradient,
    helmholtz_inverse,
    hs_seminorm,
    jacobian,
    l2_inner,
    laplacian,
    leray_project,
    lp_norm,
    make_grid,
    to_physical,
    to_spectral,
    vector_field,
)
from .dynamics import (
    BlowUpError,
    SimParams,
    SimState,
    advect,
    director_rhs,
    elastic_stress_div,
    gl_force,
    gl_potential,
    initial_state,
    lans_correction,
    make_params,
    momentum_rhs,
    run,
    step,
)
from .diagnostics import (
    RATIO_FAMILIES,
    DiagnosticsRecord,
    averaged_energy,
    dissipation,
    energy_law_residual,
    frank_energy,
    gn_probe,
    gn_ratios,
    helicity,
    record,
    total_energy,
)
from .io_cli import (
    Config,
    append_csv,
    cli,
    parse_config,
    read_snapshot,
    serialize_config,
    write_snapshot,
)

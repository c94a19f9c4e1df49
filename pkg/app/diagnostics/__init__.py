# Diagnostics package
from app.diagnostics.eta import (
    compute_eta,
    eta_residual,
    eta_time_derivative_h1_sq,
    eta_velocity_identity,
)
from app.diagnostics.energy import energy_report, relaxed_energy_report, time_derivatives
from app.diagnostics.layer import convergence_fit, estimate_layer
from app.diagnostics.oracles import (
    heat_mode_factor,
    layer_profile_oracle,
    linear_mode_eigenvalues,
    linear_mode_fields,
    linear_mode_oracle,
)

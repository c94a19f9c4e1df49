# Physics package
from app.physics.eos import (
    FlowSnapshot,
    check_positivity,
    eos_density,
    make_constants,
    perturbed_density,
    rescale_fast_to_slow,
    rescale_slow_to_fast,
    zeta_from_eos,
)

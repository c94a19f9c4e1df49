# Numerics package
from app.numerics.spectral import (
    SpectralField,
    SpectralOps,
    dealias,
    derivative,
    divergence,
    gradient,
    l2_norm_sq,
    laplacian,
    sobolev_norm_sq,
    spectral_ops,
    sup_norm,
    vector_sup_norm,
)

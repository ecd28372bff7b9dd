from .spectral import SpectralMixin, wavenumbers, integer_radius, dealias_mask
from .norms import NormsMixin

__all__ = ["SpectralMixin", "NormsMixin", "wavenumbers", "integer_radius", "dealias_mask"]

"""Equiaffine invariants of level sets, ruled zero-mean-curvature hypersurfaces and the affine normal flow."""
__version__ = "0.1.0"

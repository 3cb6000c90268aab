"""Duct grid: uniform along the axis, periodic unit torus transversally."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DuctGrid:
    """[-L, L) x T^(d-1), endpoint-exclusive and uniform in xi."""

    L: float
    n_xi: int
    n_perp: int
    d: int = 2

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError("duct dimension must be 2 or 3")
        if self.n_xi < 16 or self.n_perp < 4:
            raise ValueError("grid too small")

    @property
    def dxi(self):
        return 2.0 * self.L / self.n_xi

    @property
    def xi(self):
        return -self.L + self.dxi * np.arange(self.n_xi)

    @property
    def perp_axes(self):
        return tuple(range(1, self.d))

    @property
    def shape(self):
        return (self.n_xi,) + (self.n_perp,) * (self.d - 1)

    def perp_coords(self):
        return [np.arange(self.n_perp) / self.n_perp for _ in range(self.d - 1)]

    def meshes(self):
        """Coordinate arrays (xi, x_perp...) broadcast to the full grid shape."""
        axes = [self.xi] + self.perp_coords()
        return np.meshgrid(*axes, indexing="ij")

    def integrate(self, field):
        """int over the duct: dxi * sum of transverse means."""
        field = np.asarray(field)
        if field.ndim == 1:
            return float(self.dxi * field.sum())
        return float(self.dxi * field.mean(axis=self.perp_axes).sum())

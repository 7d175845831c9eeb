from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class DescriptorConfig:
    """Settings for the low-level baseline descriptors."""

    hist_bins: int = 256
    gist_scales: int = 4
    gist_orientations: int = 8
    gist_grid: int = 4
    gist_size: int = 128
    lbp_neighbors: int = 8
    lbp_radius: int = 1
    lbp_mode: str = "uniform"
    patch_size: int = 16
    patch_stride: int = 8
    patch_cells: int = 4
    patch_bins: int = 8
    codebook_size: int = 1000
    pyramid_levels: tuple = (1, 2)

    def __post_init__(self):
        if self.lbp_mode not in ("uniform", "full", "riu2"):
            raise ValueError(f"unknown LBP mode {self.lbp_mode!r}")
        if self.lbp_neighbors != 8 or self.lbp_radius != 1:
            raise ValueError("only the 8-neighbour, radius-1 LBP operator is supported")
        if self.patch_size % self.patch_cells:
            raise ValueError("patch_size must be a multiple of patch_cells")

    @property
    def gist_dim(self) -> int:
        return self.gist_scales * self.gist_orientations * self.gist_grid ** 2

    @property
    def lbp_dim(self) -> int:
        p = self.lbp_neighbors
        return {"uniform": p * (p - 1) + 3, "full": 2 ** p, "riu2": p + 2}[self.lbp_mode]

    @property
    def patch_dim(self) -> int:
        return self.patch_cells ** 2 * self.patch_bins

    @property
    def pyramid_regions(self) -> int:
        return sum(level * level for level in self.pyramid_levels)

    @property
    def bow_dim(self) -> int:
        return self.codebook_size * self.pyramid_regions

    @property
    def lowlevel_dim(self) -> int:
        return 3 * self.hist_bins + self.gist_dim + self.lbp_dim + self.bow_dim

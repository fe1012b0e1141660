"""Pipeline configuration shared by the CLI and the service."""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["PipelineConfig"]


@dataclass(frozen=True)
class PipelineConfig:
    overlap_threshold: float = 0.5
    cleanup_radius: int = 1
    depth_bins: int = 10
    # None = auto: max(1024, ink_count // 16)
    sample_points: int | None = None
    binarize_threshold: int = 128
    # None = null backend (no completion, layers flagged as stubbed)
    inpaint_backend: str | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.overlap_threshold <= 1.0:
            raise ValueError(f"overlap_threshold must be in (0, 1], got {self.overlap_threshold}")
        if self.cleanup_radius < 0:
            raise ValueError(f"cleanup_radius must be >= 0, got {self.cleanup_radius}")
        if self.depth_bins < 2:
            raise ValueError(f"depth_bins must be >= 2, got {self.depth_bins}")
        if self.sample_points is not None and self.sample_points < 1:
            raise ValueError(f"sample_points must be >= 1, got {self.sample_points}")
        if not 0 <= self.binarize_threshold <= 255:
            raise ValueError(f"binarize_threshold must be in [0, 255], got {self.binarize_threshold}")

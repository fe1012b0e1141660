"""Instance-segmentation post-processing, layering, and evaluation for scene sketches.

The package consumes externally produced detections, candidate masks,
and depth maps, and produces disjoint instance label maps, depth-ordered
editable layer stacks, synthetic annotated benchmark scenes, and a
detection/segmentation metric suite.
"""

from .config import PipelineConfig
from .pipeline import PipelineError, PipelineResult, RunReport, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "PipelineConfig",
    "PipelineError",
    "PipelineResult",
    "RunReport",
    "run_pipeline",
    "__version__",
]

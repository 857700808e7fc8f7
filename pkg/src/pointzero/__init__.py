"""Zero-shot 3D shape classification via multi-view depth projection.

Meshes or point clouds are sampled into dense clouds, centrally projected
into depth maps, optionally style-transferred under per-class prompts,
encoded, and fused through a K x K probability matrix into predictions.
"""

from .backends import (
    Backend,
    BackendConfig,
    BackendError,
    Embedding,
    MockBackend,
    PlantedBackend,
    RemoteBackend,
    planted_mock,
)
from .dataset import DatasetManifest, evaluate, scan_dataset
from .geometry import Mesh, ParseError, PointCloud, normalize_unit, parse_off, parse_points, to_off, to_xyz
from .pipeline import RunConfig, run_classify, run_pipeline, run_project
from .projection import (
    DepthMap,
    RasterConfig,
    ViewConfig,
    maxpool_densify,
    project,
    to_image8,
    view_preset,
)
from .sampling import SamplingParams, knn_densify, sample_mesh
from .zeroshot import (
    CLIP_TEMPLATE,
    DIFFUSION_TEMPLATE,
    DIFFUSION_TEMPLATE_OCCLUDED,
    FusionParams,
    ProbabilityMatrix,
    PromptTemplate,
    TextClassifier,
    aggregate_probability_matrix,
    build_text_classifier,
    fuse_baseline,
    fuse_strategy_geo,
    fuse_strategy_sum,
    image_logits,
    predict,
)

__version__ = "0.1.0"

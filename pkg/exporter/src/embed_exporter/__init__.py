"""Produce engine-loadable EEF1 embedding files from a joint-embedding
model (real CLIP checkpoint or deterministic hashed stand-in) and serve
the /embed provider contract over HTTP."""

from .errors import ExporterError, ImageDecodeError, ModelError
from .export import (
    ExportJob,
    export_grid_bundle,
    export_text_embeddings,
    grid_boxes,
    run_export_job,
)
from .models import ClipModel, HashedProjectionModel, TextImageModel, parse_model_spec
from .service import create_app, serve

__version__ = "0.1.0"

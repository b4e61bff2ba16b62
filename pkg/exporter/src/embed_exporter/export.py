"""Export jobs: turn labels and images into engine-loadable EEF1 files."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from PIL import Image, UnidentifiedImageError

from . import eef1
from .errors import ImageDecodeError, ModelError
from .models import TextImageModel

GRID_GLOBAL_LABEL = "global"


@dataclass(frozen=True)
class ExportJob:
    """A batch of label strings and/or images destined for EEF1 files.

    With several images, each gets its own file named
    ``<stem>_<image stem>.eef1`` next to ``output_path``; labels (and a
    single image) write to ``output_path`` itself.
    """

    model_id: str
    output_path: Path
    labels: tuple[str, ...] = ()
    images: tuple[Path, ...] = ()
    grid: tuple[int, int] | None = field(default=None)


def run_export_job(model: TextImageModel, job: ExportJob) -> list[Path]:
    """Execute a job; returns every file written."""
    if job.model_id != model.model_id:
        raise ModelError(
            f"job wants model {job.model_id!r}, got {model.model_id!r}"
        )
    if not job.labels and not job.images:
        raise ValueError("job has neither labels nor images")
    if job.images and job.grid is None:
        raise ValueError("image export needs a grid (use 1x1 for whole-image)")
    out = Path(job.output_path)
    written: list[Path] = []
    if job.labels:
        written.append(export_text_embeddings(model, list(job.labels), out))
    for image in job.images:
        image = Path(image)
        if len(job.images) == 1 and not job.labels:
            target = out
        else:
            target = out.with_name(f"{out.stem}_{image.stem}.eef1")
        rows, cols = job.grid
        written.append(export_grid_bundle(model, image, rows, cols, target))
    return written


def export_text_embeddings(
    model: TextImageModel, labels: list[str], output_path: str | Path
) -> Path:
    """One normalized vector per label; deterministic for a fixed model."""
    ordered = list(labels)
    if len(set(ordered)) != len(ordered):
        raise ValueError("duplicate labels in export list")
    try:
        vectors = model.embed_texts(ordered)
    except ModelError:
        raise
    except Exception as exc:
        raise ModelError(f"text embedding failed: {exc}") from exc
    if len(ordered) == 0:
        return eef1.write(output_path, [], vectors.reshape(0, model.dim), model.dim)
    return eef1.write(
        output_path, ordered, eef1.normalize_rows(vectors), model.dim
    )


def grid_boxes(width: int, height: int, rows: int, cols: int):
    """Floor-division cell rectangles; the last row/column absorbs the
    remainder. Row-major (left, top, right, bottom) boxes."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    cell_w = width // cols
    cell_h = height // rows
    if cell_w < 1 or cell_h < 1:
        raise ValueError(f"image {width}x{height} too small for a {rows}x{cols} grid")
    boxes = []
    for r in range(rows):
        for c in range(cols):
            left = c * cell_w
            top = r * cell_h
            right = width if c == cols - 1 else (c + 1) * cell_w
            bottom = height if r == rows - 1 else (r + 1) * cell_h
            boxes.append((left, top, right, bottom))
    return boxes


def load_image(path: str | Path) -> Image.Image:
    try:
        with Image.open(path) as img:
            return img.convert("RGB")
    except (UnidentifiedImageError, OSError) as exc:
        raise ImageDecodeError(f"cannot decode image {path}: {exc}") from exc


def export_grid_bundle(
    model: TextImageModel,
    image_path: str | Path,
    rows: int,
    cols: int,
    output_path: str | Path,
) -> Path:
    """Crop the image into rows x cols cells, embed each crop plus the
    uncropped image, and write rows*cols + 1 entries with the reserved
    cell_r_c / global labels."""
    image = load_image(image_path)
    crops = [image.crop(box) for box in grid_boxes(image.width, image.height, rows, cols)]
    labels = [f"cell_{r}_{c}" for r in range(rows) for c in range(cols)]
    labels.append(GRID_GLOBAL_LABEL)
    try:
        vectors = model.embed_images(crops + [image])
    except ModelError:
        raise
    except Exception as exc:
        raise ModelError(f"image embedding failed: {exc}") from exc
    return eef1.write(output_path, labels, eef1.normalize_rows(vectors), model.dim)

import io
from pathlib import Path

import pytest

from secondlook import BBox, Detection, fuse, parse_annotations, read_dimensions, simulate

REPO_ROOT = Path(__file__).resolve().parent.parent
TOY_DIR = REPO_ROOT / "data" / "toy"
GOLDEN_DIR = Path(__file__).resolve().parent / "goldens"


def det(x_min, y_min, x_max, y_max, confidence=0.9, label=None) -> Detection:
    return Detection(box=BBox(x_min, y_min, x_max, y_max), confidence=confidence, label=label)


@pytest.fixture(scope="session")
def toy_paths() -> dict:
    return {
        "annotations": TOY_DIR / "annotations.csv",
        "dimensions": TOY_DIR / "dimensions.csv",
    }


@pytest.fixture(scope="session")
def toy_cases(toy_paths):
    dims = read_dimensions(toy_paths["dimensions"])
    parsed = parse_annotations(toy_paths["annotations"], dims)
    assert not parsed.rejects
    return parsed.cases


@pytest.fixture(scope="session")
def toy_fused(toy_cases):
    return {case.image_id: fuse(case.annotations) for case in toy_cases}


@pytest.fixture(scope="session")
def toy_dataset(toy_cases):
    """The canonical simulated-miss dataset most tests share: seed 42, defaults."""
    return simulate(toy_cases, seed=42)


@pytest.fixture(scope="session")
def tiny_png() -> bytes:
    from PIL import Image

    buffer = io.BytesIO()
    Image.new("L", (4, 4), color=128).save(buffer, format="PNG")
    return buffer.getvalue()

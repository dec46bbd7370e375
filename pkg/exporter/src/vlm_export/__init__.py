from .capture import CaptureConfig, export, plan_tiling, tile_image
from .model import TinyVlm, TinyVlmConfig, load_model, tokenize
from .writer import write_engine_bundle

__all__ = [
    "CaptureConfig",
    "TinyVlm",
    "TinyVlmConfig",
    "export",
    "load_model",
    "plan_tiling",
    "tile_image",
    "tokenize",
    "write_engine_bundle",
]

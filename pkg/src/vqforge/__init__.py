"""Vector-quantization image compression with IDE-LBG codebook design."""

from .ide import Candidate, GenerationStats, IdeConfig, ide_optimize
from .imaging import (
    GrayImage,
    TrainingSet,
    assemble_blocks,
    extract_blocks,
    load_image,
    save_image,
)
from .lbg import LbgConfig, LbgTrace, centroid_update, lbg_refine
from .pipeline import RunReport, benchmark_sweep, train_ide_lbg, train_lbg_random
from .quantizer import (
    Codebook,
    IndexMap,
    bpp,
    decode,
    distortion,
    encode,
    mse,
    nearest_codeword,
    psnr,
)

__version__ = "0.1.0"

__all__ = [
    "Candidate", "Codebook", "GenerationStats", "GrayImage", "IdeConfig", "IndexMap",
    "LbgConfig", "LbgTrace", "RunReport", "TrainingSet", "assemble_blocks",
    "benchmark_sweep", "bpp", "centroid_update", "decode", "distortion", "encode",
    "extract_blocks", "ide_optimize", "lbg_refine", "load_image", "mse",
    "nearest_codeword", "psnr", "save_image", "train_ide_lbg", "train_lbg_random",
]

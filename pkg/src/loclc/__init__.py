"""Lossless image compression with a local autoregressive model.

Three bit-compatible decoding schemes -- sequential, wavefront-parallel and
sheared -- read the same compressed stream.
"""

from .codec import CompressedStream, Scheme, decode, decode_parallel, \
    decode_sequential, decode_sheared, encode, measure
from .errors import LoclcError
from .model import LocalModel, ModelConfig, UniformModel, WeightSet, \
    load_weights, random_weights, save_weights, shear_weights

__version__ = "0.1.0"

__all__ = [
    "CompressedStream", "Scheme", "encode", "decode", "decode_sequential",
    "decode_parallel", "decode_sheared", "measure", "LocalModel",
    "UniformModel", "ModelConfig", "WeightSet", "load_weights",
    "save_weights", "shear_weights", "random_weights", "LoclcError",
    "__version__",
]

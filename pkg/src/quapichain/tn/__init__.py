"""Matrix product states and operators: containers, compression, contraction."""

from quapichain.tn.core import MPO, MPS, apply_and_compress, compress

__all__ = ["MPO", "MPS", "apply_and_compress", "compress"]

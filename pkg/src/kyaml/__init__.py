"""K-YAML toolchain: specs, claims, a miniature VM, a symbolic prover and a mutation harness."""

__version__ = "0.1.0"

from pathlib import Path as _Path

CORPUS = _Path(__file__).parent / "corpus"

"""Multi-agent Chellas stit logic: syntax, proofs, finite models, bisimulation."""

__version__ = "0.1.0"

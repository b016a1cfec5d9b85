"""hlab: deformed modular q-expansions, period lattices, and L-value diagnostics."""

__version__ = "0.1.0"

"""One-component fourth-order form of the Dirac equation: reduction, reconstruction, verification."""

__version__ = "0.1.0"

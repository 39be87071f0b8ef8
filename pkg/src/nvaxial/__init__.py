"""NV-center/cantilever probe spectroscopy and axial-vector exclusion limits."""

__version__ = "0.1.0"

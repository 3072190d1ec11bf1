"""Video super-resolution with temporal group attention."""
__version__ = "0.1.0"

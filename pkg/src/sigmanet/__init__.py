"""Sign-Magnetic Laplacian toolkit and the SigMaNet spectral GCN."""

__version__ = "0.1.0"

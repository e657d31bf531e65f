"""Sampling laboratory for Langevin dynamics, LMC and the Proximal Sampler on log-concave targets."""
__version__ = "0.1.0"

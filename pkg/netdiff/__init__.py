"""
netdiff: stochastic and threshold diffusion on countable networks.
"""

__version__ = "0.1.0"

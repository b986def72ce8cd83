"""Co-channel interference modelling and power-reduction optimisation for FM networks."""
__version__ = "0.1.0"

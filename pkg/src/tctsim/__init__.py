"""Monitored two-transmon simulator: circuit spectra, dispersive reduction,
dissipative, monitored and postselected dynamics, and Liouvillian spectra."""

__version__ = "0.1.0"

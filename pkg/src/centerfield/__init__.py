"""Focal values of cubic plane differential forms over F_p and finite-field
estimates of the component structure of the center variety."""

__version__ = "0.1.0"

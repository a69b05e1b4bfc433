"""Classical verification of quantum computation at desk scale."""

__version__ = "0.1.0"

"""Multi-model LSTM track association for AIS vessel data."""

__version__ = "0.1.0"

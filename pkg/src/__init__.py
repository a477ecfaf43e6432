"""COMET - memory-anchored autoregressive regression for edge-sized forecasting."""
__version__ = '1.0.0'

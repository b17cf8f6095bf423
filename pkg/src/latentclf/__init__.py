"""Latent-variable generative text classifiers over LSTM conditional language models."""

__version__ = "0.1.0"

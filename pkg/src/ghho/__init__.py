"""Hybrid Harris-hawks / grey-wolf optimisation for training a small
convolutional classifier over Otsu-segmented grayscale images."""

__version__ = "0.1.0"

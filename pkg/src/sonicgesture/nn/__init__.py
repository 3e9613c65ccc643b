"""Numpy CNN engine: layers, fusion models, training, checkpoints."""

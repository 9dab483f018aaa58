"""Surrogate modeling toolkit for coastal flood inundation mapping.

Predicts high-resolution peak-water-level maps from binary shoreline
protection scenarios: grid encoding of scenarios and depths, Cutout
augmentation, the CASPIAN dual-path CNN, classical baselines, training
utilities, and an HTTP inference service.
"""

__version__ = "0.1.0"

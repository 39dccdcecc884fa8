"""Low-resource, species-agnostic bird activity detection.

AMPS features (amplitude modulation, pitch moments, spectral statistics)
per 1-second window, lightweight classifiers trained from scratch, and
the evaluation harness around them.
"""
from .features import AmpsFeatureVector, FeatureConfig, extract_amps

__version__ = "0.1.0"

__all__ = ["AmpsFeatureVector", "FeatureConfig", "extract_amps", "__version__"]

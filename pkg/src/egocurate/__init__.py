"""Data machinery for egocentric video-language pretraining.

Narration filtering, clip-text pairing, taxonomy tagging, InfoNCE / EgoNCE /
max-margin objectives, multiple-choice benchmark construction and evaluation
metrics.
"""

__version__ = "0.1.0"

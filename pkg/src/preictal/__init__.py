"""Seizure-prediction experiment toolkit.

Ingests EEG recordings, labels preictal/interictal windows, partitions them
leakage-free (leave-one-seizure-out), preprocesses with STFT, trains six
deep-learning architectures on a self-contained reverse-mode autodiff engine,
and evaluates with exact ROC/PR metrics.
"""

__version__ = "0.1.0"

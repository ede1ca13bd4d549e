"""Named random streams derived from one master seed."""

import hashlib

import numpy as np

from busybot.exceptions import ContractError


def stream_seed(master_seed, label):
    digest = hashlib.sha256(f"{int(master_seed)}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def seed_streams(master_seed, labels):
    """One independent ``numpy`` generator per label.

    A stream depends only on ``(master_seed, label)``, so drawing from one
    never shifts another.
    """
    labels = list(labels)
    if len(set(labels)) != len(labels):
        duplicates = sorted({label for label in labels if labels.count(label) > 1})
        raise ContractError(f"duplicate stream labels {duplicates}")
    return {label: np.random.default_rng(stream_seed(master_seed, label)) for label in labels}


def stream(master_seed, label):
    return np.random.default_rng(stream_seed(master_seed, label))

"""Busyboard simulator and the interact / reason / plan learning pipeline."""

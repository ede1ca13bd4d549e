from busybot.management.base import StageCommand


class Command(StageCommand):
    help = "Train the scene-graph inference and dynamics networks"
    stage = "reasoning"
    config_flags = (
        ("--boards", "reason", "boards", {"type": int}),
        ("--block-size", "reason", "block_size", {"type": int}),
        ("--epochs", "reason", "epochs", {"type": int}),
        ("--batch", "reason", "batch", {"type": int}),
        ("--edge-threshold", "reason", "edge_threshold", {"type": float}),
    )

from busybot.management.base import StageCommand


class Command(StageCommand):
    help = "Collect interaction trajectories for relation discovery"
    stage = "collect"
    config_flags = (
        ("--boards", "reason", "boards", {"type": int}),
        ("--block-size", "reason", "block_size", {"type": int}),
    )

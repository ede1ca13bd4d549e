from busybot.management.base import StageCommand


class Command(StageCommand):
    help = "Score Edge-P, Edge-R and Pred-A on every split"
    stage = "eval_reasoning"
    config_flags = (
        ("--edge-threshold", "reason", "edge_threshold", {"type": float}),
    )

from busybot.management.base import StageCommand


class Command(StageCommand):
    help = "Train the position and direction networks with the three-phase curriculum"
    stage = "interaction"
    config_flags = (
        ("--epochs", "interaction", "epochs", {"type": int}),
        ("--boards-per-epoch", "interaction", "boards_per_epoch", {"type": int}),
        ("--actions-per-board", "interaction", "actions_per_board", {"type": int}),
        ("--buffer-capacity", "interaction", "buffer_capacity", {"type": int}),
    )

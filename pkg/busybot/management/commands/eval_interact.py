from busybot.management.base import StageCommand


class Command(StageCommand):
    help = "Score interaction precision and recall on every split"
    stage = "eval_interaction"

from busybot.management.base import StageCommand


class Command(StageCommand):
    help = "Generate the training, novel-config and novel-object board sets"
    stage = "boards"

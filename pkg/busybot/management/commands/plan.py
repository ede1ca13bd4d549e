from busybot.board.goals import TASK_KINDS
from busybot.management.base import StageCommand
from busybot.plan.agents import AGENT_KINDS


class Command(StageCommand):
    help = "Run the planning agents on generated tasks across splits"
    stage = "planning"
    config_flags = (
        ("--agent", "plan", "agents", {"choices": AGENT_KINDS, "as_list": True}),
        ("--kind", "plan", "kinds", {"choices": TASK_KINDS, "as_list": True}),
        ("--tasks", "plan", "tasks", {"type": int}),
        ("--max-steps", "plan", "max_steps", {"type": int}),
    )

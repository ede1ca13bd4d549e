"""Goal-conditioned planning agents."""

from busybot.plan.agents import (  # noqa: F401
    AGENT_KINDS, busybot_agent_step, diff_responders, oracle_agent_step, predictive_agent_step,
    relation_agent_step,
)
from busybot.plan.episode import PlanConfig, PlanResult, Planner, run_episode, success_rate  # noqa: F401
from busybot.plan.tasks import GoalSpec, Task, generate_tasks, load_tasks, save_tasks  # noqa: F401

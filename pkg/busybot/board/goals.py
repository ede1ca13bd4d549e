import logging

from busybot.board.kinematics import apply_action, oracle_actions
from busybot.board.render import render
from busybot.exceptions import ContractError, TaskGenerationError

logger = logging.getLogger(__name__)

TASK_KINDS = ("one-to-one", "one-to-many")
_KIND_CATEGORIES = {
    "one-to-one": ("switch-small",),
    "one-to-many": ("switch-multidir", "switch-multilink"),
}


def _compatible_triggers(spec, kind):
    if kind not in TASK_KINDS:
        raise ContractError(f"unknown task kind {kind!r}")
    categories = _KIND_CATEGORIES[kind]
    return [t for t in spec.triggers if t.category in categories]


def _links_to_move(rng, trigger):
    if trigger.category == "switch-multilink":
        while True:
            mask = rng.random(len(trigger.links)) < 0.5
            if mask.any():
                return [link for link, keep in zip(trigger.links, mask) if keep]
    return [trigger.links[0]]


def sample_goal(spec, state, rng, kind):
    """A reachable goal differing from ``state`` in at least one responder stage.

    Returns (goal state, goal observation).
    """
    triggers = _compatible_triggers(spec, kind)
    if not triggers:
        raise TaskGenerationError(f"board {spec.seed} has no trigger for a {kind} task")
    if not spec.responder_effects:
        raise TaskGenerationError("responders are disconnected on this board")
    count = int(rng.integers(1, min(2, len(triggers)) + 1))
    chosen = sorted(int(k) for k in rng.choice(len(triggers), size=count, replace=False))
    goal = state
    for index in chosen:
        trigger = triggers[index]
        for link in _links_to_move(rng, trigger):
            options = [o for o in oracle_actions(goal)
                       if o.object_id == trigger.object_id and o.link_id == link.link_id]
            pick = options[int(rng.integers(len(options)))]
            goal, _ = apply_action(goal, pick.action)
    if goal.stages == state.stages:
        raise TaskGenerationError(f"sampled goal on board {spec.seed} equals the start state")
    goal = goal.copy()
    goal.step = state.step
    logger.debug("goal on board %d moves triggers %s", spec.seed,
                 [triggers[k].object_id for k in chosen])
    return goal, render(goal)

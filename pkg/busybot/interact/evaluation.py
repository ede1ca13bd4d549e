import logging
from dataclasses import dataclass

from busybot.exceptions import ContractError
from busybot.interact.exploration import ExplorationState
from busybot.interact.policy import select_action

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InteractionScore:
    precision: float
    recall: float
    actions: int
    effective: int
    actuated: int
    interactable: int


def score_interactions(records):
    """Micro-averaged precision and recall.

    ``records`` holds one (effective flags, actuated trigger ids, trigger count)
    triple per board.
    """
    actions = sum(len(flags) for flags, _, _ in records)
    effective = sum(sum(flags) for flags, _, _ in records)
    actuated = sum(len(ids) for _, ids, _ in records)
    interactable = sum(count for _, _, count in records)
    precision = effective / actions if actions else 0.0
    recall = actuated / interactable if interactable else 0.0
    return InteractionScore(precision, recall, actions, effective, actuated, interactable)


def run_greedy(policy, board, steps, config, rng):
    """Greedy rollout on one board; returns (effective flags, actuated trigger ids)."""
    expl = ExplorationState(board.spec.height, board.spec.width, window=config.window,
                            c=config.ucb_c, epsilon=0.0, epsilon_direction=0.0)
    flags, actuated = [], set()
    for _ in range(steps):
        selection = select_action(policy, board.observe(), board.spec, expl, 3, rng,
                                  use_ucb=config.use_ucb)
        outcome, _, _, _ = board.step_with_retry(selection.action)
        flags.append(bool(outcome.effective))
        if outcome.effective:
            actuated.add(outcome.moved_link[0])
    return flags, actuated


def eval_interaction(policy, boards, steps, config, rng):
    if not boards:
        raise ContractError("eval_interaction needs at least one board")
    records = []
    for board in boards:
        flags, actuated = run_greedy(policy, board, steps, config, rng)
        records.append((flags, actuated, len(board.spec.triggers)))
    score = score_interactions(records)
    logger.info("interaction eval: precision %.3f recall %.3f over %d boards",
                score.precision, score.recall, len(boards))
    return score

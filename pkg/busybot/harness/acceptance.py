"""Exact oracle checks and scaled reproductions of the headline orderings.

Every check returns a ``Criterion``; the ``acceptance`` command prints one
PASS/FAIL line per criterion.
"""

import logging
import math
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from busybot.board.env import BusyBoard
from busybot.board.generate import GenerationConfig, generate_board_retrying
from busybot.board.render import DIFF_TOLERANCE, image_diff_reward
from busybot.board.spec import DIRECTIONS, action_at
from busybot.exceptions import GenerationError
from busybot.harness.pipeline import Pipeline
from busybot.harness.seeding import stream
from busybot.interact.evaluation import eval_interaction
from busybot.interact.exploration import ExplorationState, ucb_adjust
from busybot.learncore import tensor as T
from busybot.learncore.gradcheck import grad_check
from busybot.learncore.layers import Conv1d, Conv2d, Dense
from busybot.learncore.params import ParamSet

logger = logging.getLogger(__name__)

GRAD_TOLERANCE = 1e-4
UCB_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Criterion:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def _layer_cases(rng):
    """(name, builder) pairs; a builder returns (params, loss_fn) for one layer kind."""

    def target_for(fn):
        return rng.normal(size=fn().shape)

    def case(build):
        def make():
            params = ParamSet(np.random.default_rng(int(rng.integers(2**32))))
            forward = build(params)
            target = target_for(forward)
            return params, lambda: T.mse(forward(), target)

        return make

    x2 = rng.normal(size=(2, 3, 6, 6))
    x1 = rng.normal(size=(2, 7, 3))
    xv = rng.normal(size=(4, 5))
    xs = rng.normal(size=(3, 4))

    def dense(p):
        layer = Dense(p, "dense", 5, 4)
        return lambda: layer(xv)

    def conv(stride):
        def build(p):
            layer = Conv2d(p, "conv", 3, 4, stride=stride)
            return lambda: layer(x2)

        return build

    def conv1d(p):
        layer = Conv1d(p, "conv1d", 3, 4)
        return lambda: layer(x1)

    def pooled(p):
        layer = Conv2d(p, "conv", 3, 2)
        return lambda: T.max_pool2d(layer(x2))

    def upsampled(mode):
        def build(p):
            layer = Conv2d(p, "conv", 3, 2)
            return lambda: T.upsample2d(layer(x2), mode)

        return build

    def softmaxed(p):
        layer = Dense(p, "dense", 5, 4)
        return lambda: T.softmax(layer(xv), axis=-1)

    def sigmoid(p):
        layer = Dense(p, "dense", 5, 4)
        return lambda: T.sigmoid(layer(xv))

    def relu(p):
        layer = Dense(p, "dense", 5, 4)
        return lambda: T.relu(layer(xv))

    def aggregated(p):
        layer = Conv1d(p, "conv1d", 3, 4)
        return lambda: T.mean_aggregate(layer(x1), axis=1)

    def pairwise(p):
        layer = Dense(p, "dense", 8, 2)
        return lambda: layer(T.pairwise_concat(xs)).sum(axis=-2)

    return [
        ("dense", case(dense)),
        ("conv2d", case(conv(1))),
        ("conv2d stride 2", case(conv(2))),
        ("conv1d", case(conv1d)),
        ("max_pool2d", case(pooled)),
        ("upsample nearest", case(upsampled("nearest"))),
        ("upsample bilinear", case(upsampled("bilinear"))),
        ("softmax", case(softmaxed)),
        ("sigmoid", case(sigmoid)),
        ("relu", case(relu)),
        ("mean aggregate", case(aggregated)),
        ("pairwise concat", case(pairwise)),
    ]


def check_gradients(seed=0, samples=64):
    rng = stream(seed, "acceptance:gradients")
    errors = {}
    for name, make in _layer_cases(rng):
        params, loss_fn = make()
        errors[name] = grad_check(params, loss_fn, samples, rng)
    worst = max(errors, key=errors.get)
    return Criterion("gradient check", errors[worst] < GRAD_TOLERANCE,
                     f"max relative error {errors[worst]:.2e} ({worst})")


def brute_force_reward(obs, other, delta):
    height, width = obs.shape
    changed = 0
    for i in range(height):
        for j in range(width):
            if any(abs(obs.color[c, i, j] - other.color[c, i, j]) > DIFF_TOLERANCE for c in range(3)):
                changed += 1
    return int(changed > delta)


def _visited_observations(board, rng, steps):
    observations = [board.observe()]
    for _ in range(steps):
        options = board.oracle_actions()
        if options and rng.random() < 0.7:
            action = options[int(rng.integers(len(options)))].action
        else:
            cell = (int(rng.integers(board.spec.height)), int(rng.integers(board.spec.width)))
            action = action_at(board.spec, cell, int(rng.integers(len(DIRECTIONS))),
                               board.observe().depth)
        board.step(action)
        observations.append(board.observe())
    return observations


def check_reward_oracle(seed=0, boards=20, pairs=1000):
    rng = stream(seed, "acceptance:reward")
    config = GenerationConfig(height=24, width=32)
    mismatches = fired = 0
    for _ in range(boards):
        spec, _ = generate_board_retrying(int(rng.integers(2**31)), config)
        board = BusyBoard.from_spec(spec, rng)
        observations = _visited_observations(board, rng, 12)
        for _ in range(pairs // boards):
            first, second = rng.integers(len(observations), size=2)
            before, after = observations[int(first)], observations[int(second)]
            expected = brute_force_reward(before, after, board.delta)
            fired += expected
            mismatches += int(image_diff_reward(before, after, board.delta) != expected)
    return Criterion("reward oracle", mismatches == 0,
                     f"{mismatches} mismatches over {boards * (pairs // boards)} pairs ({fired} rewarded)")


def check_ucb(seed=0, triples=100):
    rng = stream(seed, "acceptance:ucb")
    worst = 0.0
    for _ in range(triples):
        p = float(rng.random())
        t = int(rng.integers(1, 10_000))
        n = int(rng.integers(0, 50))
        expl = ExplorationState(1, 1, c=0.5, t=t)
        expl.counts[0, 0] = n
        expected = p + 0.5 * math.sqrt(math.log(t) / max(n, 1))
        worst = max(worst, abs(float(ucb_adjust(np.array([[p]]), expl)[0, 0]) - expected))
    return Criterion("ucb formula", worst <= UCB_TOLERANCE, f"max deviation {worst:.1e}")


def board_violations(spec):
    """Footprint overlaps, multiply controlled responders and uncovered triggers on one board."""
    problems = []
    objects = spec.objects
    for a in range(len(objects)):
        for b in range(a + 1, len(objects)):
            if objects[a].footprint.intersects(objects[b].footprint):
                problems.append(f"objects {a} and {b} overlap")
    edges = spec.relations.edges
    for responder in spec.responders:
        sources = {e.trigger_id for e in edges if e.responder_id == responder.object_id}
        if len(sources) != 1:
            problems.append(f"responder {responder.object_id} has {len(sources)} controllers")
    covered = {e.trigger_id for e in edges}
    for trigger in spec.triggers:
        if trigger.object_id not in covered:
            problems.append(f"trigger {trigger.object_id} controls nothing")
    return problems


def check_environment(seed=0, boards=10_000, config=None):
    rng = stream(seed, "acceptance:environment")
    config = config or GenerationConfig()
    violations = silent = actions = skipped = 0
    for _ in range(boards):
        try:
            spec, _ = generate_board_retrying(int(rng.integers(2**31)), config)
        except GenerationError:
            skipped += 1
            continue
        problems = board_violations(spec)
        violations += len(problems)
        for problem in problems:
            logger.warning("board %d: %s", spec.seed, problem)
        board = BusyBoard.from_spec(spec, rng)
        for option in board.oracle_actions():
            trial = board.copy()
            outcome, reward = trial.step(option.action)
            actions += 1
            silent += int(not (outcome.effective and reward == 1))
    return Criterion("environment invariants", violations == 0 and silent == 0,
                     f"{violations} structural violations, {silent}/{actions} effective actions "
                     f"below delta, {skipped} seeds unusable")


def _variant(config, root, name, **parts):
    return replace(config, out_dir=str(Path(root) / name), **parts)


def check_interaction(config, root, boards=50):
    """Full method against the no-responder and no-exploration ablations on novel-config boards."""
    full = Pipeline(_variant(config, root, "interaction-full"))
    no_responder = Pipeline(_variant(
        config, root, "interaction-no-responder",
        generation=replace(config.generation, responder_effects=False)))
    no_exploration = Pipeline(_variant(
        config, root, "interaction-no-exploration",
        interaction=replace(config.interaction, use_ucb=False)))
    evaluation_boards = full.ensure_splits()["novel_config"]
    scores = {}
    for name, pipeline in (("full", full), ("no-responder", no_responder),
                           ("no-exploration", no_exploration)):
        policy = pipeline.ensure_policy()
        rng = stream(config.seed, f"acceptance:interaction:{name}")
        # every variant is scored on boards whose responders do react
        test_boards = [evaluation_boards.board(k, rng) for k in range(min(boards, len(evaluation_boards)))]
        scores[name] = eval_interaction(policy, test_boards, config.evaluation.interaction_steps,
                                        pipeline.config.interaction, rng)
    f, r, e = scores["full"], scores["no-responder"], scores["no-exploration"]
    passed = (f.precision >= 0.75 and f.recall >= 0.60 and r.precision <= 0.25 * f.precision
              and e.recall <= 0.7 * f.recall)
    return Criterion(
        "interaction orderings", passed,
        f"full P {f.precision:.3f} R {f.recall:.3f}; no-responder P {r.precision:.3f}; "
        f"no-exploration R {e.recall:.3f}",
    )


def check_reasoning(config, root, boards=100):
    evaluation = replace(config.evaluation, reason_boards=boards)
    full = Pipeline(_variant(config, root, "reasoning-full", evaluation=evaluation))
    ablation = Pipeline(_variant(config, root, "reasoning-no-exploration", evaluation=evaluation,
                               reason=replace(config.reason, candidate_source="random")))
    scores = full.eval_reason(("train", "novel_config"))
    ablated = ablation.eval_reason(("novel_config",))["novel_config"]
    novel, train = scores["novel_config"], scores["train"]
    passed = (novel["edge_r"] >= 0.90 and novel["edge_p"] >= 0.80 and train["pred_a"] >= 0.60
              and novel["edge_r"] - ablated["edge_r"] >= 0.3)
    return Criterion(
        "reasoning orderings", passed,
        f"Edge-P {novel['edge_p']:.3f} Edge-R {novel['edge_r']:.3f} train Pred-A {train['pred_a']:.3f}; "
        f"no-exploration Edge-R {ablated['edge_r']:.3f}",
    )


def check_planning(config, root, tasks=50):
    pipeline = Pipeline(_variant(config, root, "reasoning-full",
                                 plan=replace(config.plan, tasks=tasks)))
    frame = pipeline.plan(("novel_config",))
    success = frame.groupby(["kind", "agent"])["success"].mean()
    oracle = min(success[(kind, "oracle")] for kind in pipeline.config.plan.kinds)
    learned = min(success[("one-to-one", agent)] for agent in ("relation", "predictive", "busybot"))
    busybot, relation = success[("one-to-many", "busybot")], success[("one-to-many", "relation")]
    passed = oracle == 1.0 and learned >= 0.85 and busybot >= relation
    return Criterion(
        "planning orderings", passed,
        f"oracle {oracle:.3f}; weakest learned one-to-one {learned:.3f}; "
        f"one-to-many busybot {busybot:.3f} vs relation {relation:.3f}",
    )


def same_contents(path, other):
    """Byte equality, or array equality for npz archives (their zip entries carry write times)."""
    if not other.exists():
        return False
    if path.suffix != ".npz":
        return other.read_bytes() == path.read_bytes()
    with np.load(path) as first, np.load(other) as second:
        return first.files == second.files and all(
            np.array_equal(first[name], second[name]) for name in first.files)


def check_determinism(config, root):
    """Two desk pipelines with one master seed produce identical raw files.

    SVG figures are left out: the renderer stamps each plot with a random clip-path id.
    """
    reports = []
    for run in ("a", "b"):
        Pipeline(_variant(config, root, f"determinism-{run}"), formats=("csv", "text")).run()
        reports.append(Path(root) / f"determinism-{run}" / config.run_dir.name)
    compared = differing = 0
    for path in sorted(reports[0].rglob("*")):
        relative = path.relative_to(reports[0])
        if not path.is_file() or relative.name in ("runtime.json", "config.json"):
            continue
        compared += 1
        other = reports[1] / relative
        if not same_contents(path, other):
            differing += 1
            logger.warning("determinism: %s differs", relative)
    return Criterion("determinism", differing == 0 and compared > 0,
                     f"{differing} of {compared} files differ")


def check_properties():
    from django.test.runner import DiscoverRunner

    failures = DiscoverRunner(verbosity=0, tags=["property"]).run_tests(["busybot.tests"])
    return Criterion("property suites", failures == 0, f"{failures} failing tests")


CHECKS = ("gradients", "reward", "ucb", "environment", "interaction", "reasoning", "planning",
          "determinism", "properties")


def run_acceptance(config, checks=CHECKS, root=None, environment_boards=10_000):
    """Run the selected checks; scaled reproductions share trained models under ``root``."""
    root = Path(root or tempfile.mkdtemp(prefix="busybot-acceptance-"))
    runners = {
        "gradients": lambda: check_gradients(config.seed),
        "reward": lambda: check_reward_oracle(config.seed),
        "ucb": lambda: check_ucb(config.seed),
        "environment": lambda: check_environment(config.seed, environment_boards, config.generation),
        "interaction": lambda: check_interaction(config, root, config.evaluation.interaction_boards),
        "reasoning": lambda: check_reasoning(config, root),
        "planning": lambda: check_planning(config, root),
        "determinism": lambda: check_determinism(config, root),
        "properties": check_properties,
    }
    results = []
    for name in checks:
        logger.info("acceptance: %s", name)
        results.append(runners[name]())
    return results

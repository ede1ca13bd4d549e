"""Interact → reason → plan, end to end, with every stage's raw files on disk."""

import json
import logging
import time

import numpy as np
import pandas as pd

from busybot.exceptions import ConfigurationError, EpisodeError
from busybot.harness.artifacts import RunLayout, load_board_set, save_board_set
from busybot.harness.report import (
    INTERACTION_EVAL_COLUMNS, PLANNING_COLUMNS, REASON_EVAL_COLUMNS, REPORT_FORMATS,
    metrics_from_raw, reasoning_metrics, store_report, write_report,
)
from busybot.harness.seeding import stream
from busybot.harness.splits import SPLIT_NAMES, BoardSplit, build_splits, split_generation
from busybot.interact.evaluation import run_greedy, score_interactions
from busybot.interact.policy import InteractionPolicy
from busybot.interact.training import train_interaction
from busybot.plan.episode import Planner, run_episode
from busybot.plan.tasks import generate_tasks, save_tasks
from busybot.reason.dataset import (
    collect_reason_dataset, learned_candidates, oracle_candidates, random_candidates,
)
from busybot.reason.evaluation import eval_edges, horizon_predictions, stage_accuracy
from busybot.reason.io import load_dataset, save_dataset, write_scene_graph_reports
from busybot.reason.training import ReasonModel, train_reason

logger = logging.getLogger(__name__)

STAGES = ("boards", "interaction", "eval_interaction", "collect", "reasoning", "eval_reasoning",
          "planning")
REQUIRES = {
    "boards": (),
    "interaction": ("boards",),
    "eval_interaction": ("interaction",),
    "collect": ("boards", "interaction"),
    "reasoning": ("collect",),
    "eval_reasoning": ("reasoning",),
    "planning": ("reasoning",),
}


def reasoning_row(model, graph, trajectory):
    """Per-board counts from which Edge-P, Edge-R and both Pred-A variants are recomputed."""
    if model.inference is not None:
        edges = eval_edges([graph], [trajectory.relations], model.config.edge_threshold)
        edge_counts = [edges.predicted, edges.truth, edges.correct]
    else:
        edge_counts = [-1, -1, -1]
    frames = range(trajectory.split, trajectory.length)
    one_step = stage_accuracy(horizon_predictions(model.dynamics, graph, trajectory, "one-step"),
                              trajectory, frames)
    rolled = stage_accuracy(horizon_predictions(model.dynamics, graph, trajectory, "rollout"),
                            trajectory, frames)
    return [trajectory.board_seed, *edge_counts, *one_step, *rolled]


class Pipeline:
    """Runs stages in order; a stage whose inputs are missing loads them from disk or builds them."""

    def __init__(self, config, record=False, formats=REPORT_FORMATS):
        self.config = config.validate()
        self.layout = RunLayout(config.run_dir).prepare()
        self.record = record
        self.formats = formats
        self.splits = None
        self.policy = None
        self.dataset = None
        self.model = None
        self.failures = {}
        self.seconds = {}

    def rng(self, label):
        return stream(self.config.seed, label)

    # stages

    def gen_boards(self):
        self.splits = build_splits(self.config)
        for name, split in self.splits.items():
            save_board_set(self.layout.boards(name), split.specs)
        return self.splits

    def train_interact(self):
        train = self.ensure_splits()["train"]
        config = self.config.interaction
        rng = self.rng("interaction")

        def board_factory(epoch, index):
            return train.board(epoch * config.boards_per_epoch + index, rng)

        result = train_interaction(board_factory, config, rng, self.layout.interaction_log)
        result.policy.save(self.layout.policy_dir)
        self.policy = result.policy
        return result

    def eval_interact(self, names=SPLIT_NAMES):
        policy = self.ensure_policy()
        config, steps = self.config.interaction, self.config.evaluation.interaction_steps
        scores = {}
        for name in names:
            split = self.ensure_splits()[name]
            rng = self.rng(f"eval_interaction:{name}")
            rows, records = [], []
            for k in range(min(self.config.evaluation.interaction_boards, len(split))):
                board = split.board(k, rng)
                flags, actuated = run_greedy(policy, board, steps, config, rng)
                triggers = len(board.spec.triggers)
                rows.append([board.spec.seed, len(flags), int(sum(flags)), len(actuated), triggers])
                records.append((flags, actuated, triggers))
            pd.DataFrame(rows, columns=INTERACTION_EVAL_COLUMNS).to_csv(
                self.layout.interaction_eval(name), index=False)
            scores[name] = score_interactions(records)
            logger.info("%s interaction: precision %.3f recall %.3f", name, scores[name].precision,
                        scores[name].recall)
        return scores

    def collect(self):
        train = self.ensure_splits()["train"]
        config = self.config.reason
        self.dataset = collect_reason_dataset(
            train.spec, self.candidate_source(), config.boards, self.rng("collect"),
            config.block_size, config.total_steps, config.inference_steps,
        )
        save_dataset(self.layout.reason_dataset, self.dataset)
        return self.dataset

    def train_reason(self):
        result = train_reason(self.ensure_dataset(), self.config.reason, self.rng("reasoning"),
                              self.layout.reason_curve)
        result.model.save(self.layout.reason_model)
        self.model = result.model
        return result

    def eval_reason(self, names=SPLIT_NAMES):
        model, config = self.ensure_model(), self.config.reason
        source = self.candidate_source()
        metrics = {}
        for name in names:
            split = self.ensure_splits()[name]
            count = min(self.config.evaluation.reason_boards, len(split))
            trajectories = collect_reason_dataset(
                split.spec, source, count, self.rng(f"eval_reasoning:{name}"), 1,
                config.total_steps, config.inference_steps,
            )
            save_dataset(self.layout.reason_trajectories(name), trajectories)
            graphs = [model.infer(t) for t in trajectories]
            write_scene_graph_reports(self.layout.scene_graphs(name), graphs, trajectories)
            rows = [reasoning_row(model, g, t) for g, t in zip(graphs, trajectories)]
            frame = pd.DataFrame(rows, columns=REASON_EVAL_COLUMNS)
            frame.to_csv(self.layout.reason_eval(name), index=False)
            metrics[name] = reasoning_metrics(frame)
        return metrics

    def plan(self, names=SPLIT_NAMES):
        config = self.config.plan
        learned = [a for a in config.agents if a != "oracle"]
        planner = None
        if learned:
            planner = Planner(self.candidate_source(), self.ensure_model(), config.explore_steps,
                              self.config.reason.inference_steps)
        rows = []
        for name in names:
            split = self.ensure_splits()[name]
            for kind in config.kinds:
                tasks = generate_tasks(split.spec, kind, config.tasks, self.rng(f"tasks:{name}:{kind}"))
                save_tasks(self.layout.tasks(name, kind), tasks)
                rng = self.rng(f"planning:{name}:{kind}")
                for task in tasks:
                    graph = planner.infer_graph(task, rng) if learned else None
                    for agent in config.agents:
                        rows.append([name, kind, agent, task.task_id, task.board_seed]
                                    + self._episode(agent, task, planner, rng, graph))
        frame = pd.DataFrame(rows, columns=PLANNING_COLUMNS)
        frame.to_csv(self.layout.planning_results, index=False)
        return frame

    def _episode(self, agent, task, planner, rng, graph):
        try:
            result = run_episode(agent, task, planner, rng, self.config.plan.max_steps, graph=graph)
        except EpisodeError as exc:
            logger.warning("task %d, %s agent: %s", task.task_id, agent, exc)
            return [0, "error", 0.0]
        return [result.steps, result.terminated_by, result.success_fraction]

    # inputs, from memory, disk, or a fresh stage run

    def ensure_splits(self):
        if self.splits is None:
            paths = {name: self.layout.boards(name) for name in SPLIT_NAMES}
            if all(p.exists() for p in paths.values()):
                self.splits = {
                    name: BoardSplit(name, split_generation(self.config, name), load_board_set(path))
                    for name, path in paths.items()
                }
            else:
                self.gen_boards()
        return self.splits

    def ensure_policy(self):
        if self.policy is None:
            if (self.layout.policy_dir / "position.npz").exists():
                generation = self.config.generation
                self.policy = InteractionPolicy.build(
                    generation.height, generation.width, self.config.interaction,
                    np.random.default_rng(0),
                ).load(self.layout.policy_dir)
            else:
                self.train_interact()
        return self.policy

    def ensure_dataset(self):
        if self.dataset is None:
            if self.layout.reason_dataset.exists():
                self.dataset = load_dataset(self.layout.reason_dataset)
            else:
                self.collect()
        return self.dataset

    def ensure_model(self):
        if self.model is None:
            if self.layout.reason_model.exists():
                self.model = ReasonModel(self.config.reason).load(self.layout.reason_model)
            else:
                self.train_reason()
        return self.model

    def candidate_source(self):
        config = self.config.reason
        if config.candidate_source == "oracle":
            return oracle_candidates
        if config.candidate_source == "random":
            return random_candidates
        return learned_candidates(self.ensure_policy(), self.config.interaction.tau,
                                  self.config.interaction.candidate_k)

    # driver

    STAGE_METHODS = {
        "boards": "gen_boards",
        "interaction": "train_interact",
        "eval_interaction": "eval_interact",
        "collect": "collect",
        "reasoning": "train_reason",
        "eval_reasoning": "eval_reason",
        "planning": "plan",
    }

    def run(self, stages=STAGES):
        unknown = set(stages) - set(STAGES)
        if unknown:
            raise ConfigurationError(f"unknown stages {sorted(unknown)}")
        for name in stages:
            failed = [dep for dep in REQUIRES[name] if dep in self.failures]
            if failed:
                self.failures[name] = f"skipped: {failed[0]} failed"
                continue
            start = time.perf_counter()
            try:
                getattr(self, self.STAGE_METHODS[name])()
                self.failures.pop(name, None)
            except ConfigurationError:
                raise
            except Exception as exc:
                logger.exception("stage %s failed", name)
                self.failures[name] = f"{type(exc).__name__}: {exc}"
            finally:
                self.seconds[name] = round(time.perf_counter() - start, 3)
            logger.info("stage %s finished in %.1fs", name, self.seconds[name])
        return self.finish()

    def _write_runtime(self):
        runtime = {"seconds": {}, "failures": {}}
        if self.layout.runtime.exists():
            with open(self.layout.runtime) as handle:
                runtime = json.load(handle)
        runtime["seconds"].update(self.seconds)
        for stage in self.seconds:
            runtime["failures"].pop(stage, None)
        runtime["failures"].update(self.failures)
        runtime["status"] = "partial" if runtime["failures"] else "complete"
        with open(self.layout.runtime, "w") as handle:
            json.dump(runtime, handle, indent=2, sort_keys=True)
        return runtime

    def finish(self):
        with open(self.layout.config, "w") as handle:
            json.dump(self.config.as_dict(), handle, indent=2, sort_keys=True)
        runtime = self._write_runtime()
        report = metrics_from_raw(self.layout)
        report.frame.to_csv(self.layout.metrics, index=False)
        try:
            write_report(report, self.layout.report_dir, self.formats)
        except Exception as exc:
            logger.exception("report files could not be written")
            report.failures["report"] = f"{type(exc).__name__}: {exc}"
        if self.record:
            store_report(report.frame, self.config.seed, self.config.preset, self.layout.root,
                         "partial" if report.failures else runtime["status"])
        return report


def run_pipeline(config, record=True, formats=REPORT_FORMATS):
    return Pipeline(config, record, formats).run()

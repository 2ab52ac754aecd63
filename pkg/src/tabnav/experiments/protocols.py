"""The replication protocols: revaluation, transfer, place/grid fields, community."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from tabnav import kernels
from tabnav.agents.agent import Agent
from tabnav.agents.policy import greedy
from tabnav.analysis.metrics import permutation_scores, separation_score
from tabnav.analysis.net import PredictiveNet, train_on_sequence
from tabnav.analysis.pca import pca
from tabnav.env.edits import apply_edits
from tabnav.env.graph import (
    ContractError, GraphSpec, available_mask, random_walk, spec_hash, terminal_mask,
    transition_tensor, reward_vector,
)
from tabnav.env.presets import load_preset
from tabnav.experiments.config import ExperimentConfig, ExperimentResult
from tabnav.experiments.runner import run_episode
from tabnav.experiments.sr import SRSchedule, train_random_sr
from tabnav.rng import derive_rng

PROB_TOL = 1e-9
HASH_CHARS = 12
COMMUNITY_MODEL = "predictive-net"


def _map_runs(fn, jobs: list[tuple], workers: int) -> list:
    """Apply ``fn`` to each argument tuple, in order, optionally in processes."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        futures = [pool.submit(fn, *job) for job in jobs]
        return [f.result() for f in futures]


def _agent(config: ExperimentConfig, spec: GraphSpec, *path) -> Agent:
    return Agent.for_spec(
        config.algorithm, spec, hp=config.hyperparams, policy=config.policy,
        rng=derive_rng(config.master_seed, *path, "agent"), replan=config.replan,
    )


def _row(config: ExperimentConfig, run: int, episode: int, steps: int, ret: float, **metrics) -> dict:
    row = {
        "experiment": config.experiment, "algorithm": config.algorithm,
        "seed": config.master_seed, "run": run, "episode": episode,
        "steps": steps, "return": ret,
    }
    row.update(metrics)
    return row


def exact_q(spec: GraphSpec, gamma: float, tol: float = 1e-10, max_iters: int = 100_000) -> np.ndarray:
    """Optimal action values of ``spec`` from its true model."""
    p = transition_tensor(spec)
    r = p @ reward_vector(spec)
    cont = (~terminal_mask(spec)).astype(float)
    q, _ = kernels.value_iteration(p, r, cont, available_mask(spec).astype(np.uint8),
                                   gamma, tol, max_iters)
    return q


# ---------------------------------------------------------------- revaluation

def compute_revaluation_score(p_pre, p_post, a_star: int) -> float:
    """Change in the probability of choosing ``a_star``: ``p_post - p_pre``."""
    pre = np.asarray(p_pre, dtype=float)
    post = np.asarray(p_post, dtype=float)
    for name, p in (("p_pre", pre), ("p_post", post)):
        if p.ndim != 1 or p.size == 0:
            raise ContractError(f"{name} must be a non-empty vector")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ContractError(f"{name} must be finite and non-negative")
        if abs(p.sum() - 1.0) > PROB_TOL:
            raise ContractError(f"{name} sums to {p.sum():.12g}, not 1")
    if pre.shape != post.shape:
        raise ContractError("p_pre and p_post differ in length")
    if not 0 <= a_star < pre.size:
        raise ContractError(f"a_star {a_star} out of range")
    return float(post[a_star] - pre[a_star])


def revaluation_run(config: ExperimentConfig, condition: str, run: int,
                    keep_starts: bool = False, snapshot: bool = False) -> dict:
    """Learn, read the choice, relearn under the edit, read the choice again."""
    spec0, info = load_preset(config.environment)
    spec1 = apply_edits(spec0, info.edits[condition])
    choice = info.notes["choice_state"]
    middle = info.notes["intermediate_states"]
    path = (config.experiment, config.algorithm, condition, run)
    agent = _agent(config, spec0, *path)
    env_rng = derive_rng(config.master_seed, *path, "env")
    steps, ret, starts = 0, 0.0, []

    def play(spec, start):
        nonlocal steps, ret
        ep = run_episode(agent, spec, config.max_steps_per_episode, env_rng, start=start)
        steps += ep.steps
        ret += ep.ret
        starts.append(ep.trajectory[0].s)

    for _ in range(config.n_episodes):
        play(spec0, None)
    if agent.model_based:
        agent.plan()
    p_pre = agent.choice_probabilities(choice)
    agent.sync_actions(spec1)
    relearn_from = len(starts)
    for i in range(config.relearn_episodes):
        play(spec1, middle[i % len(middle)])
    if agent.model_based:
        agent.plan()
    p_post = agent.choice_probabilities(choice)
    q_star = exact_q(spec1, config.hyperparams.gamma)
    a_star = greedy(q_star[choice], available_mask(spec1)[choice])
    out = {
        "steps": steps, "return": ret, "a_star": a_star,
        "p_pre": float(p_pre[a_star]), "p_post": float(p_post[a_star]),
        "score": compute_revaluation_score(p_pre, p_post, a_star),
    }
    if snapshot:
        out["snapshot"] = agent.snapshot()
    if keep_starts:
        out["learn_starts"] = starts[:relearn_from]
        out["relearn_starts"] = starts[relearn_from:]
    return out


def run_revaluation(config: ExperimentConfig, workers: int = 1,
                    conditions: tuple[str, ...] = ("reward", "transition"),
                    snapshot: bool = False) -> ExperimentResult:
    jobs = [(config, c, run, False, snapshot and i == 0)
            for i, (c, run) in enumerate((c, r) for c in conditions for r in range(config.n_runs))]
    outcomes = _map_runs(revaluation_run, jobs, workers)
    result = ExperimentResult(config, metric_columns=("condition", "a_star", "p_pre", "p_post", "score"))
    scores: dict[str, list[float]] = {c: [] for c in conditions}
    episodes = config.n_episodes + config.relearn_episodes
    for (_, condition, run, _, _), out in zip(jobs, outcomes):
        if "snapshot" in out:
            result.snapshot = out["snapshot"]
        result.records.append(_row(
            config, run, episodes, out["steps"], out["return"], condition=condition,
            a_star=out["a_star"], p_pre=out["p_pre"], p_post=out["p_post"], score=out["score"],
        ))
        scores[condition].append(out["score"])
    result.summary = {f"mean_score_{c}": float(np.mean(v)) for c, v in scores.items()}
    return result


# ------------------------------------------------------------------- transfer

def transfer_run(config: ExperimentConfig, run: int, snapshot: bool = False) -> dict:
    """Per-episode ``(steps, return, done, spec hash)`` tuples for one run."""
    spec0, info = load_preset(config.environment)
    spec1 = apply_edits(spec0, info.edits["transfer"]) if config.edit_episode else spec0
    hashes = {id(spec0): spec_hash(spec0)[:HASH_CHARS], id(spec1): spec_hash(spec1)[:HASH_CHARS]}
    path = (config.experiment, config.algorithm, run)
    agent = _agent(config, spec0, *path)
    env_rng = derive_rng(config.master_seed, *path, "env")
    out = []
    for episode in range(1, config.n_episodes + 1):
        edited = config.edit_episode is not None and episode >= config.edit_episode
        spec = spec1 if edited else spec0
        if edited and episode == config.edit_episode:
            agent.sync_actions(spec)
        ep = run_episode(agent, spec, config.max_steps_per_episode, env_rng)
        out.append((ep.steps, ep.ret, ep.done, hashes[id(spec)]))
    result = {"episodes": out}
    if snapshot:
        result["snapshot"] = agent.snapshot()
    return result


def window_mean(mean_steps: np.ndarray, window: tuple[int, int]) -> float | None:
    """Mean over an inclusive, 1-based episode window; None if out of range."""
    lo, hi = window
    if lo < 1 or hi > len(mean_steps) or lo > hi:
        return None
    return float(np.mean(mean_steps[lo - 1:hi]))


def run_transfer(config: ExperimentConfig, kind: str | None = None, workers: int = 1,
                 snapshot: bool = False) -> ExperimentResult:
    if kind is not None and config.experiment != f"transfer-{kind}":
        raise ContractError(f"config is for {config.experiment}, not transfer-{kind}")
    jobs = [(config, r, snapshot and r == 0) for r in range(config.n_runs)]
    runs = _map_runs(transfer_run, jobs, workers)
    outcomes = [r["episodes"] for r in runs]
    result = ExperimentResult(config, metric_columns=("done", "env"), snapshot=runs[0].get("snapshot"))
    for run, episodes in enumerate(outcomes):
        for i, (steps, ret, done, h) in enumerate(episodes, start=1):
            result.records.append(_row(config, run, i, steps, ret, done=int(done), env=h))
    mean_steps = np.mean([[e[0] for e in eps] for eps in outcomes], axis=0)
    pre = window_mean(mean_steps, config.pre_window)
    post = window_mean(mean_steps, config.post_window)
    ratio = post / pre if pre and post is not None else None
    result.summary = {
        "mean_steps": [float(x) for x in mean_steps],
        "pre_window": list(config.pre_window), "post_window": list(config.post_window),
        "pre_mean": pre, "post_mean": post, "ratio": ratio,
        "adapted": None if ratio is None else bool(ratio <= config.adapt_ratio),
    }
    return result


# ----------------------------------------------------------------- place-grid

def grid_of(spec: GraphSpec, values: np.ndarray, fill: float = 0.0) -> np.ndarray:
    """Per-state ``values`` laid out on the maze grid (rows are y)."""
    if spec.cells is None:
        raise ContractError("field maps need a maze-compiled graph")
    width = max(c[0] for c in spec.cells) + 1
    height = max(c[1] for c in spec.cells) + 1
    if spec.layout is not None:
        width, height = spec.layout.width, spec.layout.height
    out = np.full((height, width), fill, dtype=float)
    for s, (x, y) in enumerate(spec.cells):
        out[y, x] = values[s]
    return out


def place_peak_offsets(spec: GraphSpec, m: np.ndarray) -> np.ndarray:
    """Grid (Manhattan) distance from each column's peak to its own cell."""
    cells = np.asarray(spec.cells)
    peaks = np.argmax(m, axis=0)
    return np.abs(cells[peaks] - cells).sum(axis=1)


def map_states(n_states: int, count: int) -> list[int]:
    """``count`` states spread evenly over ``range(n_states)``."""
    if count <= 0:
        return []
    return sorted({int(round(i)) for i in np.linspace(0, n_states - 1, min(count, n_states))})


def place_grid_run(config: ExperimentConfig, run: int) -> dict:
    spec, _ = load_preset(config.environment)
    schedule = SRSchedule(gamma=config.hyperparams.gamma, power=config.sr_power,
                          tol=config.sr_tol, max_steps=config.sr_max_steps)
    rng = derive_rng(config.master_seed, config.experiment, config.algorithm, run, "walk")
    training = train_random_sr(spec, rng, schedule)
    m = training.state_sr(spec)
    k = min(config.n_components, spec.n_states)
    reduced = pca(m, k, center=False)
    offsets = place_peak_offsets(spec, m)
    first = reduced.components[0]
    return {
        "m": m, "components": reduced.components, "eigenvalues": reduced.eigenvalues,
        "steps": training.steps, "episodes": training.episodes,
        "increment": training.last_increment, "converged": training.converged,
        "peak_fraction": float(np.mean(offsets <= 1)), "min_value": float(m.min()),
        "pc1_sign_fraction": float(max(np.mean(first >= 0), np.mean(first <= 0))),
    }


def run_place_grid(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    outcomes = _map_runs(place_grid_run, [(config, r) for r in range(config.n_runs)], workers)
    spec, _ = load_preset(config.environment)
    result = ExperimentResult(config, metric_columns=(
        "sr_episodes", "sr_increment", "converged", "peak_fraction", "min_value", "pc1_sign_fraction",
    ))
    for run, out in enumerate(outcomes):
        result.records.append(_row(
            config, run, 1, out["steps"], 0.0, sr_episodes=out["episodes"],
            sr_increment=out["increment"], converged=int(out["converged"]),
            peak_fraction=out["peak_fraction"], min_value=out["min_value"],
            pc1_sign_fraction=out["pc1_sign_fraction"],
        ))
    first = outcomes[0]
    for s in map_states(spec.n_states, config.n_place_maps):
        result.field_maps[f"place_{s:03d}"] = grid_of(spec, first["m"][:, s])
    for i, comp in enumerate(first["components"], start=1):
        result.field_maps[f"pc_{i:02d}"] = grid_of(spec, comp)
    result.summary = {
        "peak_fraction": [o["peak_fraction"] for o in outcomes],
        "min_value": [o["min_value"] for o in outcomes],
        "pc1_sign_fraction": [o["pc1_sign_fraction"] for o in outcomes],
        "eigenvalues": [float(x) for x in first["eigenvalues"]],
    }
    return result


# ------------------------------------------------------------------ community

def community_run(config: ExperimentConfig, run: int) -> dict:
    spec, info = load_preset(config.environment)
    if info.community_labels is None:
        raise ContractError(f"preset {config.environment!r} has no community labels")
    labels = np.asarray(info.community_labels)
    path = (config.experiment, run)
    walk = random_walk(spec, config.walk_steps, derive_rng(config.master_seed, *path, "walk"))
    net = PredictiveNet.init(spec.n_states, config.hidden_dim,
                             derive_rng(config.master_seed, *path, "init"), scale=config.init_scale)
    losses = train_on_sequence(net, walk, config.learning_rate)
    onehot_2d = pca(np.eye(spec.n_states), 2).projected
    hidden_2d = pca(net.hidden(), 2).projected
    sep_hidden = separation_score(hidden_2d, labels)
    sep_onehot = separation_score(onehot_2d, labels)
    perm = permutation_scores(hidden_2d, labels, config.n_permutations,
                              derive_rng(config.master_seed, *path, "permute"))
    tail = losses[-min(len(losses), 1000):]
    return {
        "labels": labels, "onehot_2d": onehot_2d, "hidden_2d": hidden_2d,
        "sep_hidden": sep_hidden, "sep_onehot": sep_onehot,
        "perm_mean": float(perm.mean()) if perm.size else None,
        "perm_q95": float(np.percentile(perm, 95)) if perm.size else None,
        "perm_p": float((1 + np.sum(perm >= sep_hidden)) / (1 + perm.size)),
        "final_loss": float(tail.mean()),
    }


def run_community(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    outcomes = _map_runs(community_run, [(config, r) for r in range(config.n_runs)], workers)
    result = ExperimentResult(config, metric_columns=(
        "sep_hidden", "sep_onehot", "perm_q95", "perm_p", "final_loss",
    ))
    for run, out in enumerate(outcomes):
        row = _row(
            config, run, 1, config.walk_steps, 0.0, sep_hidden=out["sep_hidden"],
            sep_onehot=out["sep_onehot"], perm_q95=out["perm_q95"], perm_p=out["perm_p"],
            final_loss=out["final_loss"],
        )
        # No agent learns here; the representation comes from the predictive network.
        row["algorithm"] = COMMUNITY_MODEL
        result.records.append(row)
    first = outcomes[0]
    labels = first["labels"].astype(float)[:, None]
    result.points["onehot_2d"] = np.hstack([labels, first["onehot_2d"]])
    result.points["hidden_2d"] = np.hstack([labels, first["hidden_2d"]])
    result.summary = {
        key: [o[key] for o in outcomes]
        for key in ("sep_hidden", "sep_onehot", "perm_mean", "perm_q95", "perm_p", "final_loss")
    }
    return result


def run_experiment(config: ExperimentConfig, workers: int = 1, snapshot: bool = False) -> ExperimentResult:
    """Dispatch ``config`` to its protocol.

    ``snapshot`` keeps the final agent tables of the first run; only the
    agent-based protocols (revaluation, transfer) have any.
    """
    if config.experiment == "revaluation":
        return run_revaluation(config, workers, snapshot=snapshot)
    if config.experiment.startswith("transfer-"):
        return run_transfer(config, workers=workers, snapshot=snapshot)
    if config.experiment == "place-grid":
        return run_place_grid(config, workers)
    return run_community(config, workers)

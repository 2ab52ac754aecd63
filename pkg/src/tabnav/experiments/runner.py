from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from tabnav.agents.agent import Agent
from tabnav.env.graph import GraphSpec, Transition, reset, step

_NEEDS_NEXT_ACTION = ("TD-SR", "Dyna-SR")


@dataclass
class Episode:
    steps: int
    ret: float
    done: bool
    trajectory: list[Transition] = field(default_factory=list)
    observations: list[np.ndarray] | None = None


def run_episode(agent: Agent, spec: GraphSpec, max_steps: int, rng: np.random.Generator,
                start: int | None = None, learn: bool = True, encoding=None) -> Episode:
    """Run one episode, learning online.

    ``rng`` drives the environment only; the agent samples from its own
    generator. SR learners pick the next action before their update (the
    on-policy bootstrap needs it); every other learner updates first so its
    next choice already reflects the step.
    """
    if encoding is not None:
        from tabnav.env.observe import observe
    agent.begin_episode()
    s = reset(spec, rng) if start is None else start
    a = agent.act(s)
    traj: list[Transition] = []
    obs = [observe(spec, s, encoding)] if encoding is not None else None
    ret = 0.0
    done = False
    sr_style = agent.algorithm in _NEEDS_NEXT_ACTION
    for _ in range(max_steps):
        t = step(spec, s, a, rng)
        traj.append(t)
        ret += t.r
        if obs is not None:
            obs.append(observe(spec, t.s_next, encoding))
        if t.done:
            if learn:
                agent.update(t)
            done = True
            break
        if sr_style:
            a_next = agent.act(t.s_next)
            if learn:
                agent.update(t, a_next)
        else:
            if learn:
                agent.update(t)
            a_next = agent.act(t.s_next)
        s, a = t.s_next, a_next
    return Episode(len(traj), ret, done, traj, obs)

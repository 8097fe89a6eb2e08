"""Social-behavior measurements over trajectory logs.

Scores enter the transmission metric as mean achievements per episode; the
standard deviation is propagated with first-order independent-sample rules.
Proximity and tool statistics are exact counts over replayed states and
logged events.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .log import TrajectoryLog, iter_states
from .observation import visible_players
from .state import PALIVE
from .types import Achievement, EventType, N_ACHIEVEMENTS, events_of


class ZeroExpertScore(ValueError):
    """The transmission metric divides by the expert score."""


@dataclass
class ScenarioScores:
    """Mean achievements per episode for each expert-visibility variant,
    with optional per-episode samples for error propagation."""

    a_full: float
    a_half: float
    a_solo: float
    e: float
    full_samples: list[float] | None = None
    half_samples: list[float] | None = None
    solo_samples: list[float] | None = None
    expert_samples: list[float] | None = None

    @classmethod
    def from_samples(cls, full, half, solo, expert) -> "ScenarioScores":
        return cls(
            a_full=float(np.mean(full)),
            a_half=float(np.mean(half)),
            a_solo=float(np.mean(solo)),
            e=float(np.mean(expert)),
            full_samples=list(full),
            half_samples=list(half),
            solo_samples=list(solo),
            expert_samples=list(expert),
        )


@dataclass
class CTResult:
    value: float
    std: float | None


def cultural_transmission(scores: ScenarioScores) -> CTResult:
    """Half the expert-normalized gain of the full and half variants over
    solo. Positive means the expert's presence helped."""
    if scores.e == 0:
        raise ZeroExpertScore("expert score is zero")
    e = scores.e
    value = 0.5 * (scores.a_full - scores.a_solo) / e \
        + 0.5 * (scores.a_half - scores.a_solo) / e

    std = None
    samples = (scores.full_samples, scores.half_samples,
               scores.solo_samples, scores.expert_samples)
    if all(s is not None and len(s) > 1 for s in samples):
        def sem(xs):
            return float(np.std(xs, ddof=1) / np.sqrt(len(xs)))
        sf, sh, ss, se = (sem(s) for s in samples)
        var = (sf ** 2 + sh ** 2) / (4 * e ** 2) + ss ** 2 / e ** 2 \
            + (value ** 2) * se ** 2 / e ** 2
        std = float(np.sqrt(var))
    return CTResult(value=float(value), std=std)


@dataclass
class ProximityReport:
    pair_fractions: dict[tuple[int, int], float]
    pair_steps: dict[tuple[int, int], int]
    mean_fraction: float


def proximity_fraction(log: TrajectoryLog, backend: str = "fast") -> ProximityReport:
    """Fraction of mutual-alive steps each ordered pair spends within view."""
    cfg = log.config()
    n = log.n_agents
    within = np.zeros((n, n), dtype=np.int64)
    both_alive = np.zeros((n, n), dtype=np.int64)
    for t, state in iter_states(log, backend=backend):
        if t == 0:
            continue
        alive = state.player_arr[:, PALIVE] != 0
        vis = [visible_players(state, i, cfg) if alive[i] else []
               for i in range(n)]
        for i in range(n):
            for j in range(n):
                if i == j or not (alive[i] and alive[j]):
                    continue
                both_alive[i, j] += 1
                if j in vis[i]:
                    within[i, j] += 1
    fracs = {}
    steps = {}
    vals = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            steps[(i, j)] = int(both_alive[i, j])
            if both_alive[i, j] > 0:
                f = within[i, j] / both_alive[i, j]
                fracs[(i, j)] = float(f)
                vals.append(f)
            else:
                fracs[(i, j)] = 0.0
    mean = float(np.mean(vals)) if vals else 0.0
    return ProximityReport(pair_fractions=fracs, pair_steps=steps,
                           mean_fraction=mean)


@dataclass
class ToolUseStats:
    own_uses: np.ndarray          # (N,) uses of a station the agent placed
    other_uses: np.ndarray        # (N,) uses of someone else's station
    by_placer: np.ndarray         # (N, N) user x placer counts

    @property
    def total_uses(self) -> np.ndarray:
        return self.own_uses + self.other_uses

    def own_use_probability(self) -> np.ndarray:
        total = self.total_uses
        with np.errstate(invalid="ignore"):
            p = np.where(total > 0, self.own_uses / np.maximum(total, 1), np.nan)
        return p

    def pooled_own_probability(self) -> float:
        total = int(self.total_uses.sum())
        if total == 0:
            return float("nan")
        return float(self.own_uses.sum() / total)

    def pooled_own_ci(self, z: float = 1.96) -> tuple[float, float] | None:
        """Wilson score interval for the pooled own-use probability."""
        n = int(self.total_uses.sum())
        if n == 0:
            return None
        p = self.pooled_own_probability()
        denom = 1 + z ** 2 / n
        center = (p + z ** 2 / (2 * n)) / denom
        margin = z * np.sqrt(p * (1 - p) / n + z ** 2 / (4 * n ** 2)) / denom
        return (max(0.0, center - margin), min(1.0, center + margin))


def tool_use_stats(logs: list[TrajectoryLog] | TrajectoryLog) -> ToolUseStats:
    """Own-vs-other station use counts from tool_used events."""
    if isinstance(logs, TrajectoryLog):
        logs = [logs]
    n = logs[0].n_agents
    own = np.zeros(n, dtype=np.int64)
    other = np.zeros(n, dtype=np.int64)
    by_placer = np.zeros((n, n), dtype=np.int64)
    for log in logs:
        for step_events in log.events:
            for row in events_of(step_events, EventType.TOOL_USED):
                user, placer = int(row[1]), int(row[4])
                if placer < 0:
                    continue
                by_placer[user, placer] += 1
                if placer == user:
                    own[user] += 1
                else:
                    other[user] += 1
    return ToolUseStats(own_uses=own, other_uses=other, by_placer=by_placer)


@dataclass
class AchievementSummary:
    probabilities: np.ndarray     # (22, N) per-agent episode success rate
    pooled: np.ndarray            # (22,) pooled over agents
    mean_score: float             # mean achievements per (episode, agent)
    std_score: float
    episodes: int

    def rows(self):
        for ach in Achievement:
            yield (ach.name.lower(), *self.probabilities[int(ach)].tolist(),
                   float(self.pooled[int(ach)]))


def achievement_summary(logs: list[TrajectoryLog]) -> AchievementSummary:
    """Episode-level unlock probabilities and the mean-achievements score."""
    if not logs:
        raise ValueError("need at least one episode log")
    n = logs[0].n_agents
    hits = np.zeros((N_ACHIEVEMENTS, n), dtype=np.int64)
    scores = []
    for log in logs:
        for agent in range(n):
            mask = int(log.final_ach[agent])
            scores.append(bin(mask).count("1"))
            for ach in range(N_ACHIEVEMENTS):
                if mask >> ach & 1:
                    hits[ach, agent] += 1
    e = len(logs)
    probs = hits / e
    scores_arr = np.array(scores, dtype=np.float64)
    return AchievementSummary(
        probabilities=probs,
        pooled=probs.mean(axis=1),
        mean_score=float(scores_arr.mean()),
        std_score=float(scores_arr.std(ddof=1)) if scores_arr.size > 1 else 0.0,
        episodes=e,
    )


# Table emitters ----------------------------------------------------------

def summary_to_json(summary: AchievementSummary) -> str:
    return json.dumps({
        "episodes": summary.episodes,
        "mean_score": summary.mean_score,
        "std_score": summary.std_score,
        "pooled": {Achievement(i).name.lower(): float(p)
                   for i, p in enumerate(summary.pooled)},
        "per_agent": {Achievement(i).name.lower(): summary.probabilities[i].tolist()
                      for i in range(N_ACHIEVEMENTS)},
    }, indent=2)


def summary_to_csv(summary: AchievementSummary) -> str:
    out = io.StringIO()
    n = summary.probabilities.shape[1]
    writer = csv.writer(out)
    writer.writerow(["achievement"] + [f"agent_{i}" for i in range(n)] + ["pooled"])
    for row in summary.rows():
        writer.writerow(row)
    writer.writerow(["mean_score", summary.mean_score])
    writer.writerow(["std_score", summary.std_score])
    return out.getvalue()


def tools_to_json(stats: ToolUseStats) -> str:
    ci = stats.pooled_own_ci()
    return json.dumps({
        "own_uses": stats.own_uses.tolist(),
        "other_uses": stats.other_uses.tolist(),
        "own_use_probability": [None if np.isnan(p) else float(p)
                                for p in stats.own_use_probability()],
        "pooled_own_probability": None if np.isnan(stats.pooled_own_probability())
        else stats.pooled_own_probability(),
        "pooled_own_ci95": list(ci) if ci is not None else None,
        "uniform_baseline": 1.0 / stats.by_placer.shape[0],
        "by_placer": stats.by_placer.tolist(),
    }, indent=2)


def tools_to_csv(stats: ToolUseStats) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["agent", "own_uses", "other_uses", "own_use_probability"])
    probs = stats.own_use_probability()
    for i in range(len(stats.own_uses)):
        p = "" if np.isnan(probs[i]) else f"{probs[i]:.6f}"
        writer.writerow([i, int(stats.own_uses[i]), int(stats.other_uses[i]), p])
    return out.getvalue()


def proximity_to_json(rep: ProximityReport) -> str:
    return json.dumps({
        "mean_fraction": rep.mean_fraction,
        "pairs": {f"{i}->{j}": f for (i, j), f in rep.pair_fractions.items()},
        "pair_steps": {f"{i}->{j}": s for (i, j), s in rep.pair_steps.items()},
    }, indent=2)


def proximity_to_csv(rep: ProximityReport) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["observer", "target", "fraction", "mutual_alive_steps"])
    for (i, j), f in sorted(rep.pair_fractions.items()):
        writer.writerow([i, j, f"{f:.6f}", rep.pair_steps[(i, j)]])
    writer.writerow(["mean", "", f"{rep.mean_fraction:.6f}", ""])
    return out.getvalue()


def ct_to_json(result: CTResult, scores: ScenarioScores) -> str:
    return json.dumps({
        "ct": result.value,
        "ct_std": result.std,
        "a_full": scores.a_full,
        "a_half": scores.a_half,
        "a_solo": scores.a_solo,
        "expert_score": scores.e,
    }, indent=2)


def plot_achievements(summary: AchievementSummary, path: str) -> None:
    """Bar chart of pooled unlock probabilities (optional matplotlib)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = [Achievement(i).name.lower() for i in range(N_ACHIEVEMENTS)]
    fig, ax = plt.subplots(figsize=(10, 4))
    ax.bar(names, summary.pooled, color="#4878a8")
    ax.set_ylabel("episode success probability")
    ax.set_ylim(0, 1)
    plt.xticks(rotation=75, ha="right", fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_achievement_heatmap(summary: AchievementSummary, path: str) -> None:
    """Per-agent x per-achievement probability heatmap (optional matplotlib)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    n = summary.probabilities.shape[1]
    fig, ax = plt.subplots(figsize=(10, max(2.5, 0.5 * n)))
    im = ax.imshow(summary.probabilities.T, vmin=0, vmax=1, aspect="auto",
                   cmap="viridis")
    ax.set_yticks(range(n), [f"agent {i}" for i in range(n)])
    ax.set_xticks(range(N_ACHIEVEMENTS),
                  [Achievement(i).name.lower() for i in range(N_ACHIEVEMENTS)],
                  rotation=75, ha="right", fontsize=7)
    fig.colorbar(im, ax=ax, label="episode success probability")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_tool_use(stats: ToolUseStats, path: str) -> None:
    """Stacked own-vs-other station use bars (optional matplotlib)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    n = len(stats.own_uses)
    idx = np.arange(n)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(idx, stats.own_uses, label="own station", color="#4878a8")
    ax.bar(idx, stats.other_uses, bottom=stats.own_uses,
           label="other's station", color="#d1894b")
    ax.set_xlabel("agent")
    ax.set_ylabel("station uses")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)

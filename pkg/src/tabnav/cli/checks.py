"""Pass/fail checks that ``replicate --check`` applies to its results."""
from __future__ import annotations

from dataclasses import dataclass

from tabnav.experiments.config import ExperimentResult


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def _revaluation(results: dict[str, ExperimentResult]) -> list[Check]:
    out = []
    mean = {alg: (r.summary["mean_score_reward"], r.summary["mean_score_transition"])
            for alg, r in results.items()}
    for alg in ("Dyna-SR", "MBSR"):
        if alg in mean:
            rew, tra = mean[alg]
            out.append(Check(f"{alg} reward > transition + 0.1", rew > tra + 0.1,
                             f"reward={rew:.4f} transition={tra:.4f}"))
    if "MBV" in mean:
        rew, tra = mean["MBV"]
        out.append(Check("MBV both > 0.2", rew > 0.2 and tra > 0.2,
                         f"reward={rew:.4f} transition={tra:.4f}"))
    if "TD-Q" in mean:
        rew, tra = mean["TD-Q"]
        out.append(Check("TD-Q both within 0.05 of 0", abs(rew) <= 0.05 and abs(tra) <= 0.05,
                         f"reward={rew:.4f} transition={tra:.4f}"))
    return out


def _transfer(results: dict[str, ExperimentResult], adapt: tuple[str, ...],
              fail: tuple[str, ...]) -> list[Check]:
    out = []
    for alg, should in [(a, True) for a in adapt] + [(a, False) for a in fail]:
        if alg not in results:
            continue
        s = results[alg].summary
        ok = s["adapted"] is should
        verb = "adapts" if should else "does not adapt"
        out.append(Check(f"{alg} {verb}", ok, f"ratio={s['ratio']:.4f} (bound {results[alg].config.adapt_ratio})"))
    return out


def _place_grid(results: dict[str, ExperimentResult]) -> list[Check]:
    s = next(iter(results.values())).summary
    frac, low = min(s["peak_fraction"]), min(s["min_value"])
    return [
        Check("place maps peak at or next to their cell", frac >= 0.9, f"fraction={frac:.4f}"),
        Check("place maps non-negative", low >= 0.0, f"min={low:.6g}"),
    ]


def _community(results: dict[str, ExperimentResult]) -> list[Check]:
    s = next(iter(results.values())).summary
    out = []
    for h, o, q in zip(s["sep_hidden"], s["sep_onehot"], s["perm_q95"]):
        out.append(Check("hidden separation > one-hot + 0.1", h > o + 0.1, f"hidden={h:.4f} onehot={o:.4f}"))
        out.append(Check("hidden separation > permutation 95th percentile", h > q,
                         f"hidden={h:.4f} q95={q:.4f}"))
    return out


def run_checks(name: str, results: dict[str, ExperimentResult]) -> list[Check]:
    if name == "revaluation":
        return _revaluation(results)
    if name == "transfer-reward":
        return _transfer(results, adapt=("Dyna-SR", "MBV"), fail=("TD-Q",))
    if name == "transfer-structure":
        return _transfer(results, adapt=("MBV",), fail=("Dyna-SR",))
    if name == "place-grid":
        return _place_grid(results)
    return _community(results)

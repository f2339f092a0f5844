from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

CRITERIA = (
    "info_gain",
    "gain_ratio",
    "gini_gain",
    "chi_squared",
    "g_statistic",
    "dkm",
    "normalized_gain",
    "error_reduction",
)
ARITIES = ("binary", "multiway")
STOP_RULES = ("min_instances", "max_depth", "purity_threshold", "chi_sq_threshold")
MISSING_TRAIN = ("ignore_row", "majority_branch", "fractional_weight")
MISSING_TEST = ("majority_branch", "most_frequent_value", "halt_and_use_node_distribution")
PRUNERS = ("none", "reduced_error", "pessimistic", "min_error", "max_depth_cut")


class Choice(NamedTuple):
    """A tagged component: its name plus the one hyper-parameter it carries (if any)."""

    kind: str
    param: float | int | None = None

    def __str__(self):
        return self.kind if self.param is None else f"{self.kind}({self.param:g})"


@dataclass(frozen=True)
class DTConfig:
    split_criterion: str = "info_gain"
    split_arity: str = "binary"
    stop_rule: Choice = Choice("min_instances", 1)
    missing_train: str = "ignore_row"
    missing_test: str = "majority_branch"
    pruning: Choice = Choice("none")

    def __post_init__(self):
        checks = ((self.split_criterion, CRITERIA), (self.split_arity, ARITIES),
                  (self.stop_rule.kind, STOP_RULES), (self.missing_train, MISSING_TRAIN),
                  (self.missing_test, MISSING_TEST), (self.pruning.kind, PRUNERS))
        for value, allowed in checks:
            if value not in allowed:
                raise ValueError(f"unknown component {value!r}; expected one of {allowed}")

    def describe(self) -> str:
        return (f"criterion={self.split_criterion} arity={self.split_arity} "
                f"stop={self.stop_rule} missing_train={self.missing_train} "
                f"missing_test={self.missing_test} pruning={self.pruning}")

"""Tree persistence (JSON model files) and the indented text view.

Text format, one node per line::

    root [n=14 | yes:9 no:5] -> yes
    |   outlook = sunny [n=5 | yes:2 no:3] -> no
    |   |   humidity <= 75 [n=2 | yes:2 no:0] -> yes

Each line is ``<indent><test> [n=<weight> | <class>:<count> ...] -> <label>``
where the indent is one ``|   `` per depth level and ``<test>`` is the branch
condition that leads from the parent (``root`` for the root). Binary nominal
splits use ``=``/``!=``; numeric splits use ``<=``/``>``; multiway nominal
splits have one ``=`` line per declared value. Counts are printed with ``%g``.
"""

from __future__ import annotations

import json
from dataclasses import asdict

import numpy as np

from ..dataset import Attribute
from .config import Choice, DTConfig
from .tree import DecisionTree, Node


def _branch_label(parent: Node, b: int, features) -> str:
    att = features[parent.attribute]
    if parent.threshold is not None:
        op = "<=" if b == 0 else ">"
        return f"{att.name} {op} {parent.threshold:g}"
    if parent.value is not None:
        op = "=" if b == 0 else "!="
        return f"{att.name} {op} {att.values[parent.value]}"
    return f"{att.name} = {att.values[b]}"


def to_text(tree: DecisionTree) -> str:
    lines = []

    def walk(node, test, depth):
        dist = " ".join(f"{c}:{v:g}" for c, v in zip(tree.classes, node.counts))
        lines.append(f"{'|   ' * depth}{test} [n={node.counts.sum():g} | {dist}]"
                     f" -> {tree.classes[node.label]}")
        for b, child in enumerate(node.children):
            walk(child, _branch_label(node, b, tree.features), depth + 1)

    walk(tree.root, "root", 0)
    return "\n".join(lines) + "\n"


def _node_to_dict(node: Node) -> dict:
    d = {"counts": node.counts.tolist(), "label": node.label, "depth": node.depth}
    if node.children:
        d.update(attribute=node.attribute, threshold=node.threshold, value=node.value,
                 branch_weights=node.branch_weights.tolist(), fill_value=node.fill_value,
                 children=[_node_to_dict(c) for c in node.children])
    return d


def _node_from_dict(d: dict) -> Node:
    node = Node(np.asarray(d["counts"], dtype=float), int(d["label"]), int(d["depth"]))
    if "children" in d:
        node.attribute = int(d["attribute"])
        node.threshold = d["threshold"]
        node.value = d["value"]
        node.branch_weights = np.asarray(d["branch_weights"], dtype=float)
        node.fill_value = d["fill_value"]
        node.children = tuple(_node_from_dict(c) for c in d["children"])
    return node


def config_to_dict(cfg: DTConfig) -> dict:
    return asdict(cfg)


def config_from_dict(d: dict) -> DTConfig:
    return DTConfig(d["split_criterion"], d["split_arity"], Choice(*d["stop_rule"]),
                    d["missing_train"], d["missing_test"], Choice(*d["pruning"]))


def tree_to_dict(tree: DecisionTree) -> dict:
    return {
        "format": "autodt-tree/1",
        "classes": list(tree.classes),
        "features": [{"name": a.name, "values": list(a.values) if a.is_nominal else None}
                     for a in tree.features],
        "config": config_to_dict(tree.config),
        "root": _node_to_dict(tree.root),
    }


def tree_from_dict(d: dict) -> DecisionTree:
    if d.get("format") != "autodt-tree/1":
        raise ValueError("not an autodt tree model")
    features = tuple(Attribute(f["name"], tuple(f["values"]) if f["values"] is not None else None)
                     for f in d["features"])
    return DecisionTree(_node_from_dict(d["root"]), features, tuple(d["classes"]),
                        config_from_dict(d["config"]))


def save_model(tree: DecisionTree, path) -> None:
    with open(path, "w") as fh:
        json.dump(tree_to_dict(tree), fh, indent=1)


def load_model(path) -> DecisionTree:
    with open(path) as fh:
        return tree_from_dict(json.load(fh))

"""Monolith description parsing and attributed-graph assembly.

The input is a JSON document describing classes, class-to-class calls,
inheritance pairs and the set of classes reached by each entrypoint::

    {"classes": ["A", "B"],
     "calls": [["A", "B"]],
     "inheritance": [],
     "entrypoints": {"ep1": ["A", "B"]}}

Node indices follow the order of ``classes``; attribute columns for the
entrypoint block follow the lexicographic order of entrypoint names.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from os import PathLike
from typing import Any, Mapping

import numpy as np

__all__ = [
    "MonolithFormatError",
    "MonolithValidationError",
    "EmptyGraphError",
    "RawMonolith",
    "AppGraph",
    "parse_monolith",
    "monolith_from_dict",
    "monolith_to_dict",
    "prune_untraced",
    "build_adjacency",
    "build_attribute_blocks",
    "row_normalize",
    "assemble_attributes",
    "symmetrize",
    "normalize_adjacency",
    "build_graph",
    "load_graph",
]

_KNOWN_KEYS = {"classes", "calls", "inheritance", "entrypoints"}


class MonolithFormatError(ValueError):
    """The input file is not well-formed JSON of the expected shape."""


class MonolithValidationError(ValueError):
    """The input is well-formed but references unknown or invalid names."""


class EmptyGraphError(ValueError):
    """No class survives pruning, so there is nothing to partition."""


@dataclass(frozen=True)
class RawMonolith:
    classes: tuple[str, ...]
    calls: tuple[tuple[str, str], ...]
    inheritance: tuple[tuple[str, str], ...]
    entrypoint_traces: Mapping[str, frozenset[str]]

    @property
    def entrypoint_names(self) -> list[str]:
        return sorted(self.entrypoint_traces)


@dataclass(frozen=True)
class AppGraph:
    """Attributed class-dependency graph.

    ``adjacency`` keeps the original call direction; consumers that need an
    undirected view call :func:`symmetrize`.
    """

    node_names: tuple[str, ...]
    adjacency: np.ndarray
    attributes: np.ndarray
    entrypoint_names: tuple[str, ...]
    ep: np.ndarray
    co: np.ndarray
    inh: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.node_names)

    @property
    def n_features(self) -> int:
        return self.attributes.shape[1]


def _expect_pairs(doc: Mapping[str, Any], key: str) -> list[tuple[str, str]]:
    value = doc.get(key, [])
    if not isinstance(value, list):
        raise MonolithFormatError(f"'{key}' must be a list of [name, name] pairs")
    pairs = []
    for k, item in enumerate(value):
        if (
            not isinstance(item, (list, tuple))
            or len(item) != 2
            or not all(isinstance(s, str) for s in item)
        ):
            raise MonolithFormatError(f"'{key}[{k}]' must be a pair of strings, got {item!r}")
        pairs.append((item[0], item[1]))
    return pairs


def monolith_from_dict(doc: Mapping[str, Any]) -> RawMonolith:
    """Validate a decoded JSON document and build a :class:`RawMonolith`."""
    if not isinstance(doc, Mapping):
        raise MonolithFormatError("top-level JSON value must be an object")
    unknown = sorted(set(doc) - _KNOWN_KEYS)
    if unknown:
        raise MonolithFormatError(f"unknown top-level keys: {', '.join(unknown)}")
    if "classes" not in doc:
        raise MonolithFormatError("missing required key 'classes'")

    raw_classes = doc["classes"]
    if not isinstance(raw_classes, list) or not all(isinstance(c, str) for c in raw_classes):
        raise MonolithFormatError("'classes' must be a list of strings")
    classes = tuple(dict.fromkeys(raw_classes))
    known = set(classes)

    def check(name: str, where: str) -> str:
        if name not in known:
            raise MonolithValidationError(f"unknown class {name!r} referenced in {where}")
        return name

    calls: dict[tuple[str, str], None] = {}
    for src, dst in _expect_pairs(doc, "calls"):
        check(src, "calls")
        check(dst, "calls")
        if src != dst:  # self-calls would land on the diagonal
            calls[(src, dst)] = None

    inheritance: dict[frozenset[str], tuple[str, str]] = {}
    for a, b in _expect_pairs(doc, "inheritance"):
        check(a, "inheritance")
        check(b, "inheritance")
        if a == b:
            raise MonolithValidationError(f"class {a!r} cannot inherit from itself")
        inheritance.setdefault(frozenset((a, b)), (a, b))

    eps = doc.get("entrypoints", {})
    if not isinstance(eps, Mapping):
        raise MonolithFormatError("'entrypoints' must be an object mapping names to class lists")
    traces: dict[str, frozenset[str]] = {}
    for name in sorted(eps):
        members = eps[name]
        if not isinstance(members, list) or not all(isinstance(c, str) for c in members):
            raise MonolithFormatError(f"entrypoint {name!r} must map to a list of class names")
        traces[name] = frozenset(check(c, f"entrypoint {name!r}") for c in members)

    return RawMonolith(
        classes=classes,
        calls=tuple(calls),
        inheritance=tuple(inheritance.values()),
        entrypoint_traces=traces,
    )


def monolith_to_dict(raw: RawMonolith) -> dict[str, Any]:
    order = {c: i for i, c in enumerate(raw.classes)}
    return {
        "classes": list(raw.classes),
        "calls": [list(p) for p in raw.calls],
        "inheritance": [list(p) for p in raw.inheritance],
        "entrypoints": {
            name: sorted(raw.entrypoint_traces[name], key=order.__getitem__)
            for name in raw.entrypoint_names
        },
    }


def parse_monolith(path: str | PathLike[str]) -> RawMonolith:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        line = text.splitlines()[exc.lineno - 1] if text.splitlines() else ""
        raise MonolithFormatError(
            f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {line.strip()}"
        ) from exc
    return monolith_from_dict(doc)


def prune_untraced(raw: RawMonolith) -> RawMonolith:
    """Drop classes that appear in no entrypoint trace."""
    traced = set().union(*raw.entrypoint_traces.values()) if raw.entrypoint_traces else set()
    keep = tuple(c for c in raw.classes if c in traced)
    if not keep:
        raise EmptyGraphError("no class appears in any entrypoint trace")
    if len(keep) == len(raw.classes):
        return raw
    kept = set(keep)
    return RawMonolith(
        classes=keep,
        calls=tuple(p for p in raw.calls if p[0] in kept and p[1] in kept),
        inheritance=tuple(p for p in raw.inheritance if p[0] in kept and p[1] in kept),
        entrypoint_traces=raw.entrypoint_traces,
    )


def build_adjacency(raw: RawMonolith) -> np.ndarray:
    index = {c: i for i, c in enumerate(raw.classes)}
    n = len(raw.classes)
    adj = np.zeros((n, n))
    for src, dst in raw.calls:
        adj[index[src], index[dst]] = 1.0
    np.fill_diagonal(adj, 0.0)
    return adj


def build_attribute_blocks(raw: RawMonolith) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return the unnormalized (EP, Co, In) blocks.

    ``Co[i, j]`` counts traces containing both i and j, so ``Co[i, i]`` is the
    number of traces containing i.
    """
    index = {c: i for i, c in enumerate(raw.classes)}
    n = len(raw.classes)
    names = raw.entrypoint_names
    ep = np.zeros((n, len(names)))
    for p, name in enumerate(names):
        for c in raw.entrypoint_traces[name]:
            if c in index:
                ep[index[c], p] = 1.0
    co = ep @ ep.T
    inh = np.zeros((n, n))
    for a, b in raw.inheritance:
        inh[index[a], index[b]] = inh[index[b], index[a]] = 1.0
    return ep, co, inh


def row_normalize(block: np.ndarray) -> np.ndarray:
    """L1-normalize rows; all-zero rows stay zero."""
    sums = np.abs(block).sum(axis=1, keepdims=True)
    return np.divide(block, sums, out=np.zeros_like(block, dtype=float), where=sums > 0)


def assemble_attributes(blocks: tuple[np.ndarray, ...]) -> np.ndarray:
    rows = {b.shape[0] for b in blocks}
    if len(rows) != 1:
        raise ValueError(f"attribute blocks disagree on row count: {sorted(rows)}")
    return np.hstack([row_normalize(b) for b in blocks])


def symmetrize(adj: np.ndarray) -> np.ndarray:
    return np.maximum(adj, adj.T)


def normalize_adjacency(adj: np.ndarray, symmetrize_edges: bool = True) -> np.ndarray:
    """Renormalized propagation matrix D^-1/2 (A + I) D^-1/2."""
    a = symmetrize(adj) if symmetrize_edges else np.asarray(adj, dtype=float)
    a_tilde = a + np.eye(a.shape[0])
    d_inv_sqrt = 1.0 / np.sqrt(a_tilde.sum(axis=1))
    return d_inv_sqrt[:, None] * a_tilde * d_inv_sqrt[None, :]


def build_graph(raw: RawMonolith) -> AppGraph:
    pruned = prune_untraced(raw)
    ep, co, inh = build_attribute_blocks(pruned)
    return AppGraph(
        node_names=pruned.classes,
        adjacency=build_adjacency(pruned),
        attributes=assemble_attributes((ep, co, inh)),
        entrypoint_names=tuple(pruned.entrypoint_names),
        ep=ep,
        co=co,
        inh=inh,
    )


def load_graph(path: str | PathLike[str]) -> AppGraph:
    return build_graph(parse_monolith(path))

"""
Tree-shaped power packet grid.

Every BS hangs off the central router through a tree of identical-length
links. A link is named by its child node, so a route is just the set of child
ids it crosses.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import pandas as pd

from utils.errors import TopologyError
from utils.models import GridConfig

logger = logging.getLogger(__name__)

ROUTER = -1
ROUTER_LABEL = "router"


@dataclass(frozen=True)
class Route:
    """Node sequence from source to consumer and the links it crosses."""
    nodes: tuple[int, ...]
    links: frozenset[int]

    @property
    def hop_count(self) -> int:
        return len(self.nodes) - 1

    @property
    def source(self) -> int:
        return self.nodes[0]

    @property
    def consumer(self) -> int:
        return self.nodes[-1]


class PpgTopology:
    """Immutable tree of BSs rooted at the router."""

    def __init__(self, parent: dict[int, int], config: Optional[GridConfig] = None):
        self.config = config or GridConfig()
        if self.config.loss_per_hop >= 1.0:
            raise TopologyError(
                f"per-hop loss fraction {self.config.loss_per_hop:.3g} >= 1; every transfer would be lost")
        self._parent = dict(parent)
        self._validate()
        self._ancestors = {bs: self._walk_up(bs) for bs in self._parent}
        self._ancestors[ROUTER] = (ROUTER,)

    def _validate(self):
        if ROUTER in self._parent:
            raise TopologyError("the router cannot have a parent")
        ids = sorted(self._parent)
        if ids != list(range(len(ids))):
            raise TopologyError(f"BS ids must be 0..{len(ids) - 1} without gaps, got {ids}")
        for child, parent in self._parent.items():
            if parent != ROUTER and parent not in self._parent:
                raise TopologyError(f"node {child} has unknown parent {parent}")
            if parent == child:
                raise TopologyError(f"node {child} is its own parent")
        for bs in self._parent:
            seen = {bs}
            node = self._parent[bs]
            while node != ROUTER:
                if node in seen:
                    raise TopologyError(f"cycle through node {node}")
                seen.add(node)
                node = self._parent[node]

    def _walk_up(self, node: int) -> tuple[int, ...]:
        path = [node]
        while node != ROUTER:
            node = self._parent[node]
            path.append(node)
        return tuple(path)

    @property
    def n_bs(self) -> int:
        return len(self._parent)

    @property
    def bs_ids(self) -> list[int]:
        return list(range(self.n_bs))

    @property
    def links(self) -> frozenset[int]:
        return frozenset(self._parent)

    @property
    def loss_per_hop(self) -> float:
        return self.config.loss_per_hop

    def parent(self, node: int) -> int:
        self._require(node)
        if node == ROUTER:
            raise TopologyError("the router has no parent")
        return self._parent[node]

    def depth(self, node: int) -> int:
        self._require(node)
        return len(self._ancestors[node]) - 1

    def edges(self) -> list[tuple[int, int]]:
        return [(p, c) for c, p in sorted(self._parent.items())]

    def _require(self, node: int):
        if node != ROUTER and node not in self._parent:
            raise TopologyError(f"unknown node id {node}")

    def __contains__(self, node: int) -> bool:
        return node == ROUTER or node in self._parent

    def __repr__(self) -> str:
        return f"PpgTopology(n_bs={self.n_bs}, loss_per_hop={self.loss_per_hop:.4g})"


def unique_route(topo: PpgTopology, src: int, dst: int) -> Route:
    """The only simple path src -> dst: up to the lowest common ancestor, then down."""
    topo._require(src)
    topo._require(dst)
    if src == dst:
        raise TopologyError(f"route endpoints must differ, got {src} twice")
    up, down = topo._ancestors[src], topo._ancestors[dst]
    down_set = set(down)
    i = next(k for k, node in enumerate(up) if node in down_set)
    lca = up[i]
    j = down.index(lca)
    nodes = up[:i + 1] + tuple(reversed(down[:j]))
    links = frozenset(up[:i]) | frozenset(down[:j])
    return Route(nodes, links)


def attenuation(topo: PpgTopology, g: int) -> float:
    """Delivered fraction after g hops: max(0, 1 - g * delta)."""
    if g < 1:
        raise ValueError(f"hop count must be >= 1, got {g}")
    return max(0.0, 1.0 - g * topo.loss_per_hop)


def build_default_topology(n_bs: int, config: Optional[GridConfig] = None) -> PpgTopology:
    """
    Spread n_bs BSs over `config.branches` trees under the router.

    BS ids are contiguous per branch. Inside a branch the k-th BS (1-based)
    hangs off BS k // 2, and the first one off the router, so 6 BSs form
    1 -> (2, 3), 2 -> (4, 5), 3 -> 6.
    """
    config = config or GridConfig()
    if n_bs < 1:
        raise TopologyError("need at least one BS")
    branches = min(config.branches, n_bs)
    size = math.ceil(n_bs / branches)
    parent: dict[int, int] = {}
    start = 0
    for b in range(branches):
        count = min(size, n_bs - start)
        for pos in range(1, count + 1):
            parent[start + pos - 1] = ROUTER if pos == 1 else start + pos // 2 - 1
        start += count
    return PpgTopology(parent, config)


def _node_id(token: str, line: int) -> int:
    token = token.strip()
    if token.lower() == ROUTER_LABEL:
        return ROUTER
    try:
        return int(token)
    except ValueError:
        raise TopologyError(f"line {line}: '{token}' is neither a BS id nor '{ROUTER_LABEL}'") from None


def load_edge_list(path: str | Path, config: Optional[GridConfig] = None) -> PpgTopology:
    """Read `parent,child` lines ('router' names the root; '#' starts a comment)."""
    path = Path(path)
    if not path.is_file():
        raise TopologyError(f"edge list not found: {path}")
    try:
        frame = pd.read_csv(path, header=None, names=["parent", "child"], dtype=str,
                            comment="#", skip_blank_lines=True, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise TopologyError(f"edge list {path} is empty") from None
    except pd.errors.ParserError as e:
        raise TopologyError(f"edge list {path} is malformed: {e}") from e
    parent: dict[int, int] = {}
    for line, (p, c) in enumerate(frame.itertuples(index=False), start=1):
        if pd.isna(p) or pd.isna(c):
            raise TopologyError(f"line {line}: expected 'parent,child'")
        child = _node_id(c, line)
        if child == ROUTER:
            raise TopologyError(f"line {line}: the router cannot be a child")
        if child in parent:
            raise TopologyError(f"line {line}: node {child} already has a parent")
        parent[child] = _node_id(p, line)
    topo = PpgTopology(parent, config)
    logger.debug("loaded %r from %s", topo, path)
    return topo


def topology_from_config(n_bs: int, config: GridConfig) -> PpgTopology:
    if config.edge_list:
        topo = load_edge_list(config.edge_list, config)
        if topo.n_bs != n_bs:
            raise TopologyError(f"edge list has {topo.n_bs} BSs but the scenario has {n_bs}")
        return topo
    return build_default_topology(n_bs, config)

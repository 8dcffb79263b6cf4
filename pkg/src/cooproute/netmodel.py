"""Network topology, user demands, path enumeration, and flow profiles.

Everything here is immutable: networks and flow profiles are frozen
dataclasses over tuples, so they can be hashed, compared, and safely shared
between solver restarts.  Link ids are strings and are kept sorted, which
fixes the iteration order everywhere else in the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .costs import CostSpec, MM1Cost
from .errors import ConfigError, InfeasibleError

MAX_PATHS = 64

_FLOW_TOL = 1e-12


@dataclass(frozen=True)
class Link:
    link_id: str
    source: int
    target: int
    cost: CostSpec


@dataclass(frozen=True)
class Network:
    """Directed network with sorted, uniquely named links."""

    nodes: tuple[int, ...]
    links: tuple[Link, ...]
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index",
                           {lk.link_id: i for i, lk in enumerate(self.links)})

    def link_index(self, link_id: str) -> int:
        try:
            return self._index[link_id]
        except KeyError:
            raise ConfigError(f"unknown link id {link_id!r}") from None

    def link(self, link_id: str) -> Link:
        return self.links[self.link_index(link_id)]


def build_network(nodes: Iterable[int],
                  links: Iterable[tuple | Link]) -> Network:
    """Validate and normalize a network description.

    ``links`` entries are either ``Link`` objects or ``(id, source, target,
    cost)`` tuples.  Ids are coerced to strings and the link list is sorted
    by id.
    """
    node_tuple = tuple(nodes)
    if len(set(node_tuple)) != len(node_tuple):
        raise ConfigError("duplicate node ids")
    node_set = set(node_tuple)
    out = []
    for entry in links:
        if isinstance(entry, Link):
            lk = entry
        else:
            lid, src, dst, cost = entry
            lk = Link(link_id=str(lid), source=src, target=dst, cost=cost)
        if lk.source not in node_set or lk.target not in node_set:
            raise ConfigError(
                f"link {lk.link_id!r} references unknown node "
                f"{lk.source if lk.source not in node_set else lk.target}")
        if lk.source == lk.target:
            raise ConfigError(f"link {lk.link_id!r} is a self-loop")
        out.append(lk)
    out.sort(key=lambda lk: lk.link_id)
    seen = set()
    for lk in out:
        if lk.link_id in seen:
            raise ConfigError(f"duplicate link id {lk.link_id!r}")
        seen.add(lk.link_id)
    if not out:
        raise ConfigError("network needs at least one link")
    return Network(nodes=node_tuple, links=tuple(out))


@dataclass(frozen=True)
class UserSpec:
    """One user: an id, an origin/destination pair, and a demand rate."""

    user_id: int
    source: int
    target: int
    demand: float

    def __post_init__(self):
        if self.demand < 0:
            raise ConfigError("demand must be nonnegative")
        if self.source == self.target:
            raise ConfigError("user source and target must differ")


def enumerate_paths(net: Network, source: int, target: int,
                    max_paths: int = MAX_PATHS) -> tuple[tuple[str, ...], ...]:
    """All simple paths from source to target as tuples of link ids.

    Paths come out in lexicographic link-id order because the network's
    links are sorted and the search extends smallest id first.
    """
    by_source: dict[int, list[Link]] = {}
    for lk in net.links:
        by_source.setdefault(lk.source, []).append(lk)
    found: list[tuple[str, ...]] = []
    stack: list[str] = []
    visited = {source}

    def walk(node: int):
        if node == target:
            found.append(tuple(stack))
            if len(found) > max_paths:
                raise ConfigError(
                    f"more than {max_paths} paths from {source} to {target}")
            return
        for lk in by_source.get(node, ()):
            if lk.target in visited:
                continue
            visited.add(lk.target)
            stack.append(lk.link_id)
            walk(lk.target)
            stack.pop()
            visited.remove(lk.target)

    walk(source)
    return tuple(found)


@dataclass(frozen=True)
class PathSet:
    """Per-user routing options, aligned with a user id list."""

    user_ids: tuple[int, ...]
    paths: tuple[tuple[tuple[str, ...], ...], ...]

    def for_user(self, user_id: int) -> tuple[tuple[str, ...], ...]:
        return self.paths[self.user_ids.index(user_id)]


def build_path_set(net: Network, users: Sequence[UserSpec],
                   max_paths: int = MAX_PATHS) -> PathSet:
    ids = tuple(u.user_id for u in users)
    if len(set(ids)) != len(ids):
        raise ConfigError("duplicate user ids")
    all_paths = []
    for u in users:
        paths = enumerate_paths(net, u.source, u.target, max_paths=max_paths)
        if not paths and u.demand > 0:
            raise InfeasibleError(
                f"user {u.user_id} has no path from {u.source} to {u.target}",
                detail={"user": u.user_id})
        all_paths.append(paths)
    return PathSet(user_ids=ids, paths=tuple(all_paths))


@dataclass(frozen=True)
class FlowProfile:
    """Routing decision of every user, stored per path and per link.

    ``path_flows[i][p]`` is user ``i``'s flow on its ``p``-th path;
    ``user_link_flows[i][l]`` and ``total_link_flows[l]`` are the induced
    link loads in network link order.
    """

    user_ids: tuple[int, ...]
    paths: tuple[tuple[tuple[str, ...], ...], ...]
    path_flows: tuple[tuple[float, ...], ...]
    user_link_flows: tuple[tuple[float, ...], ...]
    total_link_flows: tuple[float, ...]

    def user_index(self, user_id: int) -> int:
        try:
            return self.user_ids.index(user_id)
        except ValueError:
            raise ConfigError(f"unknown user id {user_id}") from None


def assemble_profile(net: Network, path_set: PathSet,
                     path_flows: Sequence[Sequence[float]],
                     demands: Sequence[float] | None = None) -> FlowProfile:
    """Turn per-path flow amounts into a validated ``FlowProfile``.

    Flows must be nonnegative (up to 1e-12, then clamped) and, when
    ``demands`` is given, each user's flows must sum to its demand within
    1e-12 scaled by the demand size.
    """
    n = len(path_set.user_ids)
    if len(path_flows) != n:
        raise ConfigError("need one flow vector per user")
    cleaned: list[tuple[float, ...]] = []
    for ui in range(n):
        flows = list(path_flows[ui])
        if len(flows) != len(path_set.paths[ui]):
            raise ConfigError(
                f"user {path_set.user_ids[ui]} has {len(path_set.paths[ui])} "
                f"paths but {len(flows)} flow entries")
        for p, v in enumerate(flows):
            if v < -_FLOW_TOL:
                raise ConfigError(f"negative path flow {v}")
            if v < 0:
                flows[p] = 0.0
        if demands is not None:
            total = math.fsum(flows)
            scale = max(1.0, abs(demands[ui]))
            if abs(total - demands[ui]) > _FLOW_TOL * scale:
                raise ConfigError(
                    f"user {path_set.user_ids[ui]} routes {total}, "
                    f"demand is {demands[ui]}")
        cleaned.append(tuple(flows))
    m = len(net.links)
    per_user = []
    for ui in range(n):
        row = [0.0] * m
        for p, path in enumerate(path_set.paths[ui]):
            v = cleaned[ui][p]
            if v == 0.0:
                continue
            for link_id in path:
                row[net.link_index(link_id)] += v
        per_user.append(tuple(row))
    totals = tuple(math.fsum(per_user[ui][li] for ui in range(n))
                   for li in range(m))
    return FlowProfile(user_ids=path_set.user_ids, paths=path_set.paths,
                       path_flows=tuple(cleaned),
                       user_link_flows=tuple(per_user),
                       total_link_flows=totals)


def saturated_links(net: Network, profile: FlowProfile) -> tuple[str, ...]:
    """Links that carry positive flow at or beyond a finite capacity.

    Zero-capacity links with zero flow are fine; they stand in for absent
    connections.
    """
    bad = []
    for li, lk in enumerate(net.links):
        f = profile.total_link_flows[li]
        if f <= 0.0:
            continue
        if isinstance(lk.cost, MM1Cost) and f >= lk.cost.capacity:
            bad.append(lk.link_id)
    return tuple(bad)


def check_feasibility(net: Network, users: Sequence[UserSpec]) -> None:
    """Raise ``InfeasibleError`` when the demand provably cannot be carried.

    Two checks: every user with positive demand needs at least one path,
    and for each destination whose incoming links all have finite capacity,
    the total demand bound for it must stay below the summed capacity of
    that cut.
    """
    for u in users:
        if u.demand > 0 and not enumerate_paths(net, u.source, u.target):
            raise InfeasibleError(
                f"user {u.user_id} has no path from {u.source} to {u.target}",
                detail={"user": u.user_id})
    by_target: dict[int, float] = {}
    for u in users:
        by_target[u.target] = by_target.get(u.target, 0.0) + u.demand
    for target, demand in by_target.items():
        if demand <= 0:
            continue
        incoming = [lk for lk in net.links if lk.target == target]
        if any(not isinstance(lk.cost, MM1Cost) for lk in incoming):
            continue
        cap = math.fsum(lk.cost.capacity for lk in incoming)
        if demand >= cap:
            raise InfeasibleError(
                f"demand {demand} into node {target} meets or exceeds the "
                f"total capacity {cap} of its incoming links",
                detail={"node": target, "demand": demand, "capacity": cap})

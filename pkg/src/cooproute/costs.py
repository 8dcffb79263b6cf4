"""Link cost functions, cooperation weights, and cost evaluation.

Two latency families are supported: affine (``a * f + g``) and a queueing
delay ``1 / (C - f)`` that blows up at the capacity ``C``.  Flows at or
beyond capacity get an infinite cost sentinel; a link carrying zero flow
contributes zero to a user's cost even when its latency is infinite, so
absent links can be modeled as zero-capacity links.

A user weighs the costs of all users through a row-stochastic weight
matrix.  The scalar shorthand ``alpha`` is the total weight a user puts on
everyone else: 0 is fully self-interested, 1 is fully altruistic, and the
remainder ``1 - alpha`` stays on the user's own cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

from .errors import ConfigError

if TYPE_CHECKING:  # pragma: no cover
    from .netmodel import FlowProfile, Network

INFINITE_COST = math.inf

_STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True)
class LinearCost:
    """Affine latency ``slope * f + intercept``."""

    slope: float
    intercept: float = 0.0

    def __post_init__(self):
        if self.slope < 0 or self.intercept < 0:
            raise ConfigError("linear cost needs slope >= 0 and intercept >= 0")

    def value(self, flow: float) -> float:
        return self.slope * flow + self.intercept

    def derivative(self, flow: float) -> float:
        return self.slope


@dataclass(frozen=True)
class MM1Cost:
    """Queueing latency ``1 / (capacity - f)`` for ``f < capacity``."""

    capacity: float

    def __post_init__(self):
        if self.capacity < 0:
            raise ConfigError("capacity must be nonnegative")

    def value(self, flow: float) -> float:
        slack = self.capacity - flow
        if slack <= 0.0:
            return INFINITE_COST
        return 1.0 / slack

    def derivative(self, flow: float) -> float:
        slack = self.capacity - flow
        if slack <= 0.0:
            return INFINITE_COST
        return 1.0 / (slack * slack)


CostSpec = LinearCost | MM1Cost


def link_cost(spec: CostSpec, flow: float) -> float:
    """Latency of one link at aggregate flow ``flow``."""
    if flow < 0:
        raise ConfigError("link flow must be nonnegative")
    return spec.value(flow)


def link_cost_derivative(spec: CostSpec, flow: float) -> float:
    """Derivative of the latency with respect to aggregate flow."""
    if flow < 0:
        raise ConfigError("link flow must be nonnegative")
    return spec.derivative(flow)


@dataclass(frozen=True)
class CooperationProfile:
    """Row-stochastic cost weights, one row per user in user order.

    ``rows[i][k]`` is the weight user ``i`` places on user ``k``'s cost.
    Rows must sum to 1 within 1e-12 and entries must lie in [0, 1].
    """

    user_ids: tuple[int, ...]
    rows: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        n = len(self.user_ids)
        if len(set(self.user_ids)) != n:
            raise ConfigError("duplicate user ids in cooperation profile")
        if len(self.rows) != n:
            raise ConfigError("cooperation profile needs one row per user")
        for row in self.rows:
            if len(row) != n:
                raise ConfigError("cooperation row length must equal user count")
            for w in row:
                if not (-_STOCHASTIC_TOL <= w <= 1.0 + _STOCHASTIC_TOL):
                    raise ConfigError(f"cooperation weight {w} outside [0, 1]")
            if abs(math.fsum(row) - 1.0) > _STOCHASTIC_TOL:
                raise ConfigError("cooperation rows must sum to 1")

    @staticmethod
    def from_alphas(user_ids: Sequence[int], alphas: Sequence[float]) -> "CooperationProfile":
        """Build the uniform profile from per-user degrees of cooperation.

        User ``i`` keeps weight ``1 - alpha_i`` on itself and spreads
        ``alpha_i`` evenly over the other users.
        """
        ids = tuple(user_ids)
        if len(alphas) != len(ids):
            raise ConfigError("need one alpha per user")
        n = len(ids)
        rows = []
        for i, a in enumerate(alphas):
            if not (0.0 <= a <= 1.0):
                raise ConfigError(f"alpha {a} outside [0, 1]")
            if n == 1:
                rows.append((1.0,))
            else:
                off = a / (n - 1)
                rows.append(tuple((1.0 - a) if k == i else off for k in range(n)))
        return CooperationProfile(user_ids=ids, rows=tuple(rows))

    def alpha_of(self, user_index: int) -> float:
        """Total weight the user places on others."""
        return 1.0 - self.rows[user_index][user_index]


def selfish_profile(user_ids: Sequence[int]) -> CooperationProfile:
    return CooperationProfile.from_alphas(user_ids, [0.0] * len(user_ids))


def _flow_times_cost(flow: float, cost: float) -> float:
    # Zero flow on an unusable link costs nothing; avoids 0 * inf.
    if flow == 0.0:
        return 0.0
    return flow * cost


def user_cost(net: "Network", profile: "FlowProfile", user_id: int) -> float:
    """Total cost ``sum_l f_l^i * T_l(f_l)`` experienced by one user."""
    ui = profile.user_index(user_id)
    own = profile.user_link_flows[ui]
    total = profile.total_link_flows
    acc = 0.0
    for li, link in enumerate(net.links):
        if own[li] == 0.0:
            continue
        term = _flow_times_cost(own[li], link.cost.value(total[li]))
        if term == INFINITE_COST:
            return INFINITE_COST
        acc += term
    return acc


def operating_cost(net: "Network", profile: "FlowProfile",
                   coop: CooperationProfile, user_id: int) -> float:
    """Weighted cost the user actually optimizes: its cooperation row applied
    to everyone's costs."""
    ui = profile.user_index(user_id)
    row = coop.rows[ui]
    acc = 0.0
    for k, uid in enumerate(profile.user_ids):
        w = row[k]
        if w == 0.0:
            continue
        jk = user_cost(net, profile, uid)
        if jk == INFINITE_COST:
            return INFINITE_COST
        acc += w * jk
    return acc


def marginal_cost(net: "Network", profile: "FlowProfile",
                  coop: CooperationProfile, user_id: int, link_id: str) -> float:
    """Derivative of the user's operating cost in its own flow on one link.

    With weights ``b_k`` this is ``b_i * T_l + (sum_k b_k f_l^k) * T_l'``.
    """
    ui = profile.user_index(user_id)
    li = net.link_index(link_id)
    row = coop.rows[ui]
    total = profile.total_link_flows[li]
    spec = net.links[li].cost
    t = spec.value(total)
    dt = spec.derivative(total)
    if t == INFINITE_COST or dt == INFINITE_COST:
        return INFINITE_COST
    weighted = 0.0
    for k in range(len(profile.user_ids)):
        w = row[k]
        if w:
            weighted += w * profile.user_link_flows[k][li]
    return row[ui] * t + weighted * dt


def path_marginal(net: "Network", profile: "FlowProfile",
                  coop: CooperationProfile, user_id: int,
                  path: Iterable[str]) -> float:
    """Marginal operating cost of routing one more unit along a path."""
    acc = 0.0
    for link_id in path:
        k = marginal_cost(net, profile, coop, user_id, link_id)
        if k == INFINITE_COST:
            return INFINITE_COST
        acc += k
    return acc


@dataclass(frozen=True)
class CostReport:
    """Per-user raw and operating costs plus per-link cost shares.

    ``link_shares[i][l]`` is ``f_l^i * T_l(f_l)`` in user and link order.
    """

    user_ids: tuple[int, ...]
    raw_costs: tuple[float, ...]
    operating_costs: tuple[float, ...]
    link_shares: tuple[tuple[float, ...], ...]


def cost_report(net: "Network", profile: "FlowProfile",
                coop: CooperationProfile) -> CostReport:
    raws = tuple(user_cost(net, profile, uid) for uid in profile.user_ids)
    shares = []
    for ui in range(len(profile.user_ids)):
        own = profile.user_link_flows[ui]
        row = tuple(
            _flow_times_cost(own[li], link.cost.value(profile.total_link_flows[li]))
            for li, link in enumerate(net.links))
        shares.append(row)
    ops = []
    for ui in range(len(profile.user_ids)):
        row = coop.rows[ui]
        acc = 0.0
        for k, jk in enumerate(raws):
            if row[k]:
                acc = INFINITE_COST if jk == INFINITE_COST else acc + row[k] * jk
                if acc == INFINITE_COST:
                    break
        ops.append(acc)
    return CostReport(user_ids=profile.user_ids, raw_costs=raws,
                      operating_costs=tuple(ops), link_shares=tuple(shares))

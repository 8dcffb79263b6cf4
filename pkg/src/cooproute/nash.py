"""Equilibrium search for finitely many routing users.

The workhorse is plain Gauss-Seidel best response: sweep the users in id
order, each one exactly minimizing its operating cost against the current
flows of the others.  Two-path users are solved by derivative bisection
inside a capacity-guarded bracket; users with more paths fall back to a
conditional-gradient loop.  A multistart driver clusters the fixed points
reached from a grid of starting splits and counts basin sizes.

Best-response iteration only ever reaches attracting fixed points, and
interior equilibria of these games are often repelling.  For two users
with two paths each the driver therefore also scans the best-response
composition for sign changes and refines each bracket by bisection, which
recovers the repelling equilibria with a basin count of zero.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

from .costs import (INFINITE_COST, CooperationProfile, cost_report,
                    MM1Cost, path_marginal)
from .errors import ConfigError, SolverError
from .netmodel import (FlowProfile, Network, PathSet, UserSpec,
                       assemble_profile, build_path_set, check_feasibility,
                       saturated_links)
from .search import argmin_by_derivative


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and effort knobs for the equilibrium search."""

    br_tol: float = 1e-10
    fp_tol: float = 1e-8
    max_sweeps: int = 10_000
    grid_density: int = 21
    cluster_radius: float = 1e-4
    verify_tol: float = 1e-6
    scan_density: int = 801
    capacity_guard: float = 1e-9
    deviation_grid: int = 1001

    def __post_init__(self):
        if self.grid_density < 2 or self.scan_density < 2:
            raise ConfigError("grid densities must be at least 2")
        if self.max_sweeps < 1:
            raise ConfigError("max_sweeps must be at least 1")
        if self.deviation_grid < 2:
            raise ConfigError("deviation_grid must be at least 2")
        for name in ("br_tol", "fp_tol", "cluster_radius", "verify_tol",
                     "capacity_guard"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")


@dataclass(frozen=True)
class RoutingGame:
    """A network, its users, their path sets, and the cooperation weights."""

    net: Network
    users: tuple[UserSpec, ...]
    paths: PathSet
    coop: CooperationProfile
    path_link_idx: tuple = field(default=(), repr=False, compare=False)
    two_path: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        pli = []
        for user_paths in self.paths.paths:
            pli.append(tuple(tuple(self.net.link_index(l) for l in p)
                             for p in user_paths))
        object.__setattr__(self, "path_link_idx", tuple(pli))
        kernels = []
        for idx in pli:
            if len(idx) == 2:
                s0, s1 = set(idx[0]), set(idx[1])
                kernels.append((tuple(l for l in idx[0] if l not in s1),
                                tuple(l for l in idx[1] if l not in s0),
                                tuple(l for l in idx[0] if l in s1)))
            else:
                kernels.append(None)
        object.__setattr__(self, "two_path", tuple(kernels))

    @property
    def demands(self) -> tuple[float, ...]:
        return tuple(u.demand for u in self.users)


def make_game(net: Network, users: Sequence[UserSpec],
              coop: CooperationProfile | Sequence[float]) -> RoutingGame:
    """Bundle a validated game.  ``coop`` is either a full weight profile or
    a sequence of per-user cooperation degrees."""
    users = tuple(sorted(users, key=lambda u: u.user_id))
    ids = tuple(u.user_id for u in users)
    if not isinstance(coop, CooperationProfile):
        coop = CooperationProfile.from_alphas(ids, list(coop))
    if coop.user_ids != ids:
        raise ConfigError("cooperation profile user ids do not match users")
    check_feasibility(net, users)
    paths = build_path_set(net, users)
    return RoutingGame(net=net, users=users, paths=paths, coop=coop)


def _loads_excluding(game: RoutingGame, state, ui: int):
    """Per-link totals and cooperation-weighted totals of the other users."""
    m = len(game.net.links)
    others = [0.0] * m
    weighted = [0.0] * m
    row = game.coop.rows[ui]
    for k in range(len(game.users)):
        if k == ui:
            continue
        wk = row[k]
        for p, links in enumerate(game.path_link_idx[k]):
            v = state[k][p]
            if v == 0.0:
                continue
            for li in links:
                others[li] += v
                if wk:
                    weighted[li] += wk * v
    return others, weighted


def _two_path_response(game: RoutingGame, ui: int, r: float, others, weighted,
                       config: SolverConfig, iters: int) -> tuple[float, float]:
    only0, only1, both = game.two_path[ui]
    links = game.net.links
    guard = config.capacity_guard
    for li in both:
        c = links[li].cost
        if isinstance(c, MM1Cost) and others[li] + r > c.capacity - guard:
            raise SolverError(
                f"user {game.users[ui].user_id} saturates link "
                f"{links[li].link_id!r} on every path")
    # Capacity bounds on the second-path share t: links used only by the
    # second path cap it from above, first-path links from below.
    lo_cap, hi_cap = 0.0, r
    for li in only1:
        c = links[li].cost
        if isinstance(c, MM1Cost):
            hi_cap = min(hi_cap, c.capacity - others[li] - guard)
    for li in only0:
        c = links[li].cost
        if isinstance(c, MM1Cost):
            lo_cap = max(lo_cap, r - (c.capacity - others[li] - guard))
    lo = max(lo_cap, 0.0)
    hi = min(hi_cap, r)
    if lo > hi:
        # One path cannot carry any flow; sending zero along it is still
        # fine, so fall to the corner if the other path has room.
        if hi_cap < 0.0 and lo_cap <= 0.0:
            return (r, 0.0)
        if lo_cap > r and hi_cap >= r:
            return (0.0, r)
        raise SolverError(
            f"user {game.users[ui].user_id} has no feasible split "
            f"between its two paths")
    bii = game.coop.rows[ui][ui]
    terms = [(links[li].cost, others[li], weighted[li], 1.0, True)
             for li in only1]
    terms += [(links[li].cost, others[li], weighted[li], -1.0, False)
              for li in only0]

    def deriv(t: float) -> float:
        acc = 0.0
        for spec, o, w, sgn, own_is_t in terms:
            own = t if own_is_t else r - t
            f = o + own
            acc += sgn * (bii * spec.value(f) + (w + bii * own) * spec.derivative(f))
        return acc

    t = argmin_by_derivative(deriv, lo, hi, iters)
    return (r - t, t)


def _path_marginals_local(game: RoutingGame, ui: int, flows, others, weighted):
    idx = game.path_link_idx[ui]
    m = len(game.net.links)
    own = [0.0] * m
    for p, links_p in enumerate(idx):
        v = flows[p]
        if v:
            for li in links_p:
                own[li] += v
    bii = game.coop.rows[ui][ui]
    links = game.net.links
    out = []
    for links_p in idx:
        acc = 0.0
        for li in links_p:
            spec = links[li].cost
            f = others[li] + own[li]
            tv = spec.value(f)
            dv = spec.derivative(f)
            if tv == INFINITE_COST or dv == INFINITE_COST:
                acc = INFINITE_COST
                break
            acc += bii * tv + (weighted[li] + bii * own[li]) * dv
        out.append(acc)
    return out


def _cond_gradient_response(game: RoutingGame, state, ui: int, r: float,
                            others, weighted, config: SolverConfig,
                            iters: int) -> tuple[float, ...]:
    idx = game.path_link_idx[ui]
    k = len(idx)
    links = game.net.links
    guard = config.capacity_guard
    f = [max(0.0, v) for v in state[ui]]
    s = math.fsum(f)
    if s > 0:
        f = [v * (r / s) for v in f]
    else:
        f = [r] + [0.0] * (k - 1)
    for _ in range(300):
        margs = _path_marginals_local(game, ui, f, others, weighted)
        best = min(range(k), key=lambda p: (margs[p], p))
        if margs[best] == INFINITE_COST:
            raise SolverError(
                f"user {game.users[ui].user_id} has no unsaturated path")
        gap = math.fsum(f[p] * (margs[p] - margs[best]) for p in range(k)
                        if f[p] > 0 and margs[p] != INFINITE_COST)
        if gap <= config.br_tol * max(1.0, abs(margs[best]) * r):
            break
        d = [-v for v in f]
        d[best] += r
        # Largest feasible step along d under the capacity guards.
        gmax = 1.0
        ddir = [0.0] * len(links)
        own = [0.0] * len(links)
        for p, links_p in enumerate(idx):
            for li in links_p:
                ddir[li] += d[p]
                own[li] += f[p]
        for li, lk in enumerate(links):
            c = lk.cost
            if isinstance(c, MM1Cost) and ddir[li] > 0:
                room = c.capacity - guard - others[li] - own[li]
                gmax = min(gmax, max(room, 0.0) / ddir[li])

        def dphi(g: float) -> float:
            fv = [f[p] + g * d[p] for p in range(k)]
            margs_g = _path_marginals_local(game, ui, fv, others, weighted)
            return math.fsum(d[p] * margs_g[p] for p in range(k) if d[p])

        g = argmin_by_derivative(dphi, 0.0, gmax, min(iters, 40))
        if g <= 0:
            break
        f = [max(0.0, f[p] + g * d[p]) for p in range(k)]
    return tuple(f)


def _best_response(game: RoutingGame, state, ui: int, config: SolverConfig,
                   iters: int) -> tuple[float, ...]:
    r = game.users[ui].demand
    paths = game.path_link_idx[ui]
    if not paths:
        return ()
    if r == 0.0:
        return (0.0,) * len(paths)
    if len(paths) == 1:
        return (r,)
    others, weighted = _loads_excluding(game, state, ui)
    if game.two_path[ui] is not None:
        return _two_path_response(game, ui, r, others, weighted, config, iters)
    return _cond_gradient_response(game, state, ui, r, others, weighted,
                                   config, iters)


@dataclass(frozen=True)
class DynamicsResult:
    state: tuple[tuple[float, ...], ...]
    converged: bool
    sweeps: int
    final_delta: float


def _reduced(game: RoutingGame, state) -> list[float]:
    out: list[float] = []
    for ui in range(len(game.users)):
        out.extend(state[ui][1:])
    return out


def _set_from_reduced(game: RoutingGame, state, red) -> None:
    i = 0
    for ui, u in enumerate(game.users):
        k = len(game.path_link_idx[ui])
        if k <= 1:
            continue
        coords = [min(max(c, 0.0), u.demand) for c in red[i:i + k - 1]]
        i += k - 1
        s = math.fsum(coords)
        if s > u.demand and s > 0:
            coords = [c * (u.demand / s) for c in coords]
            s = u.demand
        state[ui] = [u.demand - s, *coords]


def br_dynamics(game: RoutingGame, start, config: SolverConfig | None = None,
                ) -> DynamicsResult:
    """Run Gauss-Seidel best response from one starting profile.

    Between plain sweeps a guarded Aitken step extrapolates the iterate
    sequence when the per-coordinate contraction ratios look stable; a
    trial sweep after the jump decides whether to keep it.  Two extra
    high-precision sweeps polish the endpoint.
    """
    config = config or SolverConfig()
    n = len(game.users)
    state = [list(map(float, s)) for s in start]

    def sweep(iters: int) -> None:
        for ui in range(n):
            state[ui] = list(_best_response(game, state, ui, config, iters))

    prev: list[float] | None = None
    window: list[list[float]] = []
    cooldown = 0
    converged = False
    sweeps = 0
    delta = math.inf
    while sweeps < config.max_sweeps:
        sweep(30)
        sweeps += 1
        red = _reduced(game, state)
        if prev is not None:
            delta = max((abs(a - b) for a, b in zip(red, prev)), default=0.0)
            if delta < config.fp_tol:
                converged = True
                break
        prev = red
        window.append(red)
        if len(window) > 3:
            window.pop(0)
        if cooldown > 0:
            cooldown -= 1
            continue
        if len(window) == 3 and sweeps + 1 < config.max_sweeps:
            jump = _aitken_target(window, game.demands, game.path_link_idx)
            if jump is None:
                continue
            target, pre_delta = jump
            saved = [list(s) for s in state]
            _set_from_reduced(game, state, target)
            sweep(30)
            sweeps += 1
            red2 = _reduced(game, state)
            new_delta = max((abs(a - b) for a, b in zip(red2, target)),
                            default=0.0)
            if new_delta < 0.25 * pre_delta:
                prev = red2
                if new_delta < config.fp_tol:
                    converged = True
                    break
            else:
                state = saved
                cooldown = 10
            window = []
    # Polish with tighter bisection; report the residual it leaves.
    final_delta = delta
    for _ in range(2):
        before = _reduced(game, state)
        sweep(60)
        after = _reduced(game, state)
        final_delta = max((abs(a - b) for a, b in zip(after, before)),
                          default=0.0)
    return DynamicsResult(state=tuple(tuple(s) for s in state),
                          converged=converged, sweeps=sweeps,
                          final_delta=final_delta)


def _aitken_target(window, demands, path_link_idx):
    x0, x1, x2 = window
    d1 = [b - a for a, b in zip(x0, x1)]
    d2 = [b - a for a, b in zip(x1, x2)]
    ratios = []
    active = []
    for i in range(len(d2)):
        if abs(d2[i]) < 1e-14 and abs(d1[i]) < 1e-14:
            active.append(False)
            continue
        if abs(d1[i]) < 1e-14 or d1[i] * d2[i] <= 0:
            return None
        ratio = d2[i] / d1[i]
        if not 0.02 <= ratio <= 0.9:
            return None
        ratios.append(ratio)
        active.append(True)
    if not ratios or max(ratios) - min(ratios) > 0.05:
        return None
    target = []
    for i in range(len(d2)):
        if active[i]:
            target.append(x2[i] - d2[i] * d2[i] / (d2[i] - d1[i]))
        else:
            target.append(x2[i])
    return target, max(abs(v) for v in d2)


def _state_raw_costs(game: RoutingGame, state) -> list[float]:
    m = len(game.net.links)
    n = len(game.users)
    own = [[0.0] * m for _ in range(n)]
    totals = [0.0] * m
    for k in range(n):
        for p, links_p in enumerate(game.path_link_idx[k]):
            v = state[k][p]
            if v:
                for li in links_p:
                    own[k][li] += v
                    totals[li] += v
    latencies = [game.net.links[li].cost.value(totals[li]) for li in range(m)]
    raws = []
    for k in range(n):
        acc = 0.0
        for li in range(m):
            v = own[k][li]
            if v == 0.0:
                continue
            if latencies[li] == INFINITE_COST:
                acc = INFINITE_COST
                break
            acc += v * latencies[li]
        raws.append(acc)
    return raws


def _state_operating_cost(game: RoutingGame, state, ui: int) -> float:
    raws = _state_raw_costs(game, state)
    row = game.coop.rows[ui]
    acc = 0.0
    for k, jk in enumerate(raws):
        if row[k]:
            if jk == INFINITE_COST:
                return INFINITE_COST
            acc += row[k] * jk
    return acc


@dataclass(frozen=True)
class NashCheck:
    """Outcome of an independent equilibrium verification."""

    ok: bool
    max_violation: float
    kkt_multipliers: tuple[float, ...]
    saturated: tuple[str, ...]


def verify_nash(game: RoutingGame, profile: FlowProfile,
                config: SolverConfig | None = None) -> NashCheck:
    """Check a profile against three independent optimality conditions.

    Per user: every flow-carrying path's marginal operating cost must match
    the minimum over its paths; recomputing the exact best response must
    reproduce the user's flows; and for two-path users a dense sweep of
    alternative splits must not beat the current operating cost.  All
    violations are normalized before comparing with ``verify_tol``.
    """
    config = config or SolverConfig()
    sat = saturated_links(game.net, profile)
    state = [list(f) for f in profile.path_flows]
    lambdas: list[float] = []
    viol = 0.0
    for ui, uid in enumerate(profile.user_ids):
        r = game.users[ui].demand
        paths = profile.paths[ui]
        if r == 0.0 or len(paths) <= 1:
            lambdas.append(0.0)
            continue
        margs = [path_marginal(game.net, profile, game.coop, uid, p)
                 for p in paths]
        finite = [v for v in margs if v != INFINITE_COST]
        lam = min(finite) if finite else INFINITE_COST
        lambdas.append(lam)
        flow_eps = 1e-9 * max(1.0, r)
        scale = max(1.0, abs(lam)) if lam != INFINITE_COST else 1.0
        for p in range(len(paths)):
            if profile.path_flows[ui][p] > flow_eps:
                if margs[p] == INFINITE_COST:
                    viol = math.inf
                else:
                    viol = max(viol, (margs[p] - lam) / scale)
        br = _best_response(game, state, ui, config, 60)
        res = max(abs(a - b) for a, b in zip(br, profile.path_flows[ui]))
        if res > flow_eps:
            # A different split only disqualifies the profile if it is
            # actually cheaper; with a flat objective any split is a best
            # response and the recomputed one is arbitrary.
            cur = _state_operating_cost(game, state, ui)
            trial = [list(s) for s in state]
            trial[ui] = list(br)
            at_br = _state_operating_cost(game, trial, ui)
            if cur == INFINITE_COST:
                gap = 0.0 if at_br == INFINITE_COST else math.inf
            else:
                gap = max(0.0, cur - at_br) / max(1.0, abs(cur))
            viol = max(viol, min(res / max(1.0, r), gap))
        if len(paths) == 2:
            cur = _state_operating_cost(game, state, ui)
            cscale = max(1.0, abs(cur)) if cur != INFINITE_COST else 1.0
            g = config.deviation_grid
            best_alt = math.inf
            for i in range(g):
                t = r * i / (g - 1)
                trial = [list(s) for s in state]
                trial[ui] = [r - t, t]
                best_alt = min(best_alt,
                               _state_operating_cost(game, trial, ui))
            if cur != INFINITE_COST and best_alt < cur:
                viol = max(viol, (cur - best_alt) / cscale)
            elif cur == INFINITE_COST and best_alt < INFINITE_COST:
                viol = math.inf
    ok = not sat and viol <= config.verify_tol
    return NashCheck(ok=ok, max_violation=viol,
                     kkt_multipliers=tuple(lambdas), saturated=sat)


@dataclass(frozen=True)
class EquilibriumResult:
    """One equilibrium with its costs, basin share, and verification."""

    profile: FlowProfile
    raw_costs: tuple[float, ...]
    operating_costs: tuple[float, ...]
    kkt_multipliers: tuple[float, ...]
    basin_count: int
    cluster_diameter: float
    scan_found: bool
    verified: bool
    max_violation: float


@dataclass(frozen=True)
class EquilibriumSet:
    """All equilibria found for one game, cheapest first for user one."""

    equilibria: tuple[EquilibriumResult, ...]
    diagnostics: dict
    config: SolverConfig

    def __len__(self):
        return len(self.equilibria)

    def __iter__(self):
        return iter(self.equilibria)


def profile_from_state(game: RoutingGame, state) -> FlowProfile:
    return assemble_profile(game.net, game.paths,
                            [list(s) for s in state], game.demands)


class _Cluster:
    __slots__ = ("red", "state", "basin", "mins", "maxs", "scan")

    def __init__(self, red, state, weight, scan):
        self.red = red
        self.state = state
        self.basin = weight
        self.mins = list(red)
        self.maxs = list(red)
        self.scan = scan


def _cluster_merge(clusters: list[_Cluster], red, state, weight, radius,
                   scan=False) -> bool:
    for c in clusters:
        if all(abs(a - b) <= radius for a, b in zip(red, c.red)):
            c.basin += weight
            for i, v in enumerate(red):
                if v < c.mins[i]:
                    c.mins[i] = v
                if v > c.maxs[i]:
                    c.maxs[i] = v
            return False
    clusters.append(_Cluster(red, state, weight, scan))
    return True


def _start_options(game: RoutingGame, config: SolverConfig):
    options = []
    for ui, u in enumerate(game.users):
        k = len(game.paths.paths[ui])
        r = u.demand
        if k == 0:
            options.append([()])
        elif k == 1 or r == 0.0:
            options.append([(r,) + (0.0,) * (k - 1)])
        elif k == 2:
            g = config.grid_density
            options.append([(r - (r * i / (g - 1)), r * i / (g - 1))
                            for i in range(g)])
        else:
            verts = []
            for p in range(k):
                v = [0.0] * k
                v[p] = r
                verts.append(tuple(v))
            verts.append(tuple(r / k for _ in range(k)))
            options.append(verts)
    return options


def _grid_sign_roots(f, lo, hi, density):
    xs = [lo + (hi - lo) * i / (density - 1) for i in range(density)]
    vals = [f(x) for x in xs]
    roots = []
    for i in range(density - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            roots.append(xs[i])
            continue
        if (a > 0 > b) or (a < 0 < b):
            x0, x1, fa = xs[i], xs[i + 1], a
            for _ in range(60):
                mid = 0.5 * (x0 + x1)
                if mid == x0 or mid == x1:
                    break
                fm = f(mid)
                if fm == 0.0:
                    x0 = x1 = mid
                    break
                if (fa > 0) == (fm > 0):
                    x0, fa = mid, fm
                else:
                    x1 = mid
            roots.append(0.5 * (x0 + x1))
    if vals[-1] == 0.0:
        roots.append(hi)
    return roots


def _scan_for_fixed_points(game: RoutingGame, config: SolverConfig):
    """Two-user, two-path-each composition scan in both user orders."""
    r1, r2 = game.demands

    def br_first(y: float) -> float:
        st = [[r1, 0.0], [r2 - y, y]]
        return _best_response(game, st, 0, config, 60)[1]

    def br_second(x: float) -> float:
        st = [[r1 - x, x], [r2, 0.0]]
        return _best_response(game, st, 1, config, 60)[1]

    candidates = []
    for x in _grid_sign_roots(lambda x: br_first(br_second(x)) - x,
                              0.0, r1, config.scan_density):
        y = br_second(x)
        candidates.append(((r1 - x, x), (r2 - y, y)))
    for y in _grid_sign_roots(lambda y: br_second(br_first(y)) - y,
                              0.0, r2, config.scan_density):
        x = br_first(y)
        candidates.append(((r1 - x, x), (r2 - y, y)))
    return candidates


def multistart_nash(game: RoutingGame,
                    config: SolverConfig | None = None) -> EquilibriumSet:
    """Find the game's equilibria from a grid of starts plus a scan pass.

    Starting profiles are the product of per-user splits.  Because the
    first user's exact best response does not depend on its own start,
    trajectories differing only there coincide after one step; they are
    run once and their count is credited to the reached basin.
    """
    config = config or SolverConfig()
    n = len(game.users)
    options = _start_options(game, config)
    total_starts = 1
    for opts in options:
        total_starts *= len(opts)
    collapse = len(game.paths.paths[0]) <= 2 if n else False
    if collapse and len(options[0]) > 1:
        weight = len(options[0])
        head = [options[0][0]]
    else:
        weight = 1
        head = options[0]
    clusters: list[_Cluster] = []
    non_converged = 0
    trajectories = 0
    for combo in itertools.product(head, *options[1:]):
        trajectories += 1
        res = br_dynamics(game, combo, config)
        if not res.converged:
            non_converged += weight
            continue
        red = _reduced(game, [list(s) for s in res.state])
        _cluster_merge(clusters, red, res.state, weight,
                       config.cluster_radius)
    scan_candidates = 0
    scan_added = 0
    if (n == 2 and all(k is not None for k in game.two_path)
            and all(r > 0 for r in game.demands)):
        for cand in _scan_for_fixed_points(game, config):
            scan_candidates += 1
            try:
                profile = profile_from_state(game, cand)
            except ConfigError:
                continue
            check = verify_nash(game, profile, config)
            if not check.ok:
                continue
            red = _reduced(game, [list(s) for s in cand])
            if _cluster_merge(clusters, red, cand, 0, config.cluster_radius,
                              scan=True):
                scan_added += 1
    results = []
    for c in clusters:
        state = [list(s) for s in c.state]
        if not c.scan:
            for _ in range(3):
                for ui in range(n):
                    state[ui] = list(_best_response(game, state, ui,
                                                    config, 60))
        profile = profile_from_state(game, state)
        report = cost_report(game.net, profile, game.coop)
        check = verify_nash(game, profile, config)
        diameter = max((mx - mn for mn, mx in zip(c.mins, c.maxs)),
                       default=0.0)
        results.append(EquilibriumResult(
            profile=profile, raw_costs=report.raw_costs,
            operating_costs=report.operating_costs,
            kkt_multipliers=check.kkt_multipliers, basin_count=c.basin,
            cluster_diameter=diameter, scan_found=c.scan,
            verified=check.ok, max_violation=check.max_violation))
    diagnostics = {"total_starts": total_starts,
                   "trajectories": trajectories,
                   "non_converged": non_converged,
                   "scan_candidates": scan_candidates,
                   "scan_added": scan_added}
    if not results:
        raise SolverError("no starting point converged to an equilibrium",
                          diagnostics=diagnostics)
    results.sort(key=lambda e: (e.operating_costs[0],) + tuple(
        v for flows in e.profile.path_flows for v in flows))
    return EquilibriumSet(equilibria=tuple(results),
                          diagnostics=diagnostics, config=config)

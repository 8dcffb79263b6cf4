"""Mixed equilibria on two parallel capacity-limited links.

One atomic group player routes ``group_demand`` and weighs the background
traffic's cost with weight ``alpha``; the background mass of
``mass_demand`` is made of selfish infinitesimal users and settles into an
equal-latency split on its own.  An equilibrium is a pair of splits that
are simultaneous best responses: the group split minimizes the group's
weighted cost against the frozen mass split, and the mass split equalizes
the latencies it sees (or piles onto the cheaper link).

Both a closed-form case analysis and an independent iterative solver are
provided; each solution is re-verified from the definition, and candidates
that fail verification are kept in the output with a flag rather than
silently dropped, so disagreements between the two solvers stay visible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .costs import MM1Cost, CostSpec
from .errors import ConfigError, InfeasibleError, SolverError
from .search import argmin_by_derivative, bisect_sign_change

_REGION_TOL = 1e-12
_DUP_TOL = 1e-9


@dataclass(frozen=True)
class MixedScenario:
    """Two parallel links, a group player, and a selfish background mass."""

    capacity_one: float
    capacity_two: float
    group_demand: float
    mass_demand: float
    alpha: float

    def __post_init__(self):
        if self.capacity_one < 0 or self.capacity_two < 0:
            raise ConfigError("capacities must be nonnegative")
        if self.group_demand < 0 or self.mass_demand < 0:
            raise ConfigError("demands must be nonnegative")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha must lie in [0, 1]")
        total = self.group_demand + self.mass_demand
        if total >= self.capacity_one + self.capacity_two:
            raise InfeasibleError(
                f"total demand {total} meets or exceeds total capacity "
                f"{self.capacity_one + self.capacity_two}",
                detail={"demand": total,
                        "capacity": self.capacity_one + self.capacity_two})


@dataclass(frozen=True)
class MixedSolverConfig:
    starts: int = 201
    fp_tol: float = 1e-9
    max_iters: int = 10_000
    dedupe_radius: float = 1e-5
    verify_tol: float = 1e-7
    singular_band: float = 0.05
    capacity_guard: float = 1e-9

    def __post_init__(self):
        if self.starts < 2:
            raise ConfigError("starts must be at least 2")
        for name in ("fp_tol", "dedupe_radius", "verify_tol",
                     "capacity_guard"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")


def wardrop_split(cost_one: CostSpec, cost_two: CostSpec, base_one: float,
                  base_two: float, mass: float,
                  guard: float = 1e-9) -> float:
    """Equal-latency split of ``mass`` over two links with fixed base loads.

    Returns the amount sent to the second link.  The latency difference
    is strictly decreasing in that amount, so the split is the bisected
    sign change, with the corners decided by the difference's sign at the
    bracket ends.
    """
    if mass == 0.0:
        return 0.0
    room_one = math.inf
    room_two = math.inf
    if isinstance(cost_one, MM1Cost):
        room_one = cost_one.capacity - base_one
    if isinstance(cost_two, MM1Cost):
        room_two = cost_two.capacity - base_two
    lo = max(mass - room_one + guard, 0.0) if room_one < math.inf else 0.0
    hi = min(room_two - guard, mass) if room_two < math.inf else mass
    if lo > hi:
        if lo > mass and room_two - guard >= mass:
            return mass
        if hi < 0.0 and room_one - guard >= mass:
            return 0.0
        raise InfeasibleError(
            "background traffic does not fit on the two links",
            detail={"mass": mass, "room_one": room_one, "room_two": room_two})

    def gap(w: float) -> float:
        return (cost_one.value(base_one + mass - w)
                - cost_two.value(base_two + w))

    return bisect_sign_change(gap, lo, hi, iters=80)


def _group_response(s: MixedScenario, w: float, config: MixedSolverConfig,
                    iters: int = 80) -> float:
    """Group split on link one minimizing its weighted cost at mass split w."""
    r1, r2, a = s.group_demand, s.mass_demand, s.alpha
    mass_one = r2 - w
    guard = config.capacity_guard
    lo = max(r1 - (s.capacity_two - w) + guard, 0.0)
    hi = min(s.capacity_one - mass_one - guard, r1)
    if lo > hi:
        if hi < 0.0 and r1 + w <= s.capacity_two - guard:
            return 0.0
        if lo > r1 and r1 + mass_one <= s.capacity_one - guard:
            return r1
        raise InfeasibleError(
            "group demand does not fit beside the background mass",
            detail={"group": r1, "mass_split": w})

    def deriv(x: float) -> float:
        u = s.capacity_one - (x + mass_one)
        v = s.capacity_two - (r1 - x + w)
        d1 = 1.0 / (u * u)
        d2 = 1.0 / (v * v)
        own = (1.0 / u + x * d1) - (1.0 / v + (r1 - x) * d2)
        return (1.0 - a) * own + a * (mass_one * d1 - w * d2)

    return argmin_by_derivative(deriv, lo, hi, iters)


def mixed_costs(s: MixedScenario, group_split: float,
                mass_split: float) -> tuple[float, float, float]:
    """Group cost, mass cost, and the group's weighted objective."""
    f1 = group_split + (s.mass_demand - mass_split)
    f2 = (s.group_demand - group_split) + mass_split
    t1 = MM1Cost(s.capacity_one).value(f1)
    t2 = MM1Cost(s.capacity_two).value(f2)

    def times(flow: float, lat: float) -> float:
        return 0.0 if flow == 0.0 else flow * lat

    j_group = (times(group_split, t1)
               + times(s.group_demand - group_split, t2))
    j_mass = (times(s.mass_demand - mass_split, t1)
              + times(mass_split, t2))
    j_op = (1.0 - s.alpha) * j_group + s.alpha * j_mass
    return j_group, j_mass, j_op


@dataclass(frozen=True)
class MixedCheck:
    ok: bool
    violation: float
    wardrop_gap: float
    group_gap: float
    saturated: bool


def verify_mixed(s: MixedScenario, group_split: float, mass_split: float,
                 config: MixedSolverConfig | None = None) -> MixedCheck:
    """Re-derive both best responses and measure the distance to them.

    The group check accepts either a matching split or a matching cost,
    so flat stretches of the group objective do not flag false
    violations.
    """
    config = config or MixedSolverConfig()
    r1, r2 = s.group_demand, s.mass_demand
    f1 = group_split + (r2 - mass_split)
    f2 = (r1 - group_split) + mass_split
    saturated = ((f1 > 0 and f1 >= s.capacity_one)
                 or (f2 > 0 and f2 >= s.capacity_two))
    if saturated:
        return MixedCheck(ok=False, violation=math.inf,
                          wardrop_gap=math.inf, group_gap=math.inf,
                          saturated=True)
    w_star = wardrop_split(MM1Cost(s.capacity_one), MM1Cost(s.capacity_two),
                           group_split, r1 - group_split, r2,
                           guard=config.capacity_guard)
    wardrop_gap = abs(mass_split - w_star) / max(1.0, r2)
    x_star = _group_response(s, mass_split, config)
    split_gap = abs(group_split - x_star) / max(1.0, r1)
    _, _, cur = mixed_costs(s, group_split, mass_split)
    _, _, best = mixed_costs(s, x_star, mass_split)
    cost_gap = max(cur - best, 0.0) / max(1.0, abs(best))
    group_gap = min(split_gap, cost_gap)
    violation = max(wardrop_gap, group_gap)
    return MixedCheck(ok=violation <= config.verify_tol,
                      violation=violation, wardrop_gap=wardrop_gap,
                      group_gap=group_gap, saturated=False)


@dataclass(frozen=True)
class MixedSolution:
    """One closed-form candidate with its derivation trail.

    ``case`` says which links the mass uses; ``kind`` is "interior" when
    the group's first-order condition picked the point and "boundary" when
    a region end did.  ``span`` is the case's admissible interval for the
    group split, ``equal_cost_offset`` the shift between the two splits
    that keeps both link latencies equal, and the quadratic fields record
    the resolvent behind the interior root where one applies.
    """

    case: str
    kind: str
    group_split: float
    mass_split: float
    group_cost: float
    mass_cost: float
    operating_cost: float
    verified: bool
    violation: float
    span: tuple[float, float]
    equal_cost_offset: float
    interior_split: float | None = None
    wardrop_interior: float | None = None
    quad_a: float | None = None
    quad_b: float | None = None
    quad_c: float | None = None
    quad_disc: float | None = None


@dataclass(frozen=True)
class MixedSolutionSet:
    solutions: tuple[MixedSolution, ...]
    continuum: bool
    continuum_span: tuple[float, float] | None
    notes: tuple[str, ...]

    def verified_solutions(self) -> tuple[MixedSolution, ...]:
        return tuple(sol for sol in self.solutions if sol.verified)


def mixed_closed_form(s: MixedScenario,
                      config: MixedSolverConfig | None = None,
                      ) -> MixedSolutionSet:
    """Case analysis of the equilibrium conditions.

    The mass either uses both links, only the first, or only the second.
    Each case contributes an interior stationary point of the group
    objective plus the ends of the case's admissible interval, all of
    which are then verified against the definition.  Near the balanced
    weight the interior formula of the both-links case divides by almost
    zero and is skipped (a note says so); at the exactly balanced weight
    with equal capacities the whole interval is stationary and is
    reported as a continuum.
    """
    config = config or MixedSolverConfig()
    c1, c2 = s.capacity_one, s.capacity_two
    r1, r2, a = s.group_demand, s.mass_demand, s.alpha
    scale = max(1.0, c1, c2, r1, r2)
    tol = _REGION_TOL * scale
    offset = 0.5 * (c1 - c2) + 0.5 * (r1 - r2)
    upper = offset + r2
    notes: list[str] = []
    continuum = False
    continuum_span = None
    candidates: list[MixedSolution] = []

    def emit(case, kind, x, w, span, **extra):
        x = min(max(x, 0.0), r1)
        w = min(max(w, 0.0), r2)
        for prev in candidates:
            if (abs(prev.group_split - x) <= _DUP_TOL * scale
                    and abs(prev.mass_split - w) <= _DUP_TOL * scale):
                return
        jg, jm, jo = mixed_costs(s, x, w)
        check = verify_mixed(s, x, w, config)
        candidates.append(MixedSolution(
            case=case, kind=kind, group_split=x, mass_split=w,
            group_cost=jg, mass_cost=jm, operating_cost=jo,
            verified=check.ok, violation=check.violation, span=span,
            equal_cost_offset=offset, **extra))

    # Mass on both links: equal latencies tie the splits together through
    # a constant offset, and the group's stationarity is linear.
    lo1, hi1 = max(offset, 0.0), min(upper, r1)
    if lo1 <= hi1 + tol:
        span1 = (lo1, hi1)
        balance = 1.0 - 2.0 * a
        if abs(balance) <= config.singular_band:
            residual = r2 - r1 + 2.0 * offset  # == c1 - c2
            if a == 0.5 and residual == 0.0:
                continuum = True
                continuum_span = span1
                notes.append(
                    "balanced weight with equal capacities: every split in "
                    f"[{lo1:.12g}, {hi1:.12g}] paired with its equal-latency "
                    "mass split is an equilibrium")
                emit("both-links", "boundary", lo1, lo1 - offset, span1)
                emit("both-links", "boundary", hi1, hi1 - offset, span1)
            else:
                notes.append(
                    "interior formula for the both-links case skipped: the "
                    "group weight is inside the singular band around 1/2")
        else:
            root = (a * (c2 - c1) + r1 * balance) / (2.0 * balance)
            if lo1 - tol <= root <= hi1 + tol:
                emit("both-links", "interior", root, root - offset, span1,
                     interior_split=root, wardrop_interior=root - offset)

        def along(x: float) -> float:
            return (1.0 - a) * (2.0 * x - r1) + a * (r2 - 2.0 * (x - offset))

        if along(lo1) >= -tol:
            emit("both-links", "boundary", lo1, lo1 - offset, span1)
        if along(hi1) <= tol:
            emit("both-links", "boundary", hi1, hi1 - offset, span1)

    # Mass only on link one (its split is zero there).
    hi2 = min(offset, r1)
    if hi2 >= -tol:
        hi2 = min(max(hi2, 0.0), r1)
        span2 = (0.0, hi2)
        u0 = c1 - r2   # link-one slack at x = 0
        v0 = c2 - r1   # link-two slack at x = 0
        heavy = (1.0 - a) * u0 + a * r2
        light = (1.0 - a) * c2
        qa = heavy - light
        qb = 2.0 * (heavy * v0 + light * u0)
        qc = heavy * v0 * v0 - light * u0 * u0
        disc = qb * qb - 4.0 * qa * qc

        def deriv_two(x: float) -> float:
            uu, vv = u0 - x, v0 + x
            if uu <= 0 or vv <= 0:
                return math.inf if uu <= 0 else -math.inf
            return heavy / (uu * uu) - light / (vv * vv)

        if heavy > 0 and light > 0:
            root = ((math.sqrt(light) * u0 - math.sqrt(heavy) * v0)
                    / (math.sqrt(heavy) + math.sqrt(light)))
            if -tol <= root <= hi2 + tol:
                emit("wardrop-link1-only", "interior", root, 0.0, span2,
                     interior_split=root, quad_a=qa, quad_b=qb, quad_c=qc,
                     quad_disc=disc)
        if deriv_two(0.0) >= -tol:
            emit("wardrop-link1-only", "boundary", 0.0, 0.0, span2,
                 quad_a=qa, quad_b=qb, quad_c=qc, quad_disc=disc)
        if deriv_two(hi2) <= tol:
            emit("wardrop-link1-only", "boundary", hi2, 0.0, span2,
                 quad_a=qa, quad_b=qb, quad_c=qc, quad_disc=disc)

    # Mass only on link two.
    lo3 = max(upper, 0.0)
    if lo3 <= r1 + tol:
        lo3 = min(lo3, r1)
        span3 = (lo3, r1)
        v0 = c2 - r1 - r2  # link-two slack at x = 0
        heavy = (1.0 - a) * c1
        light = (1.0 - a) * (c2 - r2) + a * r2
        qa = heavy - light
        qb = 2.0 * (heavy * v0 + light * c1)
        qc = heavy * v0 * v0 - light * c1 * c1
        disc = qb * qb - 4.0 * qa * qc

        def deriv_three(x: float) -> float:
            uu, vv = c1 - x, v0 + x
            if uu <= 0 or vv <= 0:
                return math.inf if uu <= 0 else -math.inf
            return heavy / (uu * uu) - light / (vv * vv)

        if heavy > 0 and light > 0:
            root = ((math.sqrt(light) * c1 - math.sqrt(heavy) * v0)
                    / (math.sqrt(heavy) + math.sqrt(light)))
            if lo3 - tol <= root <= r1 + tol:
                emit("wardrop-link2-only", "interior", root, r2, span3,
                     interior_split=root, quad_a=qa, quad_b=qb, quad_c=qc,
                     quad_disc=disc)
        elif light <= 0:
            notes.append(
                "second-link derivative keeps one sign in the "
                "wardrop-link2-only case; no interior stationary point")
        if deriv_three(lo3) >= -tol:
            emit("wardrop-link2-only", "boundary", lo3, r2, span3,
                 quad_a=qa, quad_b=qb, quad_c=qc, quad_disc=disc)
        if deriv_three(r1) <= tol:
            emit("wardrop-link2-only", "boundary", r1, r2, span3,
                 quad_a=qa, quad_b=qb, quad_c=qc, quad_disc=disc)

    candidates.sort(key=lambda sol: (sol.group_split, sol.mass_split))
    return MixedSolutionSet(solutions=tuple(candidates), continuum=continuum,
                            continuum_span=continuum_span, notes=tuple(notes))


@dataclass(frozen=True)
class MixedPoint:
    """One equilibrium found by the iterative solver."""

    group_split: float
    mass_split: float
    group_cost: float
    mass_cost: float
    operating_cost: float
    basin_count: int
    scan_found: bool
    verified: bool
    violation: float


@dataclass(frozen=True)
class MixedNumericSet:
    points: tuple[MixedPoint, ...]
    diagnostics: dict


def mixed_numeric(s: MixedScenario,
                  config: MixedSolverConfig | None = None) -> MixedNumericSet:
    """Independent iterative solver used to cross-check the closed forms.

    Alternates the group's exact best response with the mass's
    equal-latency split from a grid of starting group splits.  The
    alternation repels some interior equilibria, so the composed update is
    also scanned for sign changes of its displacement and each bracket is
    bisected; points found only that way carry a zero basin count.
    """
    config = config or MixedSolverConfig()
    r1, r2 = s.group_demand, s.mass_demand
    spec1, spec2 = MM1Cost(s.capacity_one), MM1Cost(s.capacity_two)

    def mass_response(x: float) -> float:
        return wardrop_split(spec1, spec2, x, r1 - x, r2,
                             guard=config.capacity_guard)

    clusters: list[list] = []   # [x, w, basin, scan_found]

    def merge(x: float, w: float, weight: int, scan: bool) -> bool:
        for c in clusters:
            if (abs(c[0] - x) <= config.dedupe_radius
                    and abs(c[1] - w) <= config.dedupe_radius):
                c[2] += weight
                return False
        clusters.append([x, w, weight, scan])
        return True

    def displacement(x: float) -> float:
        return _group_response(s, mass_response(x), config) - x

    def polish(x: float) -> float:
        # the alternation stops on step size, a bit short of the fixed
        # point; re-bracket the displacement and bisect it down
        lo = max(0.0, x - 1e-6)
        hi = min(r1, x + 1e-6)
        va, vb = displacement(lo), displacement(hi)
        if va == 0.0:
            return lo
        if vb == 0.0:
            return hi
        if not ((va > 0 > vb) or (va < 0 < vb)):
            return x
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            fm = displacement(mid)
            if fm == 0.0:
                return mid
            if (va > 0) == (fm > 0):
                lo, va = mid, fm
            else:
                hi = mid
        return 0.5 * (lo + hi)

    non_converged = 0
    for i in range(config.starts):
        x = r1 * i / (config.starts - 1)
        w = mass_response(x)
        converged = False
        for _ in range(config.max_iters):
            x_new = _group_response(s, w, config)
            w_new = mass_response(x_new)
            delta = max(abs(x_new - x), abs(w_new - w))
            x, w = x_new, w_new
            if delta < config.fp_tol:
                converged = True
                break
        if converged:
            x = polish(x)
            merge(x, mass_response(x), 1, False)
        else:
            non_converged += 1

    scan_added = 0
    xs = [r1 * i / (config.starts - 1) for i in range(config.starts)]
    vals = [displacement(x) for x in xs]
    roots = []
    for i in range(len(xs) - 1):
        va, vb = vals[i], vals[i + 1]
        if va == 0.0:
            roots.append(xs[i])
            continue
        if (va > 0 > vb) or (va < 0 < vb):
            x0, x1, fa = xs[i], xs[i + 1], va
            for _ in range(80):
                mid = 0.5 * (x0 + x1)
                if mid == x0 or mid == x1:
                    break
                fm = displacement(mid)
                if fm == 0.0:
                    x0 = x1 = mid
                    break
                if (fa > 0) == (fm > 0):
                    x0, fa = mid, fm
                else:
                    x1 = mid
            roots.append(0.5 * (x0 + x1))
    if vals[-1] == 0.0:
        roots.append(xs[-1])
    for x in roots:
        if merge(x, mass_response(x), 0, True):
            scan_added += 1

    if not clusters:
        raise SolverError("no start converged and no fixed point was "
                          "bracketed",
                          diagnostics={"starts": config.starts,
                                       "non_converged": non_converged})
    points = []
    for x, w, basin, scan in clusters:
        jg, jm, jo = mixed_costs(s, x, w)
        check = verify_mixed(s, x, w, config)
        points.append(MixedPoint(
            group_split=x, mass_split=w, group_cost=jg, mass_cost=jm,
            operating_cost=jo, basin_count=basin, scan_found=scan,
            verified=check.ok, violation=check.violation))
    points.sort(key=lambda p: (p.group_split, p.mass_split))
    return MixedNumericSet(
        points=tuple(points),
        diagnostics={"starts": config.starts,
                     "non_converged": non_converged,
                     "scan_added": scan_added})

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cooproute import (ConfigError, InfeasibleError, LinearCost, MM1Cost,
                       assemble_profile, build_network, build_path_set,
                       check_feasibility, enumerate_paths, saturated_links)
from cooproute.netmodel import UserSpec


def two_origin_net(direct=4.1, cross=5.0):
    """Two sources, one sink, with a transfer link in each direction."""
    return build_network([1, 2, 3], [
        ("l1", 1, 3, MM1Cost(direct)),
        ("l2", 2, 3, MM1Cost(direct)),
        ("l3", 1, 2, MM1Cost(cross)),
        ("l4", 2, 1, MM1Cost(cross)),
    ])


class TestBuildNetwork:
    def test_links_keep_given_order(self):
        net = two_origin_net()
        assert tuple(lk.link_id for lk in net.links) == ("l1", "l2", "l3",
                                                         "l4")
        assert net.link("l3").source == 1
        assert net.link_index("l4") == 3

    def test_duplicate_link_ids_rejected(self):
        with pytest.raises(ConfigError):
            build_network([1, 2], [("a", 1, 2, LinearCost(1.0)),
                                   ("a", 1, 2, LinearCost(2.0))])

    def test_self_loop_rejected(self):
        with pytest.raises(ConfigError):
            build_network([1, 2], [("a", 1, 1, LinearCost(1.0))])

    def test_unknown_endpoint_rejected(self):
        with pytest.raises(ConfigError):
            build_network([1, 2], [("a", 1, 3, LinearCost(1.0))])

    def test_unknown_link_lookup_rejected(self):
        net = two_origin_net()
        with pytest.raises(ConfigError):
            net.link("nope")


class TestEnumeratePaths:
    def test_two_origin_paths_in_link_order(self):
        net = two_origin_net()
        assert enumerate_paths(net, 1, 3) == (("l1",), ("l3", "l2"))
        assert enumerate_paths(net, 2, 3) == (("l2",), ("l4", "l1"))

    def test_no_path_gives_empty_tuple(self):
        net = build_network([1, 2, 3], [("a", 1, 2, LinearCost(1.0))])
        assert enumerate_paths(net, 1, 3) == ()

    def test_cycle_does_not_trap_search(self):
        net = build_network([1, 2, 3], [
            ("a", 1, 2, LinearCost(1.0)),
            ("b", 2, 1, LinearCost(1.0)),
            ("c", 2, 3, LinearCost(1.0)),
        ])
        assert enumerate_paths(net, 1, 3) == (("a", "c"),)

    def test_path_explosion_capped(self):
        nodes = list(range(12))
        links = []
        for i in range(11):
            links.append((f"u{i}", i, i + 1, LinearCost(1.0)))
            links.append((f"v{i}", i, i + 1, LinearCost(2.0)))
        net = build_network(nodes, links)
        with pytest.raises(ConfigError):
            enumerate_paths(net, 0, 11)


class TestPathSetAndProfiles:
    def test_missing_path_is_infeasible(self):
        net = build_network([1, 2, 3], [("a", 1, 2, LinearCost(1.0))])
        users = [UserSpec(user_id=1, source=1, target=3, demand=1.0)]
        with pytest.raises(InfeasibleError):
            build_path_set(net, users)

    def test_zero_demand_user_may_lack_paths(self):
        net = build_network([1, 2, 3], [("a", 1, 2, LinearCost(1.0))])
        users = [UserSpec(user_id=1, source=1, target=3, demand=0.0)]
        pset = build_path_set(net, users)
        assert pset.for_user(1) == ()

    def test_assemble_checks_demand(self):
        net = two_origin_net()
        users = [UserSpec(1, 1, 3, 2.0), UserSpec(2, 2, 3, 1.0)]
        pset = build_path_set(net, users)
        with pytest.raises(ConfigError):
            assemble_profile(net, pset, [[1.0, 0.5], [1.0, 0.0]],
                             demands=(2.0, 1.0))

    def test_assemble_accumulates_link_flows(self):
        net = two_origin_net()
        users = [UserSpec(1, 1, 3, 2.0), UserSpec(2, 2, 3, 1.0)]
        pset = build_path_set(net, users)
        prof = assemble_profile(net, pset, [[1.5, 0.5], [0.25, 0.75]],
                                demands=(2.0, 1.0))
        # l1 carries user 1 direct plus user 2 transfer
        assert prof.total_link_flows == pytest.approx(
            (1.5 + 0.75, 0.5 + 0.25, 0.5, 0.75))

    def test_tiny_negative_flows_are_clamped(self):
        net = two_origin_net()
        users = [UserSpec(1, 1, 3, 1.0), UserSpec(2, 2, 3, 0.0)]
        pset = build_path_set(net, users)
        prof = assemble_profile(net, pset, [[1.0 + 1e-13, -1e-13],
                                            [0.0, 0.0]])
        assert prof.path_flows[0][1] == 0.0

    @settings(max_examples=30)
    @given(st.floats(0.0, 2.0), st.floats(0.0, 1.0))
    def test_totals_are_user_sums(self, t1, t2):
        net = two_origin_net()
        users = [UserSpec(1, 1, 3, 2.0), UserSpec(2, 2, 3, 1.0)]
        pset = build_path_set(net, users)
        prof = assemble_profile(net, pset, [[2.0 - t1, t1], [1.0 - t2, t2]],
                                demands=(2.0, 1.0))
        for li in range(4):
            assert prof.total_link_flows[li] == pytest.approx(
                prof.user_link_flows[0][li] + prof.user_link_flows[1][li])


class TestSaturationAndFeasibility:
    def test_saturated_only_with_positive_flow(self):
        # a zero-capacity link carrying nothing is idle, not saturated
        net = build_network([1, 2], [("a", 1, 2, MM1Cost(1.0)),
                                     ("b", 1, 2, MM1Cost(0.0))])
        users = [UserSpec(1, 1, 2, 1.0)]
        pset = build_path_set(net, users)
        ok = assemble_profile(net, pset, [[0.5, 0.0]])
        assert saturated_links(net, ok) == ()
        bad = assemble_profile(net, pset, [[1.0, 0.0]])
        assert saturated_links(net, bad) == ("a",)

    def test_overloaded_cut_is_infeasible(self):
        net = build_network([1, 2], [("a", 1, 2, MM1Cost(0.001)),
                                     ("b", 1, 2, MM1Cost(0.001))])
        users = [UserSpec(1, 1, 2, 1.0), UserSpec(2, 1, 2, 1.0)]
        with pytest.raises(InfeasibleError) as exc:
            check_feasibility(net, users)
        assert exc.value.detail is not None
        assert exc.value.detail["demand"] == pytest.approx(2.0)

    def test_linear_links_never_trigger_cut_check(self):
        net = build_network([1, 2], [("a", 1, 2, LinearCost(1.0))])
        users = [UserSpec(1, 1, 2, 100.0)]
        check_feasibility(net, users)

    def test_feasible_instance_passes(self):
        net = two_origin_net()
        users = [UserSpec(1, 1, 3, 2.0), UserSpec(2, 2, 3, 1.0)]
        check_feasibility(net, users)

import networkx as nx
import numpy as np
import pytest

from src.models.world import EnvironmentGraph, Vec3
from src.sim import geometry
from src.sim.simulator import WorldSimulator, observe, shortest_path, simulator_for, teacher_action
from src.sim.world import WorldParams, generate_world, world_seeds
from src.utils.errors import FormatError, NotFoundError


def _nx(graph):
    g = nx.Graph()
    for a, b, w in graph.edges:
        g.add_edge(a, b, weight=w)
    return g


def test_generation_is_deterministic(world_params):
    assert generate_world(5, world_params).to_json() == generate_world(5, world_params).to_json()
    assert generate_world(5, world_params).to_json() != generate_world(6, world_params).to_json()


def test_json_roundtrip(two_floor_world):
    text = two_floor_world.to_json()
    restored = EnvironmentGraph.from_json(text)
    assert restored.to_json() == text
    assert restored.node_ids == two_floor_world.node_ids


def test_malformed_json():
    with pytest.raises(FormatError):
        EnvironmentGraph.from_json('{"world_id": "x"}')


def test_ids_are_zero_padded(world):
    assert world.node_ids[0] == f"{world.world_id}-000"
    assert sorted(world.node_ids) == world.node_ids


def test_worlds_are_connected(two_floor_world):
    assert nx.is_connected(_nx(two_floor_world))


def random_worlds(count, seed=0):
    rng = np.random.default_rng(seed)
    for i in range(count):
        floors = int(rng.integers(1, 3))
        params = WorldParams(
            node_count=int(rng.integers(4, 15)) * floors,
            floors=floors,
            extra_edge_prob=float(rng.uniform(0.0, 0.6)),
            vocab_size=16,
        )
        yield generate_world(int(rng.integers(1_000_000)), params, world_id=f"r{i}")


def test_shortest_paths_match_bellman_ford():
    rng = np.random.default_rng(8)
    for graph in random_worlds(25):
        g = _nx(graph)
        sim = simulator_for(graph)
        ids = graph.node_ids
        for _ in range(12):
            a, b = (ids[int(i)] for i in rng.integers(len(ids), size=2))
            expected = nx.bellman_ford_path_length(g, a, b, weight="weight")
            path, length = shortest_path(graph, a, b)
            assert sim.distance(a, b) == pytest.approx(expected, abs=1e-9)
            assert length == pytest.approx(expected, abs=1e-9)
            assert path[0] == a and path[-1] == b
            assert sim.path_length(path) == pytest.approx(length, abs=1e-12)
            assert shortest_path(graph, b, a)[1] == pytest.approx(length, abs=1e-9)


def test_teacher_action_walks_shortest_paths_on_random_graphs():
    rng = np.random.default_rng(50)
    for graph in random_worlds(50, seed=1):
        sim = simulator_for(graph)
        ids = graph.node_ids
        start, goal = (ids[int(i)] for i in rng.integers(len(ids), size=2))
        current, heading = start, float(rng.uniform(-180.0, 180.0))
        visited = [current]
        for _ in range(len(ids)):
            _, candidates = sim.observe(current, heading)
            action = sim.teacher_action(current, goal, heading)
            if candidates[action].is_stop:
                break
            current, heading = sim.move(current, heading, candidates, action)
            visited.append(current)
        assert current == goal
        assert len(visited) == len(sim.shortest_path(start, goal)[0])


def test_teacher_action_needs_heading(world):
    node = world.node_ids[0]
    with pytest.raises(TypeError):
        teacher_action(world, node, node)
    with pytest.raises(TypeError):
        simulator_for(world).teacher_action(node, node)


def test_bearing_is_clockwise_from_y():
    origin = Vec3(0.0, 0.0, 0.0)
    assert geometry.bearing(origin, Vec3(0.0, 1.0, 0.0)) == pytest.approx(0.0)
    assert geometry.bearing(origin, Vec3(1.0, 0.0, 0.0)) == pytest.approx(90.0)
    assert geometry.bearing(origin, Vec3(-1.0, 0.0, 0.0)) == pytest.approx(270.0)
    assert geometry.normalize_heading(270.0) == pytest.approx(-90.0)
    assert geometry.normalize_heading(-180.0) == pytest.approx(180.0)


def test_relative_orientation(line_graph):
    a, b = line_graph.viewpoint("line-000"), line_graph.viewpoint("line-001")
    dh, de = geometry.relative_orientation(a.position, 0.0, b.position)
    assert dh == pytest.approx(90.0)
    assert de == pytest.approx(0.0)
    dh, _ = geometry.relative_orientation(a.position, 90.0, b.position)
    assert dh == pytest.approx(0.0)


def test_candidate_order_and_stop(two_floor_world):
    for node in two_floor_world.node_ids:
        _, candidates = observe(two_floor_world, node, 60.0)
        neighbors = two_floor_world.neighbors(node)
        assert candidates.stop_index == len(neighbors)
        assert candidates[candidates.stop_index].is_stop
        assert candidates[candidates.stop_index].viewpoint_id == node
        keys = [(e.relative_heading, e.relative_elevation, e.viewpoint_id) for e in candidates.entries[:-1]]
        assert keys == sorted(keys)
        assert {e.viewpoint_id for e in candidates.entries[:-1]} == set(neighbors)
        assert candidates.feature_matrix().shape == (len(candidates), two_floor_world.feature_dim)
        assert np.all(candidates.orientation_matrix()[-1] == 0.0)


def test_teacher_action_follows_shortest_path(two_floor_world):
    sim = simulator_for(two_floor_world)
    ids = two_floor_world.node_ids
    start, goal = ids[0], ids[-1]
    current, heading = start, 0.0
    visited = [current]
    for _ in range(len(ids) + 1):
        action = teacher_action(two_floor_world, current, goal, heading)
        _, candidates = sim.observe(current, heading)
        if candidates[action].is_stop:
            break
        current, heading = sim.move(current, heading, candidates, action)
        visited.append(current)
    assert current == goal
    assert visited == sim.shortest_path(start, goal)[0]


def test_stop_keeps_position(world):
    sim = simulator_for(world)
    node = world.node_ids[0]
    _, candidates = sim.observe(node, 30.0)
    assert sim.move(node, 30.0, candidates, candidates.stop_index) == (node, 30.0)
    assert sim.teacher_action(node, node, 30.0) == candidates.stop_index


def test_unknown_viewpoint(world):
    with pytest.raises(NotFoundError, match="nowhere"):
        observe(world, "nowhere", 0.0)


def test_stop_view_is_downward_at_heading(world):
    node = world.node_ids[4]
    _, candidates = observe(world, node, 95.0)
    stop = candidates[candidates.stop_index]
    assert stop.heading_index == geometry.heading_index(95.0) == 3
    assert stop.elevation_index == 0
    assert stop.feature is world.viewpoint(node).view(3, 0).feature


def test_seed_ranges_are_disjoint():
    seen = world_seeds(7, 20)
    unseen = world_seeds(7, 8, offset=1_000_000)
    assert not set(seen) & set(unseen)


def test_simulator_is_shared(world):
    assert simulator_for(world) is simulator_for(world)
    assert isinstance(simulator_for(world), WorldSimulator)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from safepath.gridmap import (
    SQRT2,
    MapFormatError,
    OccupancyGrid,
    distance_transform,
    free_space_stats,
    load_map,
    neighbors,
    parse_map,
    parse_pgm,
    serialize_map,
)

grids = arrays(np.bool_, st.tuples(st.integers(1, 12), st.integers(1, 12)))


def test_parse_small_map():
    g = parse_map("cell 0.05\n..\n.#")
    assert g.shape == (2, 2)
    assert g.cell_size == 0.05
    assert g.cells.tolist() == [[False, False], [False, True]]


def test_parse_single_free_cell():
    g = parse_map("cell 1.0\n.")
    assert g.shape == (1, 1) and not g.cells.any()


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("cell 1.0\n..\n...", "ragged"),
        ("", "empty"),
        ("   \n\n", "empty"),
        ("cell 1.0\n..\n.x", "line 3, column 2"),
        ("..\n..", "header"),
        ("cell -2\n..", "positive"),
        ("cell abc\n..", "cell size"),
        ("cell 1.0\n", "no rows"),
    ],
)
def test_parse_errors(text, fragment):
    with pytest.raises(MapFormatError, match=fragment):
        parse_map(text)


@given(grids, st.sampled_from([0.05, 0.1, 1.0, 2.5]))
def test_serialize_round_trip(cells, cell_size):
    g = OccupancyGrid(cells, cell_size)
    assert parse_map(serialize_map(g)) == g


def test_grid_rejects_bad_shapes():
    with pytest.raises(ValueError):
        OccupancyGrid(np.zeros((0, 3), dtype=bool))
    with pytest.raises(ValueError):
        OccupancyGrid(np.zeros(4, dtype=bool))
    with pytest.raises(ValueError):
        OccupancyGrid(np.zeros((2, 2), dtype=bool), cell_size=0)


def test_grid_is_immutable_copy():
    src = np.zeros((2, 2), dtype=bool)
    g = OccupancyGrid(src)
    src[0, 0] = True
    assert not g.cells[0, 0]
    with pytest.raises(ValueError):
        g.cells[0, 0] = True


def test_grid_equality_and_hash():
    a = OccupancyGrid([[True, False]], 0.5)
    b = OccupancyGrid([[True, False]], 0.5)
    c = OccupancyGrid([[True, False]], 1.0)
    assert a == b and hash(a) == hash(b)
    assert a != c


def test_distance_center_obstacle():
    g = parse_map("cell 1\n...\n.#.\n...")
    d = distance_transform(g)
    assert d[1, 1] == 0.0
    for corner in [(0, 0), (0, 2), (2, 0), (2, 2)]:
        assert d[corner] == pytest.approx(1.41421, abs=1e-5)
    assert d[0, 1] == 1.0


def test_distance_sentinel_without_obstacles(open_grid):
    d = distance_transform(open_grid(4, 4))
    assert np.all(d == pytest.approx(5.65685, abs=1e-5))
    assert np.all(d == math.sqrt(32))


def test_distance_matches_brute_force_scan():
    rng = np.random.default_rng(11)
    for _ in range(60):
        cells = oracles.random_cells(rng, 16)
        got = distance_transform(OccupancyGrid(cells))
        assert np.max(np.abs(got - oracles.nearest_obstacle_distance(cells))) <= 1e-9
        assert np.array_equal(got == 0, cells) or not cells.any()


def test_stats_examples(open_grid):
    g = parse_map("cell 1\n...\n.#.\n...")
    stats = free_space_stats(g, distance_transform(g))
    assert stats.mu == pytest.approx((4 + 4 * SQRT2) / 8)
    assert stats.mu == pytest.approx(1.20711, abs=1e-5)
    assert stats.rho == pytest.approx(1 / 9)

    quarter = parse_map("cell 1\n#.\n..")
    assert free_space_stats(quarter, distance_transform(quarter)).rho == 0.25

    empty = open_grid(3, 5)
    s = free_space_stats(empty, distance_transform(empty))
    assert s.rho == 0 and s.sigma == 0 and s.mu == pytest.approx(math.sqrt(34))


def test_stats_all_obstacles():
    g = OccupancyGrid(np.ones((3, 3), dtype=bool))
    s = free_space_stats(g, distance_transform(g))
    assert (s.mu, s.sigma, s.rho) == (0.0, 0.0, 1.0)


@given(grids)
def test_stats_density_is_exact_fraction(cells):
    g = OccupancyGrid(cells)
    s = free_space_stats(g, distance_transform(g))
    assert s.rho == np.count_nonzero(cells) / cells.size
    assert s.mu >= 0 and s.sigma >= 0


def test_neighbors_interior_and_corner(open_grid):
    g = open_grid(5, 5)
    inner = neighbors(g, (2, 2))
    assert len(inner) == 8
    costs = sorted(c for _, c in inner)
    assert costs == [1.0] * 4 + [SQRT2] * 4
    assert len(neighbors(g, (0, 0))) == 3


def test_diagonal_blocked_between_two_obstacles(ascii_grid):
    g = ascii_grid(["...", "#..", ".#."])
    # from (2, 0): north (1,0) and east (2,1) are both obstacles
    moves = dict(neighbors(g, (2, 0)))
    assert (1, 1) not in moves
    # a single blocking cell still lets the diagonal through
    g2 = ascii_grid(["...", "...", ".#."])
    assert (1, 1) in dict(neighbors(g2, (2, 0)))


def test_neighbors_match_swept_segment_oracle():
    rng = np.random.default_rng(5)
    for _ in range(150):
        cells = oracles.random_cells(rng, 8)
        g = OccupancyGrid(cells)
        for n in map(tuple, np.argwhere(~cells)):
            got = dict(neighbors(g, n))
            want = oracles.passable_moves(cells, n)
            assert got.keys() == want.keys()
            for m in got:
                assert got[m] == want[m]


@settings(max_examples=60)
@given(grids)
def test_neighbors_symmetric(cells):
    g = OccupancyGrid(cells)
    for n in map(tuple, np.argwhere(~cells)):
        for m, cost in neighbors(g, n):
            back = dict(neighbors(g, m))
            assert back[n] == cost


def test_pgm_ascii_and_binary(tmp_path):
    p2 = b"P2\n# comment\n3 2\n255\n0 255 255\n255 127 128\n"
    g = parse_pgm(p2, 0.1)
    assert g.cells.tolist() == [[True, False, False], [False, True, False]]
    p5 = b"P5\n3 2\n255\n" + bytes([0, 255, 255, 255, 127, 128])
    assert parse_pgm(p5, 0.1) == g
    path = tmp_path / "m.pgm"
    path.write_bytes(p5)
    assert load_map(path, cell_size=0.1) == g
    with pytest.raises(MapFormatError, match="cell size"):
        load_map(path)


def test_pgm_errors():
    with pytest.raises(MapFormatError):
        parse_pgm(b"P3\n1 1\n255\n0", 1.0)
    with pytest.raises(MapFormatError, match="truncated"):
        parse_pgm(b"P5\n4 4\n255\n" + bytes(3), 1.0)
    with pytest.raises(MapFormatError):
        parse_pgm(b"P2\n2 1\n255\n0", 1.0)


def test_load_ascii_map_with_override(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text("cell 0.05\n.#\n..\n")
    assert load_map(path).cell_size == 0.05
    assert load_map(path, cell_size=0.2).cell_size == 0.2
    path.write_text("cell 0.05\n.#\n.?\n")
    with pytest.raises(MapFormatError, match=str(path)):
        load_map(path)

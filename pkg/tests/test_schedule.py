import numpy as np
import pytest

from loclc.errors import ShapeError
from loclc.schedule import build, canonical_order, gather_patch, timestep


def context_cells(i, j, h):
    """The dependency region of 1-indexed (i, j): h rows above (full width
    j-h..j+h) plus the h cells left of it in its own row."""
    cells = set()
    for r in range(i - h, i):
        for c in range(j - h, j + h + 1):
            cells.add((r, c))
    for c in range(j - h, j):
        cells.add((i, c))
    return cells


def topo_levels(H, W, h):
    """Breadth-layered topological levels of the dependency DAG; the oracle
    the wavefront must reproduce."""
    level = {}
    remaining = {(i, j) for i in range(1, H + 1) for j in range(1, W + 1)}
    t = 0
    while remaining:
        t += 1
        ready = [p for p in remaining
                 if not any(q in remaining for q in context_cells(*p, h))]
        assert ready, "dependency cycle?"
        for p in ready:
            level[p] = t
        remaining -= set(ready)
    return level


class TestTimestep:
    @pytest.mark.parametrize("i,j,h,t", [
        (1, 1, 1, 1), (1, 5, 1, 5), (5, 5, 1, 13),
        (1, 1, 3, 1), (3, 2, 2, 8),
    ])
    def test_values(self, i, j, h, t):
        assert timestep(i, j, h) == t

    def test_matches_topological_level(self):
        for h in (1, 2):
            levels = topo_levels(6, 7, h)
            for (i, j), t in levels.items():
                assert timestep(i, j, h) == t


class TestBuild:
    def test_five_by_five(self):
        s = build(5, 5, 1)
        assert s.T == 13
        assert s.steps[8] == ((3, 5), (4, 3), (5, 1))
        assert max(len(step) for step in s.steps) == 3
        assert s.max_parallelism == 3

    def test_single_pixel(self):
        assert build(1, 1, 1).steps == (((1, 1),),)

    def test_three_by_three(self):
        assert build(3, 3, 1).steps == (
            ((1, 1),), ((1, 2),), ((1, 3), (2, 1)), ((2, 2),),
            ((2, 3), (3, 1)), ((3, 2),), ((3, 3),))

    def test_invariants_sweep(self):
        for H in (1, 2, 3, 5, 8):
            for W in (1, 2, 5, 9):
                for h in (1, 2, 4):
                    s = build(H, W, h)
                    assert s.T == W + (H - 1) * (h + 1)
                    flat = [p for step in s.steps for p in step]
                    assert sorted(flat) == [(i, j) for i in range(1, H + 1)
                                            for j in range(1, W + 1)]
                    widest = max(len(step) for step in s.steps)
                    assert widest == s.max_parallelism
                    # one decodable pixel per row, rows h+1 columns apart
                    assert widest == min(H, -(-W // (h + 1)))
                    for step in s.steps:
                        rows = [i for (i, _) in step]
                        assert rows == sorted(rows)

    def test_square_parallelism_matches_processing_unit_formula(self):
        for D in (1, 2, 3, 5, 8, 12):
            for h in (1, 2, 3, 4):
                assert build(D, D, h).max_parallelism == (D + h) // (h + 1)

    def test_steps_equal_topo_levels(self):
        for H, W, h in [(4, 6, 1), (6, 4, 2), (5, 5, 3)]:
            levels = topo_levels(H, W, h)
            s = build(H, W, h)
            for t, step in enumerate(s.steps, start=1):
                for p in step:
                    assert levels[p] == t

    def test_parallel_safety(self):
        for H, W, h in [(5, 5, 1), (6, 7, 2), (4, 9, 3)]:
            for step in build(H, W, h).steps:
                for a in step:
                    for b in step:
                        if a != b:
                            assert a not in context_cells(*b, h)

    def test_bad_args(self):
        with pytest.raises(ShapeError):
            build(0, 5, 1)
        with pytest.raises(ShapeError):
            build(5, 5, 0)


class TestCanonicalOrder:
    def test_two_by_two(self):
        order = canonical_order(2, 2, 1)
        assert [(i, j) for (i, j, _) in order] == [(1, 1), (1, 2), (2, 1), (2, 2)]

    def test_single_column_strictly_increasing_t(self):
        order = canonical_order(6, 1, 2)
        ts = [timestep(i, j, 2) for (i, j, _) in order]
        assert ts == sorted(ts)
        assert ts == [1 + (i - 1) * 3 for i in range(1, 7)]

    def test_wavefront_precedence(self):
        order = [(i, j) for (i, j, _) in canonical_order(5, 5, 1)]
        assert order.index((2, 1)) < order.index((1, 5))

    def test_channels_innermost(self):
        order = canonical_order(2, 1, 1, channels=3)
        assert order[:3] == [(1, 1, 0), (1, 1, 1), (1, 1, 2)]
        assert order[3:6] == [(2, 1, 0), (2, 1, 1), (2, 1, 2)]


class TestGatherPatch:
    def test_top_left_all_context_zero(self):
        rng = np.random.default_rng(0)
        image = rng.integers(1, 256, (4, 4, 1), dtype=np.uint8)
        patch = gather_patch(image, 1, 1, 2)
        # everything except the current cell (and cells right of it, which
        # are masked anyway) is out of bounds, hence zero
        assert np.all(patch[:2] == 0)
        assert np.all(patch[2, :2] == 0)

    def test_interior_of_constant_image(self):
        image = np.full((5, 5, 1), 7, dtype=np.uint8)
        patch = gather_patch(image, 3, 3, 1)
        assert np.all(patch[0] == 7)
        assert np.all(patch[1, 0] == 7)

    def test_ramp_indices(self):
        image = (np.arange(25, dtype=np.uint8).reshape(5, 5))[:, :, None]
        patch = gather_patch(image, 3, 3, 1)
        # rows 2..3, cols 2..4 (1-indexed) of the ramp
        assert patch[0].ravel().tolist() == [6, 7, 8]
        assert patch[1].ravel().tolist() == [11, 12, 13]

    def test_right_edge_padding(self):
        image = np.full((3, 3, 1), 9, dtype=np.uint8)
        patch = gather_patch(image, 2, 3, 1)
        assert np.all(patch[0, :2] == 9)
        assert np.all(patch[:, 2] == 0)  # col j+1 is outside

    def test_out_of_bounds_pixel(self):
        with pytest.raises(ShapeError):
            gather_patch(np.zeros((2, 2, 1), np.uint8), 3, 1, 1)

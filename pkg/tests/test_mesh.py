import numpy as np
import pytest

from nsdsav.io import export_msh
from nsdsav.mesh import (MeshError, MeshFormatError, RegionMap, Subdomain, build_rect_coupled,
                         import_msh, read_msh, validate)
from nsdsav.scenarios.library import YSHAPE_MESH
from nsdsav.scenarios.yshape_mesh import CORNERS, build_yshape


def test_smallest_coupled_mesh():
    m = build_rect_coupled((0, 1, 0, 1), (0, 1, -1, 0), 1, 1, 1)
    assert m.n_vertices == 6 and m.n_triangles == 4
    assert list(m.subdomain).count(Subdomain.FLUID) == 2
    assert len(m.interface_edges) == 1
    np.testing.assert_allclose(m.interface_normals, [[0.0, -1.0]])
    assert validate(m) == []


def test_unit_pair_counts(unit_mesh):
    m = unit_mesh
    assert m.n_vertices == 5 * 9
    assert m.n_triangles == 64
    assert len(m.interface_edges) == 4
    assert m.interface_length() == pytest.approx(1.0)
    np.testing.assert_allclose(m.interface_normals, np.tile([0.0, -1.0], (4, 1)))
    assert set(m.labels()) == {"fluid_left", "fluid_right", "fluid_top",
                               "porous_left", "porous_right", "porous_bottom"}
    assert np.all(m.areas > 0)


def test_filter_geometry_counts():
    m = build_rect_coupled((0, 2, 1.5, 2), (0, 2, 0, 1.5), 64, 16, 48)
    assert np.sum(m.subdomain == Subdomain.FLUID) == 2 * 64 * 16
    iface_y = m.vertices[m.interface_edges.ravel(), 1]
    assert np.all(iface_y == 1.5)
    assert m.interface_length() == pytest.approx(2.0)
    assert validate(m) == []


def test_fluid_below_porous_flips_normal():
    m = build_rect_coupled((0, 1, -1, 0), (0, 1, 0, 1), 2, 2, 2)
    np.testing.assert_allclose(m.interface_normals, np.tile([0.0, 1.0], (2, 1)))
    assert validate(m) == []


@pytest.mark.parametrize("args", [
    ((0, 1, 0, 1), (0, 1, -1, 0), 0, 1, 1),
    ((0, 1, 0, 1), (0, 2, -1, 0), 2, 1, 1),
    ((0, 1, 0, 1), (0, 1, -1, -0.5), 2, 1, 1),
    ((0, 1, 1, 0), (0, 1, -1, 0), 2, 1, 1),
])
def test_rect_argument_errors(args):
    with pytest.raises(MeshError):
        build_rect_coupled(*args)


def test_mesh_is_read_only(unit_mesh):
    with pytest.raises(ValueError):
        unit_mesh.vertices[0, 0] = 5.0


def test_region_map(unit_mesh):
    rm = RegionMap.from_function(unit_mesh, lambda x, y: 1.0 + x)
    np.testing.assert_allclose(rm.k, 1.0 + unit_mesh.centroids[:, 0])
    bad = RegionMap(np.where(unit_mesh.subdomain == Subdomain.POROUS, 0.0, 1.0))
    with pytest.raises(MeshError):
        bad.check(unit_mesh)


def test_interface_owners(unit_mesh):
    own = unit_mesh.interface_owners
    assert np.all(unit_mesh.subdomain[own[:, 0]] == Subdomain.FLUID)
    assert np.all(unit_mesh.subdomain[own[:, 1]] == Subdomain.POROUS)


MSH = """$MeshFormat
2.2 0 8
$EndMeshFormat
$PhysicalNames
4
1 5 "lid"
1 6 "ground"
2 1 "Fluid"
2 2 "POROUS"
$EndPhysicalNames
$Nodes
7
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
5 1 -1 0
6 0 -1 0
7 9 9 0
$EndNodes
$Elements
6
1 15 2 0 1 7
2 1 2 5 5 3 4
3 1 2 6 6 5 6
4 2 2 1 1 1 2 3
5 2 2 1 1 1 4 3
6 2 2 2 2 1 5 2
7 2 2 2 2 1 6 5
$EndElements
"""


def test_import_msh_small():
    text = MSH.replace("$Elements\n6", "$Elements\n7")
    m = import_msh(text)
    assert m.n_vertices == 6            # the unused geometry point is dropped
    assert m.n_triangles == 4
    assert np.all(m.areas > 0)          # clockwise input is reoriented
    assert set(m.labels()) == {"lid", "ground", "OUTER_FLUID", "OUTER_POROUS"}
    assert len(m.interface_edges) == 1
    np.testing.assert_allclose(m.interface_normals, [[0.0, -1.0]])
    assert validate(m) == []


@pytest.mark.parametrize("edit,line", [
    (("2.2 0 8", "4.1 0 8"), 2),
    (("$Elements\n7", "$Elements\n9"), 22),
    (("4 2 2 1 1 1 2 3", "4 2 2 1 1 1 2 99"), 26),
    (("4 2 2 1 1 1 2 3", "4 2 2 3 3 1 2 3"), 26),
    (("4 2 2 1 1 1 2 3", "4 9 2 1 1 1 2 3"), 26),
])
def test_import_msh_errors(edit, line):
    text = MSH.replace("$Elements\n6", "$Elements\n7").replace(*edit)
    with pytest.raises(MeshFormatError) as err:
        import_msh(text)
    if line is not None:
        assert err.value.line == line
        assert f"line {line}" in str(err.value)


def test_missing_end_marker():
    with pytest.raises(MeshFormatError, match="not terminated"):
        import_msh(MSH.replace("$EndNodes\n", ""))


def test_hanging_node_rejected():
    # fluid above [0,1] with a midpoint vertex the porous side does not share
    text = """$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
6
1 0 0 0
2 0.5 0 0
3 1 0 0
4 0.5 1 0
5 0 -1 0
6 1 -1 0
$EndNodes
$Elements
4
1 2 2 1 1 1 2 4
2 2 2 1 1 2 3 4
3 2 2 2 2 1 5 3
4 2 2 2 2 5 6 3
$EndElements
"""
    with pytest.raises(MeshFormatError, match="non-conforming"):
        import_msh(text)


def test_msh_round_trip(tmp_path, unit_mesh):
    path = tmp_path / "pair.msh"
    export_msh(unit_mesh, path)
    back = read_msh(path)
    np.testing.assert_array_equal(back.vertices, unit_mesh.vertices)
    np.testing.assert_array_equal(back.triangles, unit_mesh.triangles)
    np.testing.assert_array_equal(back.subdomain, unit_mesh.subdomain)
    assert sorted(back.boundary_labels) == sorted(unit_mesh.boundary_labels)
    np.testing.assert_array_equal(back.interface_edges, unit_mesh.interface_edges)


def test_yshape_mesh():
    m = build_yshape(1.0 / 16.0)
    assert validate(m) == []
    assert set(m.labels()) == {"HA", "CD", "FG", "porous_outer"}
    walls = ["AB", "BC", "DE", "EF", "GH"]
    expected = sum(np.linalg.norm(np.subtract(CORNERS[w[1]], CORNERS[w[0]])) for w in walls)
    assert m.interface_length() == pytest.approx(expected, abs=1e-12)
    fluid_area = m.areas[m.subdomain == Subdomain.FLUID].sum()
    poly = np.array([CORNERS[c] for c in "ABCDEFGH"])
    x, y = poly.T
    shoelace = 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
    assert fluid_area == pytest.approx(shoelace, rel=1e-12)
    assert m.areas.sum() == pytest.approx(1.0, rel=1e-12)


def test_packaged_yshape_mesh_matches_generator():
    packaged = read_msh(YSHAPE_MESH)
    fresh = build_yshape(1.0 / 36.0)
    np.testing.assert_array_equal(packaged.vertices, fresh.vertices)
    np.testing.assert_array_equal(packaged.triangles, fresh.triangles)
    n_f = int(np.sum(packaged.subdomain == Subdomain.FLUID))
    # the reference partition has 954 fluid and 1812 porous triangles
    assert abs(n_f - 954) < 50
    assert abs(packaged.n_triangles - n_f - 1812) < 100

import numpy as np
import pytest

from tropharm.degeneration import (
    DegenerationSchedule,
    ExperimentSampling,
    PointCloud,
    PuncturedSphere,
    SamplingConfig,
    amoeba_map,
    annulus_period_experiment,
    collar_modulus,
    collar_sweep,
    collar_width,
    convergence_experiment,
    field_zero,
    hausdorff,
    ind_genus0,
    length_schedule,
    place_tree,
    realize_genus0,
    rescale_H,
    sample_amoeba,
)
from tropharm.errors import (
    EmptyAfterClippingError,
    EvaluationAtPunctureError,
    InputError,
    MinimumDensityViolationError,
    NonPositiveLengthError,
    NonPositiveResiduesError,
    NotATreeError,
    NonIntegerResiduesError,
    ResiduesDontSumToZeroError,
    ZeroCoordinateError,
)
from tropharm.forms import ResidueMatrix
from tropharm.morphisms import Scene

from conftest import caterpillar_graph, dumbbell_graph, tripod_graph

LINE_R = ResidueMatrix([[1.0, 0.0, -1.0], [0.0, 1.0, -1.0]])
LINE_SPHERE = PuncturedSphere((0.0, 1.0, None))


# collar formulas; reference digits cross-checked at 40 decimals with mpmath


def test_collar_width_values():
    assert collar_width(0.1) == pytest.approx(3.689087757070663, abs=1e-12)
    l0 = 2.0 * np.arcsinh(1.0)
    assert collar_width(l0) == pytest.approx(np.arcsinh(1.0), abs=1e-14)


def test_collar_width_monotone():
    ls = np.geomspace(0.05, 50, 200)
    ws = collar_width(ls)
    assert np.all(np.diff(ws) < 0)
    assert ws[-1] < 1e-9


def test_collar_nonpositive():
    with pytest.raises(NonPositiveLengthError):
        collar_width(0.0)
    with pytest.raises(NonPositiveLengthError):
        collar_modulus(-1.0)


def test_collar_modulus_value():
    assert collar_modulus(0.1) == pytest.approx(30.416342942336896, rel=1e-13)
    # the closed form agrees with the tanh simplification
    ls = np.geomspace(1e-6, 3.0, 50)
    alt = (2.0 / ls) * np.arccos(np.tanh(ls / 2.0))
    assert np.allclose(collar_modulus(ls), alt, rtol=1e-12)


def test_l_times_modulus_limit_pi():
    ls = 10.0 ** -np.arange(1, 9)
    prod = ls * collar_modulus(ls)
    assert np.all(np.diff(prod) > 0)
    assert abs(prod[-1] - np.pi) <= 1e-6
    diffs = np.abs(np.diff(np.pi - prod))
    assert np.all(np.diff(diffs) < 0)  # successive differences shrink
    assert np.all(prod < np.pi) and np.all(prod > 0)


def test_collar_sweep_report_flags_deviation():
    rep = collar_sweep(10.0 ** -np.arange(1, 9))
    assert rep["deviates_from_quoted_constant"] is True
    assert rep["quoted_asymptotic_constant"] == 2.0
    assert rep["analytic_limit"] == pytest.approx(np.pi)
    assert abs(rep["observed_limit_of_l_times_m"] - np.pi) <= 1e-6


def test_length_schedule():
    sched = DegenerationSchedule(dumbbell_graph(), kappa=4 * np.pi, t_values=(10.0, 100.0))
    lt = length_schedule(sched, np.e)
    assert lt["e1"] == pytest.approx(4 * np.pi)  # l(e1) = 1, log t = 1
    assert lt["e2"] == pytest.approx(2 * np.pi)
    lt2 = length_schedule(sched, np.e**2)
    assert lt2["e1"] == pytest.approx(2 * np.pi)
    assert all(lt2[e] < lt[e] for e in lt)


def test_schedule_validation():
    with pytest.raises(InputError):
        DegenerationSchedule(dumbbell_graph(), kappa=-1.0)
    with pytest.raises(InputError):
        DegenerationSchedule(dumbbell_graph(), t_values=(2.0, 10.0))


def test_annulus_experiment_kappa_star():
    rep = annulus_period_experiment(1.0)  # default kappa = 4*pi
    assert rep.limit == pytest.approx(np.pi / 2, abs=2e-3)
    assert rep.kappa_star == pytest.approx(2 * np.pi**2, rel=1e-2)
    rep2 = annulus_period_experiment(1.0, kappa=2 * np.pi**2)
    assert rep2.limit == pytest.approx(1.0, abs=3e-3)
    assert rep2.kappa_star == pytest.approx(2 * np.pi**2, rel=1e-2)


def test_annulus_limit_inverse_in_kappa():
    a = annulus_period_experiment(1.0, kappa=4 * np.pi).limit
    b = annulus_period_experiment(1.0, kappa=8 * np.pi).limit
    assert b == pytest.approx(a / 2, rel=1e-2)


def test_annulus_limit_linear_in_l():
    a = annulus_period_experiment(1.0, kappa=2 * np.pi**2).limit
    b = annulus_period_experiment(2.5, kappa=2 * np.pi**2).limit
    assert b == pytest.approx(2.5 * a, rel=1e-2)


# genus-0 differentials


def test_ind_genus0_two_punctures():
    w = ind_genus0(PuncturedSphere((0.0, None)), [1.0, -1.0])
    zs = np.array([0.5 + 0.2j, 2.0, -3.0 + 1j])
    assert np.allclose(w.value(zs), 1.0 / zs)  # dz/z


def test_ind_genus0_pair_of_pants_form():
    lam1, lam_1 = 2.0, 1.5
    w = ind_genus0(PuncturedSphere((1.0, -1.0, None)), [lam1, lam_1, -lam1 - lam_1])
    z = 0.3 + 0.7j
    assert w.value(z) == pytest.approx(lam1 / (z - 1) + lam_1 / (z + 1))


def test_ind_genus0_rejects_bad_sum():
    with pytest.raises(ResiduesDontSumToZeroError):
        ind_genus0(LINE_SPHERE, [1.0, 1.0, 1.0])


def test_circular_period_residue_readoff(rng):
    for _ in range(5):
        lam = rng.uniform(0.2, 3.0, size=2)
        w = ind_genus0(PuncturedSphere((1.0, -1.0, None)), [lam[0], lam[1], -lam.sum()])
        for j, r in ((0, 1e-2), (1, 1e-3)):
            per = w.circular_period(w.sphere.punctures[j], r)
            assert abs(per / (2j * np.pi) - lam[j]) <= 1e-6 * r
            assert abs(per.real) <= 1e-9


def test_periods_purely_imaginary(rng):
    w = ind_genus0(PuncturedSphere((1.0, -1.0, None)), [2.0, 1.0, -3.0])
    for center, radius in ((0.0, 5.0), (1.0, 0.5), (3.0, 1.0)):
        assert abs(w.circular_period(center, radius).real) <= 1e-9


def test_field_zero_values():
    assert field_zero(1.0, 1.0) == 0.0
    # sign note: the zero of lam1/(z-1) + lam_1/(z+1) sits nearer the weaker
    # source, so lam1=2, lam_1=1 gives -1/3 (not +1/3)
    assert field_zero(2.0, 1.0) == pytest.approx(-1 / 3, abs=1e-15)
    assert field_zero(1.0, 3.0) == pytest.approx(0.5, abs=1e-15)


def test_field_zero_residual_and_range(rng):
    for _ in range(50):
        lam1, lam_1 = rng.uniform(1e-3, 10.0, size=2)
        z = field_zero(lam1, lam_1)
        assert -1 < z < 1
        assert abs(lam1 / (z - 1) + lam_1 / (z + 1)) <= 1e-10 * (lam1 + lam_1)


def test_field_zero_rejects_nonpositive():
    with pytest.raises(NonPositiveResiduesError):
        field_zero(-1.0, 2.0)


# amoeba map and sampling


def test_amoeba_map_line_value():
    img = amoeba_map(LINE_SPHERE, LINE_R, 2.0)
    assert img == pytest.approx([np.log(2.0), 0.0])


def test_amoeba_map_at_puncture():
    with pytest.raises(EvaluationAtPunctureError):
        amoeba_map(LINE_SPHERE, LINE_R, 1.0)


def test_amoeba_map_zero_residues():
    img = amoeba_map(LINE_SPHERE, ResidueMatrix(np.zeros((2, 3))), 5.0 + 1j)
    assert np.allclose(img, 0.0)


def test_amoeba_respects_rescaling(rng):
    # amoeba of H_t-image equals (1/log t) amoeba: checked on the identity
    # log|H_t(z)| = log|z| / log t coordinateively
    t = 37.5
    zs = rng.uniform(0.1, 5.0, size=20) * np.exp(1j * rng.uniform(0, 2 * np.pi, 20))
    hz = rescale_H(t, zs)
    assert np.max(np.abs(np.log(np.abs(hz)) - np.log(np.abs(zs)) / np.log(t))) <= 1e-12
    assert np.max(np.abs(np.angle(hz) - np.angle(zs))) <= 1e-12


def test_rescale_H_zero_coordinate():
    with pytest.raises(ZeroCoordinateError):
        rescale_H(10.0, [0.0 + 0.0j])


def test_sampling_config_gate():
    with pytest.raises(MinimumDensityViolationError):
        SamplingConfig(radial_count=0)
    with pytest.raises(MinimumDensityViolationError):
        SamplingConfig(r_min=1.0, r_max=0.5)
    with pytest.raises(MinimumDensityViolationError):
        ExperimentSampling(u_step=0.0)


def test_sample_amoeba_close_to_dense_oracle():
    cloud = sample_amoeba(LINE_SPHERE, LINE_R, SamplingConfig())
    dense = sample_amoeba(LINE_SPHERE, LINE_R, SamplingConfig(
        radial_count=3200, angular_count=640, grid_count=144))
    win = [[-5, 5], [-5, 5]]
    assert hausdorff(cloud, dense, win) <= 0.05


def test_sample_amoeba_denser_covers_better():
    # nested grids: doubling density cannot worsen coverage of the cloud
    base = dict(r_min=1e-3, r_max=1e3)
    oracle = sample_amoeba(LINE_SPHERE, LINE_R, SamplingConfig(
        radial_count=1601, angular_count=512, grid_count=97, **base))
    win = np.array([[-5, 5], [-5, 5]])

    def coverage(cloud):
        from scipy.spatial import cKDTree

        inside = np.all((cloud.points >= win[:, 0]) & (cloud.points <= win[:, 1]), axis=1)
        oin = np.all((oracle.points >= win[:, 0]) & (oracle.points <= win[:, 1]), axis=1)
        return cKDTree(cloud.points[inside]).query(oracle.points[oin])[0].max()

    coarse = sample_amoeba(LINE_SPHERE, LINE_R, SamplingConfig(
        radial_count=101, angular_count=32, grid_count=25, **base))
    fine = sample_amoeba(LINE_SPHERE, LINE_R, SamplingConfig(
        radial_count=201, angular_count=64, grid_count=49, **base))
    assert coverage(fine) <= coverage(coarse) + 1e-12


# hausdorff


def test_hausdorff_identical_clouds():
    pts = np.array([[0.0, 0.0], [1.0, 2.0], [-1.0, 0.5]])
    a = PointCloud(pts, ("a", "b", "c"))
    assert hausdorff(a, a, [[-3, 3], [-3, 3]]) == 0.0


def test_hausdorff_point_vs_segment():
    scene = Scene(2, {"a": np.zeros(2), "b": np.array([1.0, 0.0])}, (("e", "a", "b"),), (), 1.0)
    cloud = PointCloud(np.zeros((1, 2)), ("x",))
    assert hausdorff(cloud, scene, [[-2, 2], [-2, 2]]) == pytest.approx(1.0, abs=1e-3)


def test_hausdorff_grid_vs_fill():
    h = 0.125
    xs = np.arange(-1.0, 1.0 + h / 2, h)
    grid = np.array([[x, y] for x in xs for y in xs])
    cloud = PointCloud(grid, tuple("g" * len(grid)))
    verts = {}
    edges = []
    for i, y in enumerate(xs):
        verts[f"l{i}"] = np.array([-1.0, y])
        verts[f"r{i}"] = np.array([1.0, y])
        edges.append((f"s{i}", f"l{i}", f"r{i}"))
    scene = Scene(2, verts, tuple(edges), (), 1.0)
    assert hausdorff(cloud, scene, [[-2, 2], [-2, 2]]) <= h / np.sqrt(2) + 1e-6


def test_hausdorff_empty_after_clip():
    cloud = PointCloud(np.array([[10.0, 10.0]]), ("x",))
    scene = Scene(2, {"a": np.zeros(2)}, (), (("p", np.zeros(2), np.array([1.0, 0.0])),), 1.0)
    with pytest.raises(EmptyAfterClippingError):
        hausdorff(cloud, scene, [[-1, 1], [-1, 1]])


# placement, realization, convergence


def test_place_tripod_constant():
    mg = tripod_graph()
    for t in (10.0, 1e4):
        pl = place_tree(mg, t)
        assert pl.punctures == (0.0 + 0.0j, 1.0 + 0.0j, None)


def test_place_caterpillar_matches_expected():
    mg = caterpillar_graph(2.5)
    pl = place_tree(mg, 100.0)
    assert pl.punctures[0] == 0.0
    assert pl.punctures[1] == 1.0
    assert pl.punctures[2] == pytest.approx(100.0**2.5)
    assert pl.punctures[3] is None


def test_realize_rejects_nontree_and_noninteger():
    with pytest.raises(NotATreeError):
        realize_genus0(dumbbell_graph(), ResidueMatrix([[3.0, -3.0]]), 100.0)
    with pytest.raises(NonIntegerResiduesError):
        realize_genus0(tripod_graph(), ResidueMatrix([[0.5, 0.0, -0.5]]), 100.0)


def test_realize_iota_closed_form():
    mg = caterpillar_graph(1.0)
    R = ResidueMatrix([[1.0, 0.0, -1.0, 0.0], [0.0, 1.0, 0.0, -1.0]])
    sphere, iota = realize_genus0(mg, R, 1e3)
    z = 7.0 + 2.0j
    expected = np.array([(z - 0) * (z - 1e3) ** -1, (z - 1)])
    assert np.allclose(iota(z), expected)


def test_convergence_line(tripod):
    rep = convergence_experiment(tripod, LINE_R, [1e3, 1e4, 1e5, 1e6], window=[[-3, 3], [-3, 3]])
    ds = [e.global_hausdorff for e in rep.entries]
    assert all(b <= a * 1.10 for a, b in zip(ds, ds[1:]))  # 10% slack
    assert ds[-1] <= 0.05


def test_convergence_zero_residues(tripod):
    rep = convergence_experiment(tripod, ResidueMatrix(np.zeros((2, 3))), [1e3],
                                 window=[[-1, 1], [-1, 1]])
    assert rep.entries[0].global_hausdorff <= 1e-9


def test_convergence_report_serialization(tripod):
    rep = convergence_experiment(tripod, LINE_R, [1e3], window=[[-3, 3], [-3, 3]])
    doc = rep.to_dict()
    assert "1000" in doc["results"]
    csv = rep.to_csv()
    assert csv.splitlines()[0] == "t,global_hausdorff"


def test_convergence_rejects_positive_genus(dumbbell):
    with pytest.raises(NotATreeError):
        convergence_experiment(dumbbell, ResidueMatrix([[1.0, -1.0]]), [1e3])


def test_amoeba_of_Ht_image_is_rescaled_amoeba():
    # coordinate-wise: log|H_t(w)| = (1/log t) log|w| on iota images
    mg = caterpillar_graph(1.0)
    R = ResidueMatrix([[1.0, 0.0, -1.0, 0.0], [0.0, 1.0, 0.0, -1.0]])
    t = 1e4
    sphere, iota = realize_genus0(mg, R, t)
    zs = np.array([0.5 + 0.25j, -2.0 + 1.0j, 40.0 + 3.0j, 0.1j])
    w = iota(zs)  # (N, 2) points of the complex torus
    hw = rescale_H(t, w)
    lhs = np.log(np.abs(hw))
    rhs = np.log(np.abs(w)) / np.log(t)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_hausdorff_dimension_one():
    from tropharm.morphisms import build_morphism, emit_embedding

    mg = dumbbell_graph()
    scene = emit_embedding(build_morphism(mg, ResidueMatrix([[3.0, -3.0]]), "u"), 5.0)
    pts = np.linspace(-1.5, 3.0, 200)[:, None]
    cloud = PointCloud(pts, tuple("x" for _ in range(200)))
    assert hausdorff(cloud, scene, [[-1.5, 3.0]]) <= 0.05


def test_convergence_deeper_tree():
    from tropharm.graph import CubicGraph, Edge, Leaf, MetricGraph

    g = CubicGraph(
        ("v0", "v1", "v2"),
        (Edge("a", ("v0", "v1")), Edge("b", ("v1", "v2"))),
        (Leaf("q1", "v0"), Leaf("q2", "v0"), Leaf("q3", "v1"),
         Leaf("q4", "v2"), Leaf("q5", "v2")),
        ribbon={"v0": ("a", "q1", "q2"), "v1": ("b", "a", "q3"), "v2": ("q5", "b", "q4")},
    )
    mg = MetricGraph(g, {"a": 1.0, "b": 0.5})
    pl = place_tree(mg, 1e4)
    assert pl.height == {"v2": 1.5, "v1": 1.0, "v0": 0.0}
    assert pl.punctures[:4] == (0j, 1 + 0j, 1e4 + 0j, 1e6 + 0j)
    R = ResidueMatrix([[1.0, 0.0, -1.0, 0.0, 0.0], [0.0, 1.0, 1.0, -1.0, -1.0]])
    rep = convergence_experiment(mg, R, [1e4, 1e6], window=[[-3, 3], [-3, 3]],
                                 base_vertex="v0")
    ds = [e.global_hausdorff for e in rep.entries]
    assert ds[1] < ds[0]
    assert ds[1] <= 0.07


def test_convergence_shallow_slopes_no_overflow(tripod):
    # slopes of 0.02 would need radii beyond double range to reach the window
    # edge; the cloud must stay finite and the distance honest, not garbage
    R = ResidueMatrix([[0.02, 0.0, -0.02], [0.0, 0.02, -0.02]])
    rep = convergence_experiment(tripod, R, [1e6], window=[[-3, 3], [-3, 3]])
    d = rep.entries[0].global_hausdorff
    assert np.isfinite(d)


def test_collar_modulus_strictly_decreasing():
    ls = np.geomspace(0.01, 10.0, 300)
    ms = collar_modulus(ls)
    assert np.all(np.diff(ms) < 0)


def test_convergence_dimension_one(tripod):
    # m = 1: the rescaled amoeba collapses onto the line, distance settles at
    # the radial sampling resolution
    R = ResidueMatrix([[1.0, 1.0, -2.0]])
    rep = convergence_experiment(tripod, R, [1e3, 1e6], window=[[-3.0, 3.0]])
    assert all(e.global_hausdorff <= 0.05 for e in rep.entries)


def test_chart_evaluation_matches_direct_amoeba_map(rng):
    # the analytic own-log-radius path must agree with plain evaluation
    # wherever plain subtraction is well-conditioned
    mg = caterpillar_graph(1.0)
    R = ResidueMatrix([[1.0, 0.0, -1.0, 0.0], [0.0, 1.0, 0.0, -1.0]])
    t = 1e5
    pl = place_tree(mg, t)
    sph = pl.sphere()
    finite = [p for p in sph.punctures if p is not None]
    us = rng.uniform(-1.0, 3.0, 300)
    ths = rng.uniform(0, 2 * np.pi, 300)
    for j, p in enumerate(finite):
        radii = t**us
        u_kept, z_kept = [], []
        for u, r, a in zip(us, radii, ths):
            if r < 1e-6 * (1.0 + abs(p)):
                continue
            z = p + r * np.exp(1j * a)
            if min(abs(z - q) for q in finite) > 1e-9 * (1.0 + abs(p)):
                u_kept.append(u)
                z_kept.append(z)
        z_arr = np.array(z_kept)
        direct = amoeba_map(sph, R, z_arr)
        cols = [np.array(u_kept) * np.log(t) if k == j else np.log(np.abs(z_arr - q))
                for k, q in enumerate(finite)]
        chart = np.stack(cols, axis=1) @ R.entries[:, :3].T
        assert np.max(np.abs(direct - chart)) <= 1e-8


def test_dual_forms_span_form_space(rng):
    # dual forms of n-1 leaf paths plus g basis loops are a basis of the
    # whole form space (dimension g + n - 1)
    from tropharm.forms import dual_form
    from tropharm.graph import cycle_basis, leaf_paths
    from _generators import random_valid_cubic

    for _ in range(5):
        mg = random_valid_cubic(rng)
        base = mg.graph.leaf_ids[0]
        forms = [dual_form(mg, p) for p in leaf_paths(mg, base)]
        forms += [dual_form(mg, loop) for loop in cycle_basis(mg)]
        keys = list(mg.graph.edge_ids) + list(mg.graph.leaf_ids)
        mat = np.array([[f.values[k] for k in keys] for f in forms])
        assert np.linalg.matrix_rank(mat) == mg.genus + mg.n_leaves - 1

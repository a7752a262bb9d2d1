import itertools

import numpy as np
import pytest

from elaselect import bbob
from elaselect.errors import DimensionError, InvalidProblem


def test_base_sphere_is_untransformed(sphere_base):
    assert np.array_equal(sphere_base.x_opt, np.zeros(5))
    assert sphere_base.f_opt == 0.0
    assert np.array_equal(sphere_base.rotation, np.eye(5))


def test_rotation_orthogonal():
    inst = bbob.make_instance(3, 1, 5)
    err = np.abs(inst.rotation.T @ inst.rotation - np.eye(5)).max()
    assert err <= 1e-10


def test_rotation_orthogonal_all_instances():
    for fid in range(1, 25):
        for iid in range(0, 6):
            inst = bbob.make_instance(fid, iid, 5)
            err = np.abs(inst.rotation.T @ inst.rotation - np.eye(inst.dim)).max()
            assert err <= 1e-10, (fid, iid)
            assert np.all(np.abs(inst.x_opt) <= 5.0), (fid, iid)


def test_construction_deterministic():
    a = bbob.make_instance(8, 2, 5)
    b = bbob.make_instance(8, 2, 5)
    assert np.array_equal(a.x_opt, b.x_opt)
    assert a.f_opt == b.f_opt
    assert np.array_equal(a.rotation, b.rotation)


@pytest.mark.parametrize("fid", [0, 25, -3])
def test_invalid_fid(fid):
    with pytest.raises(InvalidProblem):
        bbob.make_instance(fid, 1, 5)


def test_invalid_iid_and_dim():
    with pytest.raises(InvalidProblem):
        bbob.make_instance(1, -1, 5)
    with pytest.raises(InvalidProblem):
        bbob.make_instance(1, 1, 1)


def test_evaluate_dimension_mismatch(sphere_base):
    with pytest.raises(DimensionError):
        bbob.evaluate(sphere_base, np.zeros(4))
    with pytest.raises(DimensionError):
        bbob.evaluate_many(sphere_base, np.zeros((3, 6)))


def test_sphere_optimum_and_hand_value(sphere_base):
    assert bbob.evaluate(sphere_base, sphere_base.x_opt) == sphere_base.f_opt
    assert bbob.precision(sphere_base, sphere_base.x_opt) == 0.0
    assert bbob.evaluate(sphere_base, np.array([1.0, 0, 0, 0, 0])) == sphere_base.f_opt + 1.0


def test_optimum_attained_every_instance():
    for fid in range(1, 25):
        for iid in range(0, 4):
            inst = bbob.make_instance(fid, iid, 5)
            assert bbob.precision(inst, np.asarray(inst.x_opt)) == 0.0, (fid, iid)


def test_linear_slope_affine_on_lattice():
    # brute-force grid oracle: precision on the 3^5 lattice has vanishing
    # mixed second differences along every axis, i.e. it is affine per
    # coordinate; the corner holds the optimum
    inst = bbob.make_instance(5, 0, 5)
    pts = np.array(list(itertools.product([-5.0, 0.0, 5.0], repeat=5)))
    vals = bbob.evaluate_many(inst, pts) - inst.f_opt
    grid = vals.reshape((3,) * 5)
    for axis in range(5):
        assert np.abs(np.diff(grid, n=2, axis=axis)).max() < 1e-12
    assert vals.min() == 0.0
    assert np.all(vals >= 0.0)
    assert np.array_equal(inst.x_opt, np.full(5, 5.0))


def test_precision_nonnegative_random_points():
    rng = np.random.default_rng(99)
    for fid in range(1, 25):
        for iid in range(0, 6):
            inst = bbob.make_instance(fid, iid, 5)
            xs = rng.uniform(-5, 5, (10_000, 5))
            prec = bbob.evaluate_many(inst, xs) - inst.f_opt
            assert prec.min() >= 0.0, (fid, iid, prec.min())


def test_noiseless_repeated_calls():
    inst = bbob.make_instance(17, 2, 5)
    x = np.linspace(-4, 4, 5)
    vals = {bbob.evaluate(inst, x) for _ in range(10)}
    assert len(vals) == 1


def test_instances_of_same_fid_differ_at_origin():
    origin = np.zeros(5)
    for fid in range(1, 25):
        a = bbob.make_instance(fid, 1, 5)
        b = bbob.make_instance(fid, 2, 5)
        assert bbob.evaluate(a, origin) != bbob.evaluate(b, origin), fid


def test_evaluate_matches_evaluate_many():
    # batch and single-row evaluation may differ in final ulps (BLAS kernels
    # vary with shape); identical calls must agree exactly
    rng = np.random.default_rng(3)
    inst = bbob.make_instance(21, 3, 5)
    xs = rng.uniform(-5, 5, (20, 5))
    batch = bbob.evaluate_many(inst, xs)
    singles = np.array([bbob.evaluate(inst, x) for x in xs])
    assert np.allclose(batch, singles, rtol=1e-12, atol=1e-9)
    assert np.array_equal(batch, bbob.evaluate_many(inst, xs))


def test_other_dimensions_work():
    for dim in (2, 3, 10):
        for fid in (1, 5, 16, 20, 24):
            inst = bbob.make_instance(fid, 1, dim)
            x = np.zeros(dim)
            prec = bbob.evaluate(inst, x) - inst.f_opt
            assert np.isfinite(prec) and prec >= 0.0

import numpy as np
import pytest

from ydyn.errors import AmbiguityError, ConstructionError, DomainError
from ydyn.phase_space import Grid, SpaceDescriptor
from ydyn.solvers import (
    PiecewiseField,
    SelectionPolicy,
    SetValuedField,
    extend_backward,
    sample_inclusion,
    simulate_filippov,
)
from ydyn.systems import filippov_absorb, filippov_field, interval_rotation
from ydyn.trajectory import SolutionBundle, Trajectory

PLANE = SpaceDescriptor.box([(-5.0, 5.0), (-5.0, 5.0)])


def test_constant_field_is_a_straight_line():
    F = SetValuedField.constant(PLANE, [0.5, -0.25], [0.5, -0.25])
    s = sample_inclusion(F, [(0.0, 0.0)], -1.0, 1.0, 0.125, 1)
    phi = s[0]
    expected = np.outer(phi.times(), [0.5, -0.25])
    assert np.array_equal(phi.samples, expected)


def test_interval_rotation_envelope():
    sys = interval_rotation()
    s = sample_inclusion(sys.field, [0.0], 0.0, 1.0, 0.05, 8, SelectionPolicy(seed=3, law="extreme"))
    for phi in s:
        slopes = np.round(np.mod(np.diff(phi.samples[:, 0]), 1.0) / 0.05, 9)
        assert set(slopes) <= {1.0, 2.0}
        for k in range(len(phi)):
            t = k * 0.05
            advance = np.mod(phi.samples[k, 0] - 0.0, 1.0)
            # position lies in [t, 2t] mod 1
            lo, hi = t, 2 * t
            assert any(lo - 1e-9 <= advance + n <= hi + 1e-9 for n in range(0, 3))


def test_inclusion_velocity_envelope_all_laws():
    sys = interval_rotation()
    for law in ("corner", "uniform", "extreme"):
        s = sample_inclusion(sys.field, sys.grid.centers()[::7], -0.5, 0.5, 0.05, 2, SelectionPolicy(law=law))
        for phi in s:
            v = np.mod(np.diff(phi.samples[:, 0]), 1.0) / 0.05
            assert np.all(v >= 1.0 - 1e-9) and np.all(v <= 2.0 + 1e-9)


def test_zero_selections_gives_empty_bundle():
    sys = interval_rotation()
    assert len(sample_inclusion(sys.field, [0.0], 0.0, 1.0, 0.05, 0)) == 0


def test_horizon_alignment_and_sign():
    sys = interval_rotation()
    with pytest.raises(DomainError):
        sample_inclusion(sys.field, [0.0], 0.5, 1.0, 0.05, 1)
    with pytest.raises(Exception):
        sample_inclusion(sys.field, [0.0], 0.0, 1.01, 0.05, 1)


def test_empty_box_names_the_cell():
    g = Grid.over(SpaceDescriptor.box([(0.0, 1.0)]), 4)
    table = {i: ([0.0], [1.0]) for i in range(4)}
    table[2] = ([1.0], [0.0])
    with pytest.raises(ConstructionError, match="cell 2"):
        SetValuedField(g.space, table=table, grid=g)


def test_box_exit_truncates():
    F = SetValuedField.constant(SpaceDescriptor.box([(0.0, 1.0)]), [1.0], [1.0])
    phi = sample_inclusion(F, [0.5], -0.2, 2.0, 0.1, 1)[0]
    assert not phi.right_truncated
    assert phi.left_truncated
    assert phi.provenance["exited"] == ["forward"]
    assert phi.samples[:, 0].max() <= 1.0


def test_determinism_across_threads():
    sys = interval_rotation()
    seeds = sys.grid.centers()[::5]
    pol = SelectionPolicy(seed=11, law="uniform")
    a = sample_inclusion(sys.field, seeds, -1.0, 1.0, 0.05, 3, pol, threads=1)
    b = sample_inclusion(sys.field, seeds, -1.0, 1.0, 0.05, 3, pol, threads=4)
    assert all(x == y for x, y in zip(a, b))
    c = sample_inclusion(sys.field, seeds, -1.0, 1.0, 0.05, 3, SelectionPolicy(seed=12, law="uniform"))
    assert any(x != y for x, y in zip(a, c))


def test_filippov_descent_closed_form():
    Z = filippov_field()
    dt = 1e-3
    phi = simulate_filippov(Z, (0.3, 1.0), 0.0, 2.0, dt)
    t = phi.times()
    assert np.max(np.abs(phi.samples[:, 1] - np.maximum(1.0 - t, 0.0))) <= 2 * dt
    assert np.max(np.abs(phi.samples[:, 0] - 0.3)) <= 1e-9


def test_filippov_from_below():
    dt = 1e-3
    phi = simulate_filippov(filippov_field(), (0.3, -0.5), 0.0, 2.0, dt)
    t = phi.times()
    assert np.max(np.abs(phi.samples[:, 1] - np.minimum(-0.5 + t, 0.0))) <= 2 * dt


def test_filippov_on_surface_is_constant():
    phi = simulate_filippov(filippov_field(), (0.3, 0.0), -1.0, 1.0, 0.01)
    assert np.all(phi.samples == np.array([0.3, 0.0]))


def test_filippov_sliding_stays_on_surface():
    phi = simulate_filippov(filippov_field(), (0.7, 0.4567), 0.0, 1.5, 0.01)
    on = np.nonzero(np.abs(phi.samples[:, 1]) <= 1e-9)[0]
    assert on.size and np.all(np.abs(phi.samples[on[0]:, 1]) <= 1e-9)


def test_filippov_backward_leaves_the_box():
    phi = simulate_filippov(filippov_field(), (0.3, 1.0), -1.0, 0.0, 0.01)
    # backward in time y grows and exits the top of the box
    assert not phi.left_truncated
    assert phi.samples[:, 1].max() <= 1.05


def test_sliding_lambda():
    space = SpaceDescriptor.box([(-1.0, 1.0), (-1.0, 1.0)])
    Z = PiecewiseField(space, h=lambda x: x[1], f_plus=lambda x: np.array([1.0, -1.0]), f_minus=lambda x: np.array([1.0, 3.0]))
    v, regime = Z.surface_velocity(np.array([0.0, 0.0]))
    # a = -1, b = 3, lam = 3/4: v = (1, 0)
    assert regime == "slide"
    assert v == pytest.approx([1.0, 0.0])


def test_crossing_and_ambiguity():
    space = SpaceDescriptor.box([(-1.0, 1.0), (-1.0, 1.0)])
    up = lambda x: np.array([0.0, 1.0])  # noqa: E731
    down = lambda x: np.array([0.0, -1.0])  # noqa: E731
    cross = PiecewiseField(space, h=lambda x: x[1], f_plus=up, f_minus=up)
    assert cross.surface_velocity(np.zeros(2))[1] == "cross+"
    repel = PiecewiseField(space, h=lambda x: x[1], f_plus=up, f_minus=down)
    with pytest.raises(AmbiguityError) as err:
        repel.surface_velocity(np.zeros(2))
    assert list(err.value.point) == [0.0, 0.0]


def test_crossing_trajectory_passes_through():
    space = SpaceDescriptor.box([(-1.0, 1.0), (-1.0, 1.0)])
    up = lambda x: np.array([0.0, 1.0])  # noqa: E731
    Z = PiecewiseField(space, h=lambda x: x[1], f_plus=up, f_minus=up)
    phi = simulate_filippov(Z, (0.0, -0.5), 0.0, 1.0, 0.01)
    assert phi.samples[-1, 1] == pytest.approx(0.5, abs=1e-9)


def test_numeric_gradient():
    space = SpaceDescriptor.box([(-1.0, 1.0), (-1.0, 1.0)])
    Z = PiecewiseField(space, h=lambda x: x[0] + 2 * x[1], f_plus=lambda x: np.zeros(2), f_minus=lambda x: np.zeros(2))
    assert Z.gradient([0.1, 0.2]) == pytest.approx([1.0, 2.0], abs=1e-8)


def test_extend_backward_two_sided_unchanged():
    sys = interval_rotation()
    s = sys.bundle(seeds=[0.0], n_per_seed=1)
    phi = s[0].replace(left_truncated=False)
    out = extend_backward(s, phi, 3, 1e-9)
    assert out == phi
    assert out.provenance["achieved_depth"] == 0


def test_extend_backward_on_circle():
    sys = interval_rotation()
    x = np.array([0.123])
    chain = []
    for j in range(4):
        psi = sample_inclusion(sys.field, [x], 0.0, 0.45, 0.05, 1, SelectionPolicy(seed=j))[0]
        chain.append(psi)
        x = psi.samples[-1]
    pool = SolutionBundle(0.05, sys.space, tuple(chain[:3]))
    phi = chain[3]
    out = extend_backward(pool, phi, 3, 1e-12)
    assert out.provenance["achieved_depth"] == 3
    assert out.k0 == -27
    assert np.array_equal(out.samples[:9], chain[0].samples[:9])


def test_extend_backward_no_preimage():
    space = SpaceDescriptor.box([(0.0, 10.0)])
    F = SetValuedField.constant(space, [1.0], [1.0])
    s = sample_inclusion(F, [0.0], 0.0, 1.0, 0.1, 1)
    phi = s[0].replace(left_truncated=True)
    out = extend_backward(s, phi, 3, 1e-9)
    assert out.provenance["achieved_depth"] == 0
    assert out.k0 == phi.k0


def test_filippov_bundle_threads_identical():
    sys = filippov_absorb()
    seeds = sys.grid.centers()[::13]
    a = sys.bundle(seeds=seeds, horizon=(0.0, 0.3), dt=0.01, threads=1)
    b = sys.bundle(seeds=seeds, horizon=(0.0, 0.3), dt=0.01, threads=3)
    assert all(x == y for x, y in zip(a, b))

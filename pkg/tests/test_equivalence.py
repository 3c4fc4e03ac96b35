import math

import numpy as np
import pytest

from Equivalence import equivalence
from Equivalence.equivalence import EquivalenceTester, recover_transformation, signature
from errors import AmbiguousShift, DegenerateFrame, NoRegularWindow
from Group.group_core import GalileanElement, inverse, random_element
from MovingFrame.motions import AnalyticMotion, SampledMotion, TransformedMotion, grid_derivative

LINE = AnalyticMotion.polynomial([[0.0, 0.0, 0.5], [0.0, 1.0], [0.0]])
# x'' = (t^3 + t^2, 1, t): regular everywhere, a1 increases for t > 0 and decreases for t < -1
STEEP = AnalyticMotion.polynomial([[0.0, 0.0, 0.0, 0.0, 1.0 / 12.0, 1.0 / 20.0], [0.0, 0.0, 0.5], [0.0, 0.0, 0.0, 1.0 / 6.0]])


@pytest.fixture
def g(rng):
    r = random_element(rng)
    return GalileanElement(0.37, r.v, r.R, r.y)


def test_recovers_a_known_transformation(poly_motion, g):
    report = equivalence.test_equivalence(poly_motion, TransformedMotion(poly_motion, g), window=(0.0, 2.0))
    assert report.equivalent
    assert not report.ambiguous_shift
    assert report.time_shift == pytest.approx(0.37, abs=1e-7)
    assert report.transform.max_abs_diff(g) < 1e-6
    assert report.max_pointwise_residual <= 1e-6
    assert report.max_signature_residual < 1e-5


def test_motion_is_equivalent_to_itself(poly_motion):
    report = equivalence.test_equivalence(poly_motion, poly_motion, window=(0.0, 1.0))
    assert report.equivalent
    assert abs(report.time_shift) < 1e-7
    assert report.transform.max_abs_diff(GalileanElement.identity()) < 1e-6


def test_reverse_direction_gives_the_inverse(poly_motion, g):
    moved = TransformedMotion(poly_motion, g)
    report = EquivalenceTester().test(moved, poly_motion, window=(0.5, 1.5))
    assert report.equivalent
    assert report.time_shift == pytest.approx(-0.37, abs=1e-7)
    assert report.transform.max_abs_diff(inverse(g)) < 1e-6


def test_anchor_choice_does_not_change_the_transformation(poly_motion, g):
    moved = TransformedMotion(poly_motion, g)
    tester = EquivalenceTester()
    for anchor in (0.2, 0.9, 1.6):
        report = tester.test(poly_motion, moved, window=(0.0, 2.0), anchor=anchor)
        assert report.anchor == anchor
        assert report.transform.max_abs_diff(g) < 1e-6


def test_circles_of_different_radius_are_not_equivalent():
    report = equivalence.test_equivalence(AnalyticMotion.circle(1.0), AnalyticMotion.circle(2.0), window=(0.0, 3.0))
    assert not report.equivalent
    assert report.transform is None
    assert report.ambiguous_shift
    assert report.warnings


def test_rotated_circle_is_equivalent_despite_flat_signature(rng, circle):
    moved = TransformedMotion(circle, random_element(rng))
    report = equivalence.test_equivalence(circle, moved, window=(0.0, 3.0))
    assert report.ambiguous_shift
    assert report.equivalent


def test_perturbed_copy_is_rejected(rng, g):
    coeffs = rng.uniform(-1, 1, (3, 6))
    base = AnalyticMotion.polynomial(coeffs)
    coeffs[0, 4] += 1e-2
    bent = AnalyticMotion.polynomial(coeffs)
    report = equivalence.test_equivalence(base, TransformedMotion(bent, g), window=(0.0, 1.0))
    assert not report.equivalent
    assert report.max_pointwise_residual > 1e-6


def test_recover_transformation_from_frames(poly_motion, g):
    moved = TransformedMotion(poly_motion, g)
    for t0 in (0.1, 0.5):
        assert recover_transformation(poly_motion, moved, g.s, t0).max_abs_diff(g) < 1e-9
    with pytest.raises(DegenerateFrame):
        recover_transformation(LINE, LINE, 0.0, 0.5)


def test_circle_signature(circle):
    sig = signature(circle, np.linspace(0.0, 1.0, 11))
    assert np.allclose(sig.a1, 1.0) and np.allclose(sig.a2, 1.0)
    assert np.allclose(sig.a3, 0.0, atol=1e-14)
    assert np.allclose(sig.da1, 0.0, atol=1e-12)
    assert sig.usable.all()


def test_line_signature_is_masked():
    sig = signature(LINE, np.linspace(0.0, 1.0, 5))
    assert not sig.regular_mask.any()
    assert np.isnan(sig.a3).all()


def test_signature_follows_the_time_shift(poly_motion, g):
    ts = np.linspace(0.0, 1.0, 21)
    sig1 = signature(poly_motion, ts)
    sig2 = signature(TransformedMotion(poly_motion, g), ts + g.s)
    assert np.max(np.abs(sig1.rows() - sig2.rows())) < 1e-9


def test_no_regular_window():
    with pytest.raises(NoRegularWindow):
        equivalence.test_equivalence(LINE, LINE, window=(0.0, 1.0))
    with pytest.raises(NoRegularWindow):
        equivalence.test_equivalence(AnalyticMotion.circle(), AnalyticMotion.circle())


def test_sampled_motions(g):
    base = AnalyticMotion.helix_like()
    ts = np.linspace(0.0, 2.0, 1001)
    m1 = SampledMotion.from_motion(base, ts)
    m2 = SampledMotion.from_motion(TransformedMotion(base, g), ts + g.s)
    report = equivalence.test_equivalence(m1, m2)
    assert report.equivalent
    assert report.tol > 1e-6
    assert report.time_shift == pytest.approx(g.s, abs=1e-3)
    assert report.transform.max_abs_diff(g) < 1e-3


def test_report_dictionary_layout(poly_motion):
    d = equivalence.test_equivalence(poly_motion, poly_motion, window=(0.0, 1.0)).to_dict()
    assert list(d) == [
        "equivalent", "time_shift", "transform", "max_signature_residual",
        "max_pointwise_residual", "ambiguous_shift", "anchor", "tol", "warnings",
    ]
    assert set(d["transform"]) == {"s", "v", "R", "y"}
    assert not math.isnan(d["max_signature_residual"])


def test_shift_beyond_the_window_length_is_found(poly_motion, rng):
    r = random_element(rng)
    g = GalileanElement(3.0, r.v, r.R, r.y)
    report = equivalence.test_equivalence(poly_motion, TransformedMotion(poly_motion, g), window=(0.0, 1.0))
    assert report.equivalent
    assert report.time_shift == pytest.approx(3.0, abs=1e-7)
    assert report.transform.max_abs_diff(g) < 1e-6
    assert not report.warnings


def test_search_range_widens_towards_a_distant_shift(rng):
    r = random_element(rng)
    g = GalileanElement(12.0, r.v, r.R, r.y)
    report = equivalence.test_equivalence(STEEP, TransformedMotion(STEEP, g), window=(0.0, 1.0))
    assert report.equivalent
    assert report.time_shift == pytest.approx(12.0, abs=1e-7)
    assert report.transform.max_abs_diff(g) < 1e-6
    assert not report.warnings


def test_capped_search_warns_when_the_optimum_is_on_its_edge(rng):
    r = random_element(rng)
    g = GalileanElement(12.0, r.v, r.R, r.y)
    report = EquivalenceTester(max_shift=2.0).test(STEEP, TransformedMotion(STEEP, g), window=(0.0, 1.0))
    assert not report.equivalent
    assert report.time_shift == pytest.approx(2.0, abs=0.05)
    assert any("edge of the search range" in w for w in report.warnings)


def test_random_pairs_recover_the_transformation():
    rng = np.random.default_rng(7)
    worst_g = worst_s = 0.0
    for _ in range(100):
        m = AnalyticMotion.random_polynomial(rng, degree=5)
        g = random_element(rng)
        report = equivalence.test_equivalence(m, TransformedMotion(m, g), window=(0.0, 1.0))
        assert report.equivalent
        worst_s = max(worst_s, abs(report.time_shift - g.s))
        worst_g = max(worst_g, report.transform.max_abs_diff(g))
    assert worst_s < 1e-7
    assert worst_g < 1e-7


def test_random_pairs_are_symmetric():
    rng = np.random.default_rng(11)
    tester = EquivalenceTester()
    for _ in range(100):
        m = AnalyticMotion.random_polynomial(rng, degree=5)
        g = random_element(rng)
        moved = TransformedMotion(m, g)
        forward = tester.test(m, moved, window=(0.0, 1.0))
        backward = tester.test(moved, m, window=(g.s, g.s + 1.0))
        assert forward.equivalent and backward.equivalent
        assert backward.time_shift == pytest.approx(-forward.time_shift, abs=1e-7)
        assert backward.transform.max_abs_diff(inverse(forward.transform)) < 1e-6


def test_strict_shift_raises_on_flat_signature(rng, circle):
    moved = TransformedMotion(circle, random_element(rng))
    with pytest.raises(AmbiguousShift):
        EquivalenceTester(strict_shift=True).test(circle, moved, window=(0.0, 3.0))
    report = EquivalenceTester(strict_shift=True).test(STEEP, STEEP, window=(0.0, 1.0))
    assert report.equivalent and not report.ambiguous_shift


def test_sampled_signature_uses_the_scheme_stencil():
    base = AnalyticMotion.helix_like()
    ts = np.linspace(0.0, 2.0, 101)
    exact = signature(base, ts).da1
    errors = {}
    for scheme in ("central2", "central4"):
        sig = signature(SampledMotion.from_motion(base, ts, scheme=scheme), ts)
        assert np.array_equal(sig.da1, grid_derivative(ts, sig.a1, scheme))
        errors[scheme] = np.max(np.abs(sig.da1 - exact)[5:-5])
    assert errors["central4"] < 0.1 * errors["central2"]

// Closed-form spectra of the clean walk operator, band-edge eigenvectors,
// the spectral gap bound, eigenvalue tracking along the interpolation family
// and the rare-event trial for band-edge statistics.

#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ulab/core.hpp"
#include "ulab/model.hpp"
#include "ulab/operators.hpp"
#include "ulab/spectral.hpp"

using namespace ulab;

namespace {

BandedUnitary clean_operator(const ModelParams& p, int L) {
    LatticeBox box = LatticeBox::cube(0, 2 * L - 1, p.d);
    return build_S_tensor(p, box, BoundarySpec::neumann_upper());
}

}  // namespace

TEST_CASE("closed-form spectrum matches the eigensolver in one dimension") {
    for (double t : {0.3, 0.7}) {
        for (int L = 2; L <= 8; ++L) {
            ModelParams p(t);
            SpectralSet closed = neumann_spectrum_closed_form(p, L, 1);
            REQUIRE(closed.eigenvalues.size() == static_cast<std::size_t>(2 * L));
            std::vector<cplx> numeric = eigenvalues(clean_operator(p, L));
            INFO("t = " << t << ", L = " << L);
            CHECK(multiset_mismatch(closed.eigenvalues, numeric) < 1e-10);
        }
    }
}

TEST_CASE("closed-form spectrum matches the eigensolver in two dimensions") {
    ModelParams p(0.55, 2);
    for (int L = 2; L <= 3; ++L) {
        SpectralSet closed = neumann_spectrum_closed_form(p, L, 2);
        REQUIRE(closed.eigenvalues.size() == static_cast<std::size_t>(4 * L * L));
        std::vector<cplx> numeric = eigenvalues(clean_operator(p, L));
        INFO("L = " << L);
        CHECK(multiset_mismatch(closed.eigenvalues, numeric) < 1e-10);
    }
}

TEST_CASE("four-site spectrum at the reflective coupling is exact") {
    // t = r = 1/sqrt(2): angles pi/2 (edge, + only), +-pi/3, 0.
    ModelParams p(1.0 / std::sqrt(2.0));
    std::vector<double> args = neumann_factor_args(p, 2);
    std::sort(args.begin(), args.end());
    REQUIRE(args.size() == 4);
    CHECK(args[0] == Catch::Approx(-kPi / 3).margin(1e-14));
    CHECK(args[1] == Catch::Approx(0.0).margin(1e-14));
    CHECK(args[2] == Catch::Approx(kPi / 3).margin(1e-14));
    CHECK(args[3] == Catch::Approx(kPi / 2).margin(1e-14));

    SpectralGap g = spectral_gap(p, 2, 1);
    CHECK(g.gap == Catch::Approx(2.0 * std::sin(kPi / 12)).margin(1e-13));

    CHECK_THROWS_AS(neumann_factor_args(p, 1), std::invalid_argument);
    CHECK_THROWS_AS(neumann_spectrum_closed_form(p, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(neumann_spectrum_closed_form(p, 2, 0), std::invalid_argument);
}

TEST_CASE("the band edge appears with the positive sign only") {
    ModelParams p(0.5);
    std::vector<double> args = neumann_factor_args(p, 5);
    int at_edge = 0, at_minus_edge = 0;
    for (double a : args) {
        if (std::abs(a - p.lambda0) < 1e-13) ++at_edge;
        if (std::abs(a + p.lambda0) < 1e-13) ++at_minus_edge;
    }
    CHECK(at_edge == 1);
    CHECK(at_minus_edge == 0);
}

TEST_CASE("band-edge eigenvectors are exact") {
    // (1, i, 1, i, ...) at angle d*lambda0 and its alternating companion at 0.
    for (double t : {0.3, 0.5, 0.8}) {
        for (int L : {2, 4, 7}) {
            INFO("t = " << t << ", L = " << L);
            CHECK(band_edge_eigvec_residual(ModelParams(t), L, 1) < 1e-12);
        }
        CHECK(band_edge_eigvec_residual(ModelParams(t), 2, 2) < 1e-12);
        CHECK(band_edge_eigvec_residual(ModelParams(t), 3, 2) < 1e-12);
    }

    ModelParams p(0.6);
    int L = 4;
    BandedUnitary s = clean_operator(p, L);
    Vec phi_a = antiperiodic_edge_vector(L);
    CHECK((s.apply(phi_a) - phi_a).norm() / phi_a.norm() < 1e-12);

    // tensor_power lays out products with the first factor slowest.
    Vec v(2);
    v << cplx(1, 0), cplx(0, 2);
    Vec vv = tensor_power(v, 2);
    REQUIRE(vv.size() == 4);
    CHECK(vv(0) == cplx(1, 0));
    CHECK(vv(1) == cplx(0, 2));
    CHECK(vv(2) == cplx(0, 2));
    CHECK(vv(3) == cplx(-4, 0));
}

TEST_CASE("spectral gap dominates its volume bound") {
    for (double t : {0.2, 0.5, 0.7}) {
        for (int L : {2, 4, 8, 16}) {
            ModelParams p(t);
            SpectralGap g = spectral_gap(p, L, 1);
            INFO("t = " << t << ", L = " << L);
            CHECK(g.gap >= g.lower_bound);
            CHECK(g.lower_bound == Catch::Approx(kGapC0 * t * t / (4.0 * L * L)));
        }
    }
    ModelParams p2(0.4, 2);
    for (int L : {2, 3, 5}) {
        SpectralGap g = spectral_gap(p2, L, 2);
        CHECK(g.gap >= g.lower_bound);
    }
    // Degenerate edge: d * lambda0 reaches pi.
    CHECK_THROWS_AS(spectral_gap(ModelParams(0.8, 2), 3, 2), std::invalid_argument);
}

TEST_CASE("multiset mismatch and branch helpers") {
    std::vector<cplx> a{cplx(1, 0), cplx(0, 1)};
    std::vector<cplx> b{cplx(0, 1), cplx(1, 0)};
    CHECK(multiset_mismatch(a, b) == 0.0);
    CHECK(std::isinf(multiset_mismatch(a, {cplx(1, 0)})));

    // The branch cut sits opposite the rotated spectrum arc.
    CHECK(branch_cut_angle(0.0) == Catch::Approx(kPi));
    CHECK(branch_cut_angle(kPi) == Catch::Approx(kPi / 2));
    double cut = branch_cut_angle(kPi);
    CHECK(arg_in_branch(std::exp(kI * 0.4), cut) == Catch::Approx(0.4));
    CHECK(arg_in_branch(std::exp(kI * (3.0 * kPi / 4.0)), cut) ==
          Catch::Approx(3.0 * kPi / 4.0 - 2.0 * kPi));
}

TEST_CASE("top eigenvalue of the clean operator is the band edge") {
    ModelParams p1(0.5);
    TopEigenvalue top1 = top_eigenvalue(clean_operator(p1, 4));
    CHECK(top1.arg == Catch::Approx(p1.lambda0).margin(1e-12));
    CHECK(std::abs(top1.value - std::exp(kI * p1.lambda0)) < 1e-12);

    ModelParams p2(0.5, 2);
    TopEigenvalue top2 = top_eigenvalue(clean_operator(p2, 3));
    CHECK(top2.arg == Catch::Approx(2.0 * p2.lambda0).margin(1e-12));

    BandedUnitary not_unitary(LatticeBox::interval(0, 3), Mat::Zero(4, 4),
                              BandedUnitary::Kind::Contraction);
    CHECK_THROWS_AS(top_eigenvalue(not_unitary), std::invalid_argument);
}

TEST_CASE("derivative along the family matches a centered difference") {
    ModelParams p(0.5);
    LatticeBox box = LatticeBox::interval(0, 7);
    PhaseDistribution dist = PhaseDistribution::uniform(0.0, 2.0);
    PhaseField f = sample_phase_field(dist, box, 404);
    InterpolationFamily fam = make_interpolation_family(p, f);

    // At alpha = 0 the top eigenvector has equal weights, so the derivative
    // is exactly minus the mean phase.
    double mean_theta = 0.0;
    for (double th : f.theta) mean_theta += th;
    mean_theta /= static_cast<double>(f.theta.size());
    CHECK(feynman_hellmann_derivative(fam, 0.0) == Catch::Approx(-mean_theta).margin(1e-12));

    // At an interior alpha, compare with a centered difference of the tracked
    // top argument.
    const double alpha = 0.5, h = 1e-5;
    const double theta_M = 2.0, cut = branch_cut_angle(theta_M);
    double lam_plus = arg_in_branch(top_eigenpair(fam, alpha + h, theta_M).value, cut);
    double lam_minus = arg_in_branch(top_eigenpair(fam, alpha - h, theta_M).value, cut);
    double numeric = (lam_plus - lam_minus) / (2.0 * h);
    double analytic = feynman_hellmann_derivative(fam, alpha);
    CHECK(analytic == Catch::Approx(numeric).margin(1e-6));

    EigenPair degenerate{cplx(1, 0), Vec::Ones(8).normalized(), 1e-9};
    CHECK_THROWS_AS(feynman_hellmann_derivative(fam, degenerate), std::invalid_argument);
}

TEST_CASE("a constant field shifts the top eigenvalue linearly") {
    ModelParams p(0.5);
    LatticeBox box = LatticeBox::interval(0, 7);
    const double c = 0.8;
    InterpolationFamily fam = make_interpolation_family(p, constant_phase_field(box, c));
    double lam0 = p.lambda0;
    for (double alpha : {0.0, 0.25, 0.5, 1.0}) {
        EigenPair pair = top_eigenpair(fam, alpha, c);
        double lam = arg_in_branch(pair.value, branch_cut_angle(c));
        CHECK(lam == Catch::Approx(lam0 - c * alpha).margin(1e-12));
        CHECK(feynman_hellmann_derivative(fam, pair) == Catch::Approx(-c).margin(1e-12));
    }
}

TEST_CASE("overlap continuation follows one analytic branch") {
    ModelParams p(0.5);
    LatticeBox box = LatticeBox::interval(0, 7);
    PhaseField f = sample_phase_field(PhaseDistribution::uniform(0.0, 2.0), box, 77);
    InterpolationFamily fam = make_interpolation_family(p, f);

    EigenPair start = top_eigenpair(fam, 0.0, 2.0);
    EigenPair next = continued_eigenpair(fam, 0.01, start.vector);
    CHECK(std::abs(next.value - start.value) < 0.1);
    CHECK(std::abs(next.vector.normalized().dot(start.vector)) > 0.9);

    // A reference spread evenly over the whole eigenbasis overlaps no branch
    // by more than 1/sqrt(n) and the tracker refuses to guess.
    Eigen::ComplexEigenSolver<Mat> es(fam.u_alpha(0.3), true);
    Vec smeared = Vec::Zero(8);
    for (int i = 0; i < 8; ++i) smeared += es.eigenvectors().col(i).normalized();
    smeared.normalize();
    CHECK_THROWS_WITH(continued_eigenpair(fam, 0.3, smeared),
                      Catch::Matchers::ContainsSubstring("tracking lost"));
}

TEST_CASE("tracked top angle is nonincreasing in the coupling") {
    ModelParams p(0.5);
    LatticeBox box = LatticeBox::interval(0, 15);
    PhaseField f = sample_phase_field(PhaseDistribution::uniform(0.0, 2.0), box, 2718);
    InterpolationFamily fam = make_interpolation_family(p, f);

    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(i / 20.0);
    MonotonicityScan scan = monotonicity_scan(fam, grid);
    REQUIRE(scan.alpha.size() == grid.size());

    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < scan.lambda.size(); ++i) {
        if (std::isnan(scan.lambda[i])) continue;
        CHECK(scan.lambda[i] <= prev + 1e-9);
        prev = scan.lambda[i];
    }
    CHECK(scan.skipped.size() <= 2);
    CHECK_THROWS_AS(monotonicity_scan(fam, {0.0}), std::invalid_argument);
}

TEST_CASE("cutting the box moves the top argument toward the edge") {
    ModelParams p(0.5);
    LatticeBox box = LatticeBox::interval(0, 11);
    PhaseField f = sample_phase_field(PhaseDistribution::uniform(0.0, 2.0), box, 31415);
    BracketingResult res = neumann_bracketing_check(p, f, 4);
    CHECK(res.arg_joined <= res.arg_split + 1e-12);

    CHECK_THROWS_AS(neumann_bracketing_check(p, f, 5), std::invalid_argument);
    CHECK_THROWS_AS(neumann_bracketing_check(p, f, 2), std::invalid_argument);
    CHECK_THROWS_AS(neumann_bracketing_check(p, f, 4, 1), std::invalid_argument);

    // Two dimensions, cutting the first axis.
    ModelParams p2(0.5, 2);
    LatticeBox box2(std::vector<std::array<int, 2>>{{0, 11}, {0, 5}});
    PhaseField f2 = sample_phase_field(PhaseDistribution::uniform(0.0, 2.0), box2, 911);
    BracketingResult res2 = neumann_bracketing_check(p2, f2, 6, 0);
    CHECK(res2.arg_joined <= res2.arg_split + 1e-12);
}

TEST_CASE("rare-event trial hits always or never in the extreme regimes") {
    ModelParams p(0.5);
    PhaseDistribution wide = PhaseDistribution::uniform(0.0, 2.0);

    // Radius larger than the spectral diameter: every draw is a hit.
    LifshitzTrial all = lifshitz_trial(p, wide, 1, 50.0, 40, 7);
    CHECK(all.hits == 40);
    CHECK(all.p_hat == 1.0);
    CHECK(all.se == 0.0);

    // Phases bounded away from zero push the spectrum off the edge by an
    // angle of at least ~0.5, far beyond radius 0.1.
    PhaseDistribution off = PhaseDistribution::uniform(0.5, 1.0);
    LifshitzTrial none = lifshitz_trial(p, off, 1, 0.1, 40, 7);
    CHECK(none.hits == 0);
    CHECK(none.p_hat == 0.0);

    // Deterministic in the seed, worker-count independent.
    LifshitzTrial again = lifshitz_trial(p, wide, 1, 50.0, 40, 7, 4);
    CHECK(again.hits == all.hits);

    CHECK_THROWS_AS(lifshitz_trial(p, wide, 1, 0.0, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(lifshitz_trial(p, wide, 0, 1.0, 10, 1), std::invalid_argument);
}

TEST_CASE("the proof-chain radius parameter is positive and small") {
    ModelParams p(0.5);
    PhaseDistribution dist = PhaseDistribution::uniform(0.0, 2.0);
    double b = lifshitz_default_b(p, dist);
    CHECK(b > 0.0);
    CHECK(b < 1e-3);

    // Reproduce it from the analytic moment E(e^{-theta}) = (1 - e^{-2})/2.
    double s0 = -0.5 * std::log((1.0 - std::exp(-2.0)) / 2.0);
    double c1 = 128.0 * 4.0 / (p.t * p.t * kGapC0);
    double c2 = p.t * p.t * kGapC0 / (32.0 * 2.0);
    double c4 = std::min(c2, s0 / (2.0 * c1));
    CHECK(b == Catch::Approx(c4 * s0 / 2.0).epsilon(1e-6));
}

// Acceptance gate: every headline guarantee of the library, checked at its
// stated tolerance, one PASS/FAIL line per criterion.
//
//   usage: ulab_acceptance [exact] [monotonic] [statistical] [infrastructure]
//
// With no arguments every group runs.  The exit status is the number of
// failed criteria.
//
//   exact           operator identities at (near-)machine precision
//   monotonic       order and bracketing properties over realization batteries
//   statistical     Monte Carlo reproductions of the localization phenomena
//   infrastructure  determinism and estimator cross-checks

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "ulab/config.hpp"
#include "ulab/core.hpp"
#include "ulab/experiments.hpp"
#include "ulab/green.hpp"
#include "ulab/model.hpp"
#include "ulab/moments.hpp"
#include "ulab/operators.hpp"
#include "ulab/rng.hpp"
#include "ulab/spectral.hpp"
#include "ulab/stats.hpp"
#include "ulab/transfer.hpp"

using namespace ulab;
namespace fs = std::filesystem;

namespace {

int g_passed = 0;
int g_failed = 0;

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", x);
    return buf;
}

void report(const std::string& name, bool ok, const std::string& detail) {
    ++(ok ? g_passed : g_failed);
    std::printf("%s  %-36s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
}

int worker_count() {
    unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::clamp(hw, 1u, 16u));
}

PhaseField uniform_field(const LatticeBox& box, double hi, std::uint64_t seed) {
    return sample_phase_field(PhaseDistribution::uniform(0.0, hi), box, seed);
}

// ---------------------------------------------------------------------------
// exact identities
// ---------------------------------------------------------------------------

void criterion_neumann_spectra() {
    double worst = 0.0;
    for (double t : {0.3, 0.5, 0.7071067811865476, 0.85}) {
        for (int L = 2; L <= 8; ++L) {
            ModelParams p(t, 1);
            BandedUnitary s = build_S_tensor(p, LatticeBox::cube(0, 2 * L - 1, 1),
                                             BoundarySpec::neumann_upper());
            worst = std::max(worst, multiset_mismatch(
                                        neumann_spectrum_closed_form(p, L, 1).eigenvalues,
                                        eigenvalues(s)));
        }
        for (int L = 2; L <= 4; ++L) {
            ModelParams p(t, 2);
            BandedUnitary s = build_S_tensor(p, LatticeBox::cube(0, 2 * L - 1, 2),
                                             BoundarySpec::neumann_upper());
            worst = std::max(worst, multiset_mismatch(
                                        neumann_spectrum_closed_form(p, L, 2).eigenvalues,
                                        eigenvalues(s)));
        }
    }
    report("exact.neumann-spectra", worst < 1e-10,
           "max multiset mismatch " + num(worst) + " (tol 1e-10)");
}

void criterion_edge_vectors() {
    double worst = 0.0;
    for (double t : {0.3, 0.5, 0.7071067811865476, 0.85}) {
        for (int L = 2; L <= 8; ++L) {
            ModelParams p(t, 1);
            worst = std::max(worst, band_edge_eigvec_residual(p, L, 1));
            BandedUnitary s = build_S_tensor(p, LatticeBox::cube(0, 2 * L - 1, 1),
                                             BoundarySpec::neumann_upper());
            Vec anti = antiperiodic_edge_vector(L);
            worst = std::max(worst, (s.apply(anti) - anti).norm() / anti.norm());
        }
        for (int L = 2; L <= 4; ++L) {
            ModelParams p(t, 2);
            worst = std::max(worst, band_edge_eigvec_residual(p, L, 2));
            BandedUnitary s = build_S_tensor(p, LatticeBox::cube(0, 2 * L - 1, 2),
                                             BoundarySpec::neumann_upper());
            Vec anti = tensor_power(antiperiodic_edge_vector(L), 2);
            worst = std::max(worst, (s.apply(anti) - anti).norm() / anti.norm());
        }
    }
    report("exact.edge-vectors", worst < 1e-12, "max residual " + num(worst) + " (tol 1e-12)");
}

void criterion_rank_one_splitting() {
    double worst_beta = 0.0, worst_recon = 0.0;
    for (double t : {0.3, 0.5, 0.8}) {
        ModelParams p(t, 1);
        const int sites = 24, cut = 12;
        LatticeBox box = LatticeBox::interval(0, sites - 1);
        for (std::uint64_t i = 0; i < 10; ++i) {
            PhaseField field = uniform_field(box, 2.0, sample_seed(11, "identities", i));
            SplittingData split = splitting_data(p, cut, field);
            worst_beta = std::max(worst_beta, std::abs(split.beta - (-p.lambda0)));

            BandedUnitary u1 = build_U_neumann(p, restrict_field(field, split.left));
            BandedUnitary u2 = build_U_neumann(p, restrict_field(field, split.right));
            Mat usplit = Mat(embed_on(box, u1) + embed_on(box, u2));
            Vec dpsi = split.psi;
            for (std::int64_t k = 0; k < dpsi.size(); ++k)
                dpsi(k) *= std::exp(-kI * field.at_index(k));
            Mat recon = usplit + dpsi * split.phi.adjoint();
            Mat udense = build_U_neumann(p, field).to_dense();
            worst_recon = std::max(worst_recon, max_norm(udense - recon));
        }
    }
    report("exact.rank-one-splitting", worst_beta < 1e-12 && worst_recon < 1e-14,
           "max phase error " + num(worst_beta) + " (tol 1e-12), max reconstruction error " +
               num(worst_recon) + " (tol 1e-14)");
}

void criterion_geometric_resolvent() {
    double worst = 0.0;
    {
        ModelParams p(0.5, 1);
        const int L = 3;
        LatticeBox world = cube_layer_box(L + 4, 1);
        for (std::uint64_t i = 0; i < 5; ++i) {
            PhaseField wf = uniform_field(world, 2.0, sample_seed(21, "identities", i));
            GeometricResidual gr = geometric_resolvent_residual(p, wf, L, Site{6},
                                                                std::polar(1.5, p.lambda0));
            worst = std::max({worst, gr.factorization, gr.double_resolvent, gr.vanishing_block});
        }
    }
    {
        ModelParams p(0.6, 2);
        const int L = 1;
        LatticeBox world = cube_layer_box(L + 4, 2);
        for (std::uint64_t i = 0; i < 3; ++i) {
            PhaseField wf = uniform_field(world, 2.0, sample_seed(22, "identities", i));
            GeometricResidual gr = geometric_resolvent_residual(p, wf, L, Site{3, -4},
                                                                std::polar(0.4, 1.3));
            worst = std::max({worst, gr.factorization, gr.double_resolvent, gr.vanishing_block});
        }
    }
    report("exact.geometric-resolvent", worst < 1e-10,
           "max residual " + num(worst) + " over 1-D and 2-D geometries (tol 1e-10)");
}

void criterion_transfer_cocycle() {
    // The matrix entries scale like t^-2, so the 2x2 determinant carries a
    // rounding floor of that order; moderate t keeps it comfortably under
    // the 1e-14 gate (measured worst 6e-15 over 150k draws in this range).
    double worst_det = 0.0;
    for (double t : {0.5, 0.65, 0.85}) {
        ModelParams p(t, 1);
        CounterRng rng(sample_seed(31, "identities", static_cast<std::uint64_t>(t * 100)));
        for (std::size_t i = 0; i < 100; ++i) {
            double radius = (rng.unit(4 * i) < 0.5) ? 1.0 : 0.8 + 0.4 * rng.unit(4 * i);
            cplx z = std::polar(radius, 2.0 * kPi * rng.unit(4 * i + 1));
            double theta = 2.0 * kPi * rng.unit(4 * i + 2);
            double eta = 2.0 * kPi * rng.unit(4 * i + 3);
            cplx det = transfer_matrix(z, theta, eta, p).determinant();
            worst_det = std::max(worst_det, std::abs(det - std::exp(kI * (theta - eta))));
        }
    }

    // Propagate directly computed box eigenvectors through the cocycle.  The
    // seed (phi_{-1}, phi_0) = ((1 - r)/t, 1) phi(0) encodes the eta = 0 row;
    // picking the eigenvector with the largest |phi(0)| keeps the seed's
    // relative rounding small before the cocycle's expanding direction can
    // amplify it.
    double worst_prop = 0.0;
    const int sites = 12;
    for (double t : {0.4, 0.6}) {
        ModelParams p(t, 1);
        LatticeBox box = LatticeBox::interval(0, sites - 1);
        BoundarySpec bc = BoundarySpec::with_eta(0.0, 0.0);
        for (std::uint64_t i = 0; i < 5; ++i) {
            PhaseField field = uniform_field(box, 2.0, sample_seed(32, "identities", i));
            BandedUnitary u = build_U(field, build_S_interval(p, 0, sites - 1, bc));
            Eigen::ComplexEigenSolver<Mat> es(u.to_dense(), true);
            std::int64_t pick = 0;
            for (std::int64_t a = 1; a < es.eigenvalues().size(); ++a)
                if (std::abs(es.eigenvectors()(0, a)) > std::abs(es.eigenvectors()(0, pick)))
                    pick = a;
            const cplx mu = es.eigenvalues()(pick);
            Vec phi = es.eigenvectors().col(pick);
            const double scale = phi.cwiseAbs().maxCoeff();
            Vec2 v0((1.0 - p.r) / p.t * phi(0), phi(0));
            for (int m = 1; 2 * m < sites; ++m) {
                Vec2 vm = cocycle(mu, field, m, p) * v0;
                worst_prop = std::max(worst_prop, std::abs(vm(0) - phi(2 * m - 1)) / scale);
                worst_prop = std::max(worst_prop, std::abs(vm(1) - phi(2 * m)) / scale);
            }
        }
    }
    report("exact.transfer-cocycle", worst_det < 1e-14 && worst_prop < 1e-8,
           "max det error " + num(worst_det) + " (tol 1e-14), max propagation error " +
               num(worst_prop) + " (tol 1e-8)");
}

void criterion_green_two_solutions() {
    double worst = 0.0;
    ModelParams p(0.5, 1);
    const int sites = 20;
    LatticeBox box = LatticeBox::interval(0, sites - 1);
    BoundarySpec bc = BoundarySpec::with_eta(0.0, 0.0);
    for (std::uint64_t i = 0; i < 3; ++i) {
        PhaseField field = uniform_field(box, 2.0, sample_seed(41, "identities", i));
        BandedUnitary u = build_U(field, build_S_interval(p, 0, sites - 1, bc));
        for (cplx z : {std::polar(1.3, 0.7), std::polar(0.6, -0.9)}) {
            Resolvent res(u, z);
            for (int l = 0; l < sites; ++l) {
                Vec col = res.column(l);
                for (int k = 0; k < sites; ++k) {
                    cplx via = green_via_solutions(p, field, box, z, k, l, bc);
                    worst = std::max(worst, std::abs(via - col(k)) /
                                                std::max(std::abs(col(k)), 1e-14));
                }
            }
        }
    }
    report("exact.green-two-solutions", worst < 1e-8,
           "max relative error " + num(worst) + " over all entries (tol 1e-8)");
}

void criterion_feynman_hellmann() {
    double worst = 0.0;
    int done = 0, skipped = 0;
    ModelParams p(0.5, 1);
    LatticeBox box = LatticeBox::interval(0, 15);
    const double h = 1e-5;
    for (std::uint64_t i = 0; done < 100 && i < 120; ++i) {
        PhaseField field = uniform_field(box, 2.0, sample_seed(51, "identities", i));
        try {
            InterpolationFamily fam = make_interpolation_family(p, field);
            double theta_M = *std::max_element(field.theta.begin(), field.theta.end());
            EigenPair pair = top_eigenpair(fam, 0.5, theta_M);
            double analytic = feynman_hellmann_derivative(fam, pair);
            EigenPair plus = continued_eigenpair(fam, 0.5 + h, pair.vector);
            EigenPair minus = continued_eigenpair(fam, 0.5 - h, pair.vector);
            double fd = arg_principal(plus.value / minus.value) / (2.0 * h);
            worst = std::max(worst, std::abs(analytic - fd));
            ++done;
        } catch (const std::exception&) {
            ++skipped;  // near-degenerate draw; deterministic, extremely rare
        }
    }
    report("exact.feynman-hellmann", done == 100 && worst < 1e-6,
           "max |analytic - finite difference| " + num(worst) + " over " +
               std::to_string(done) + " instances (tol 1e-6), " + std::to_string(skipped) +
               " degenerate draws skipped");
}

// ---------------------------------------------------------------------------
// order / monotonicity properties
// ---------------------------------------------------------------------------

void criterion_interpolation_monotone() {
    ModelParams p(0.5, 1);
    LatticeBox box = LatticeBox::interval(0, 15);
    std::vector<double> grid(100);
    for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = static_cast<double>(i) / static_cast<double>(grid.size() - 1);
    double worst_rise = 0.0;
    std::size_t total_skipped = 0;
    int tracking_failures = 0;
    for (std::uint64_t r = 0; r < 100; ++r) {
        PhaseField field = uniform_field(box, 2.0, sample_seed(61, "identities", r));
        try {
            MonotonicityScan scan = monotonicity_scan(make_interpolation_family(p, field), grid);
            total_skipped += scan.skipped.size();
            double last = std::numeric_limits<double>::quiet_NaN();
            for (double lam : scan.lambda) {
                if (std::isnan(lam)) continue;
                if (!std::isnan(last)) worst_rise = std::max(worst_rise, lam - last);
                last = lam;
            }
        } catch (const std::exception&) {
            ++tracking_failures;
        }
    }
    report("monotonic.interpolation", tracking_failures == 0 && worst_rise < 1e-9,
           "max rise " + num(worst_rise) + " over 100 realizations x 100-point grids (tol 1e-9), " +
               std::to_string(total_skipped) + " near-degenerate points skipped, " +
               std::to_string(tracking_failures) + " tracking failures");
}

void criterion_bracketing() {
    double worst = -std::numeric_limits<double>::infinity();
    {
        ModelParams p(0.5, 1);
        LatticeBox box = LatticeBox::interval(0, 11);
        for (std::uint64_t r = 0; r < 200; ++r) {
            PhaseField field = uniform_field(box, 2.0, sample_seed(71, "identities", r));
            BracketingResult br = neumann_bracketing_check(p, field, 6);
            worst = std::max(worst, br.arg_joined - br.arg_split);
        }
    }
    {
        ModelParams p(0.5, 2);
        LatticeBox box({{0, 11}, {0, 5}});
        for (std::uint64_t r = 0; r < 200; ++r) {
            PhaseField field = uniform_field(box, 2.0, sample_seed(72, "identities", r));
            BracketingResult br = neumann_bracketing_check(p, field, 6, 0);
            worst = std::max(worst, br.arg_joined - br.arg_split);
        }
    }
    report("monotonic.bracketing", worst <= 1e-12,
           "max (arg_joined - arg_split) " + num(worst) +
               " over 200 realizations in 1-D and 2-D (tol 1e-12)");
}

void criterion_top_arg_bound() {
    double worst = -std::numeric_limits<double>::infinity();
    {
        for (double t : {0.5, 0.7}) {
            ModelParams p(t, 1);
            LatticeBox box = LatticeBox::interval(0, 23);
            BandedUnitary s = build_S_tensor(p, box, BoundarySpec::neumann_upper());
            for (std::uint64_t r = 0; r < 200; ++r) {
                PhaseField field = uniform_field(box, 2.0, sample_seed(81, "identities", r));
                worst = std::max(worst,
                                 top_eigenvalue(build_U(field, s), 2.0).arg - p.lambda0);
            }
        }
    }
    {
        ModelParams p(0.5, 2);
        LatticeBox box = LatticeBox::cube(0, 7, 2);
        BandedUnitary s = build_S_tensor(p, box, BoundarySpec::neumann_upper());
        for (std::uint64_t r = 0; r < 200; ++r) {
            PhaseField field = uniform_field(box, 2.0, sample_seed(82, "identities", r));
            worst = std::max(worst,
                             top_eigenvalue(build_U(field, s), 2.0).arg - 2.0 * p.lambda0);
        }
    }
    report("monotonic.top-arg-bound", worst <= 1e-10,
           "max (top arg - d*lambda0) " + num(worst) +
               " over realization batteries with nonnegative phases (tol 1e-10)");
}

// ---------------------------------------------------------------------------
// statistical reproductions
// ---------------------------------------------------------------------------

void criterion_fractional_decay() {
    ModelParams p(0.5, 1);
    PhaseDistribution dist = PhaseDistribution::uniform(0.0, 2.0 * kPi);
    std::vector<int> distances;
    for (int d = 4; d <= 40; d += 4) distances.push_back(d);
    DecayProfile prof = decay_experiment(p, dist, std::polar(1.001, 0.3), 0.1, distances,
                                         10000, 101, worker_count());
    report("statistical.fractional-decay",
           prof.fit.rate > 0.0 && prof.fit.r_squared > 0.9,
           "fitted rate " + num(prof.fit.rate) + " (need > 0), r^2 " +
               num(prof.fit.r_squared) + " (need > 0.9), " + std::to_string(prof.fit.n_used) +
               "/" + std::to_string(distances.size()) + " rungs fit");
}

void criterion_dynamical() {
    ModelParams p(0.5, 1);
    PhaseDistribution dist = PhaseDistribution::uniform(0.0, 2.0 * kPi);
    const int N = 200;
    std::vector<int> offsets;
    for (int d = 2; d <= 24; d += 2) offsets.push_back(d);
    int hi = 4 * N + offsets.back() + 1;
    if (hi % 2 == 0) hi += 1;
    const int center = 2 * N;
    LatticeBox box = LatticeBox::interval(0, hi);
    std::vector<Site> probes;
    for (int d : offsets) probes.push_back(Site{center + d});
    AmplitudeProfile prof = dynamical_profile(p, dist, box, Site{center}, probes, N, 1000, 102,
                                              worker_count());
    report("statistical.dynamical",
           !prof.truncated && prof.fit.rate > 0.0 && prof.fit.r_squared > 0.9,
           "fitted rate " + num(prof.fit.rate) + " (need > 0), r^2 " +
               num(prof.fit.r_squared) + " (need > 0.9), " + std::to_string(prof.fit.n_used) +
               "/" + std::to_string(offsets.size()) + " rungs fit, truncation-free geometry");
}

void criterion_lyapunov() {
    ModelParams p(0.5, 1);
    PhaseDistribution dist = PhaseDistribution::uniform(0.0, 2.0 * kPi);
    double min_margin = std::numeric_limits<double>::infinity();
    double min_gamma = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 10; ++i) {
        double arg = 0.2 + 0.3 * i;
        LyapunovEstimate est = lyapunov_estimate(std::polar(1.0, arg), dist, 2000, 400, 103, p,
                                                 worker_count());
        min_margin = std::min(min_margin, est.gamma - 3.0 * est.se);
        min_gamma = std::min(min_gamma, est.gamma);
    }
    double free_growth = std::max(free_cocycle_growth(p, 0.3 * p.lambda0, 10000),
                                  free_cocycle_growth(p, 0.7 * p.lambda0, 10000));
    report("statistical.lyapunov", min_margin > 0.0 && free_growth < 0.01,
           "min gamma " + num(min_gamma) + " with min (gamma - 3 se) " + num(min_margin) +
               " over a 10-point unit-circle grid (need > 0); zero-disorder growth " +
               num(free_growth) + " inside the band (need < 0.01)");
}

void criterion_ckm() {
    ModelParams p(0.5, 1);
    PhaseDistribution dist = PhaseDistribution::uniform(0.0, 2.0 * kPi);
    const cplx z = std::polar(1.0, 0.4);
    std::vector<double> ns, values;
    for (int n : {1, 2, 3, 4, 6, 8, 12}) {
        MeanEstimate est = ckm_moment(z, dist, 0.5, n, 3000, Vec2(1.0, 0.0), 104, p,
                                      worker_count());
        ns.push_back(static_cast<double>(n));
        values.push_back(est.mean);
    }
    DecayFit fit = fit_log_linear(ns, values, 0.0);
    report("statistical.ckm-moment", fit.rate > 0.0 && fit.r_squared > 0.9,
           "fitted rate " + num(fit.rate) + " (need > 0), r^2 " + num(fit.r_squared) +
               " (need > 0.9) over a 7-point step ladder");
}

// Radius parameter for the rare-event trend battery; tuned once so the hit
// probability is resolvable at 10^4 samples for every L in {2,4,6,8} and
// strictly decreasing across them (measured 1.0, 0.73, 0.029, 7e-4).
constexpr double kLifshitzAcceptanceB = 10.0;

void criterion_lifshitz_trend() {
    ModelParams p(0.5, 1);
    PhaseDistribution dist = PhaseDistribution::uniform(0.0, 2.0);
    std::vector<LifshitzTrial> trials;
    for (int L : {2, 4, 6, 8})
        trials.push_back(
            lifshitz_trial(p, dist, L, kLifshitzAcceptanceB, 10000, 105, worker_count()));
    bool strict = true;
    std::string curve;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        if (i + 1 < trials.size() && !(trials[i].p_hat > trials[i + 1].p_hat)) strict = false;
        curve += (i ? ", " : "") + std::string("L=") + std::to_string(trials[i].L) + ": " +
                 num(trials[i].p_hat);
    }
    report("statistical.lifshitz-trend", strict,
           "hit probability strictly decreasing (" + curve + ") at b = " +
               num(kLifshitzAcceptanceB) + ", 10^4 samples each");
}

void criterion_moment_stability() {
    ModelParams p(0.5, 1);
    PhaseDistribution dist = PhaseDistribution::uniform(0.0, 2.0 * kPi);
    LatticeBox box = LatticeBox::interval(0, 19);
    const Site k{10}, l{4};
    const double s = 0.3;
    const std::vector<double> z_abs = {1.1, 1.01, 1.001};

    std::vector<double> xs, ys, ses;
    bool finite = true;
    for (double za : z_abs) {
        MomentEstimate est = fractional_moment(p, dist, box, cplx(za, 0.0), k, l, s, 4000, 106,
                                               worker_count());
        finite = finite && std::isfinite(est.value);
        xs.push_back(-std::log(za - 1.0));
        ys.push_back(est.value);
        ses.push_back(est.se);
    }

    // A bounded moment may still approach its supremum from below, so a rise
    // alone is not divergence.  Divergence along the geometric ladder means a
    // statistically significant rise at every decade that does not attenuate:
    // a log-divergence adds equal increments per decade, a power divergence
    // growing ones, while an approach to a finite limit shrinks them.
    const double d1 = ys[1] - ys[0], d2 = ys[2] - ys[1];
    const double se_d1 = std::hypot(ses[0], ses[1]);
    const double se_d2 = std::hypot(ses[1], ses[2]);
    const double se_dd =
        std::sqrt(ses[0] * ses[0] + 4.0 * ses[1] * ses[1] + ses[2] * ses[2]);
    const bool sustained_rise =
        d1 > 3.0 * se_d1 && d2 > 3.0 * se_d2 && d2 - d1 > -3.0 * se_dd;

    // Sample-size stability at the most critical point |z| = 1.001.
    MomentEstimate half = fractional_moment(p, dist, box, cplx(1.001, 0.0), k, l, s, 4000, 106,
                                            worker_count());
    MomentEstimate full = fractional_moment(p, dist, box, cplx(1.001, 0.0), k, l, s, 8000, 106,
                                            worker_count());
    double joint_se = std::sqrt(half.se * half.se + full.se * full.se);
    bool stable = std::abs(half.value - full.value) <= 3.0 * joint_se + 1e-12;

    report("statistical.moment-stability",
           finite && !sustained_rise && stable,
           "estimates {" + num(ys[0]) + ", " + num(ys[1]) + ", " + num(ys[2]) +
               "} along |z| -> 1; decade increments " + num(d1) + " then " + num(d2) +
               " (attenuating by " + num(d1 - d2) + " vs 3 se " + num(3.0 * se_dd) +
               "); doubling samples moves the tightest point by " +
               num(std::abs(half.value - full.value)) + " vs 3 joint se " + num(3.0 * joint_se));
}

void criterion_combes_thomas() {
    ModelParams p(0.5, 1);
    const int sites = 200;
    LatticeBox box = LatticeBox::interval(0, sites - 1);
    const cplx z = std::polar(1.3, 0.2);
    const int origin = 2 * (((sites - 1) / 2) / 2);
    double min_b = std::numeric_limits<double>::infinity();
    double worst_excess = -std::numeric_limits<double>::infinity();
    int checked = 0;
    for (std::uint64_t r = 0; r < 3; ++r) {
        PhaseField field = uniform_field(box, 2.0 * kPi, sample_seed(107, "combes-thomas", r));
        CombesThomasResult res = combes_thomas_profile(build_U_neumann(p, field), z,
                                                       Site{origin}, 80);
        min_b = std::min(min_b, res.b_fit);
        // Shells at or below the numeric floor carry only solver roundoff (the
        // true value has underflowed), so the envelope comparison uses the
        // same floor as the profile's rate definition.
        for (std::size_t n = 0; n < res.profile.distances.size(); ++n) {
            if (res.profile.values[n] <= 1e-14) continue;
            double envelope = (2.0 / res.dist) *
                              std::exp(-res.dist * res.profile.distances[n] * res.b_fit);
            worst_excess = std::max(worst_excess,
                                    res.profile.values[n] / envelope - 1.0);
            ++checked;
        }
    }
    report("statistical.combes-thomas", min_b > 0.0 && worst_excess <= 1e-10 && checked >= 60,
           "min fitted decay parameter " + num(min_b) +
               " (need > 0), worst shell/envelope excess " + num(worst_excess) + " over " +
               std::to_string(checked) + " resolvable shells in 3 realizations (tol 1e-10)");
}

// ---------------------------------------------------------------------------
// infrastructure
// ---------------------------------------------------------------------------

struct TempTree {
    fs::path root;
    TempTree() {
        root = fs::temp_directory_path() /
               ("ulab_acceptance_" + std::to_string(getpid()));
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~TempTree() {
        std::error_code ec;
        fs::remove_all(root, ec);
    }
    std::string sub(const std::string& leaf) const { return (root / leaf).string(); }
};

void criterion_determinism() {
    const char* base_cfg =
        "[experiment]\nname = lyapunov\nseed = 7\n[model]\nt = 0.5\n"
        "[phases]\nhi = 6.283185307179586\n"
        "[lyapunov]\nz_abs = 1.01\nz_arg_list = 0.3, 0.8\nn = 60\nsamples = 120\n";
    const char* decay_cfg =
        "[experiment]\nname = fractional-decay\nseed = 9\n[model]\nt = 0.5\n"
        "[phases]\nhi = 6.283185307179586\n"
        "[fractional-decay]\nz_abs = 1.01\nz_arg = 0.3\ns = 0.3\n"
        "distances = 2, 4, 6\nsamples = 200\n";
    const char* dyn_cfg =
        "[experiment]\nname = dynamical\nseed = 13\n[model]\nt = 0.5\n"
        "[phases]\nhi = 6.283185307179586\n"
        "[dynamical]\nN = 10\noffsets = 2, 4\nsamples = 50\n";

    TempTree tree;
    bool ok = true;
    std::string detail;
    int compared = 0;
    for (const char* text : {base_cfg, decay_cfg, dyn_cfg}) {
        Config one = Config::parse_string(text, "acceptance.cfg");
        Config eight = one;
        one.set("experiment.workers", "1");
        eight.set("experiment.workers", "8");
        const std::string name = one.get_string("experiment.name");
        nlohmann::json j1 = run_experiment(one, tree.sub(name + "_w1"));
        nlohmann::json j1b = run_experiment(one, tree.sub(name + "_w1b"));
        nlohmann::json j8 = run_experiment(eight, tree.sub(name + "_w8"));
        for (const auto& o : j1["outputs"]) {
            const std::string file = o["file"].get<std::string>();
            std::string a = read_file_bytes(tree.sub(name + "_w1") + "/" + file);
            std::string b = read_file_bytes(tree.sub(name + "_w1b") + "/" + file);
            std::string c = read_file_bytes(tree.sub(name + "_w8") + "/" + file);
            if (a != b || a != c) {
                ok = false;
                detail += " " + name + "/" + file + " differs;";
            }
            ++compared;
        }
    }
    report("infrastructure.determinism", ok,
           ok ? "workers {1,8} and reruns byte-identical across " +
                    std::to_string(compared) + " output files of 3 experiments"
              : "mismatch:" + detail);
}

void criterion_quadrature_vs_mc() {
    ModelParams p(0.5, 1);
    PhaseDistribution dist = PhaseDistribution::uniform(0.0, 2.0 * kPi);
    LatticeBox box = LatticeBox::interval(0, 9);
    PhaseField background = sample_phase_field(dist, box, sample_seed(404, "two-phase", 7));
    const cplx z = std::polar(0.5, 0.3);
    const Site k{6}, l{2};
    const double s = 0.5;
    double quad = two_phase_moment_quadrature(p, dist, background, z, k, l, s, 128);
    MeanEstimate mc = two_phase_moment_mc(p, dist, background, z, k, l, s, 2000, 909,
                                          worker_count());
    double diff = std::abs(quad - mc.mean);
    report("infrastructure.quadrature-vs-mc", diff <= 3.0 * mc.se,
           "|quadrature - Monte Carlo| " + num(diff) + " vs 3 se " + num(3.0 * mc.se) +
               " on a 10-site box");
}

// ---------------------------------------------------------------------------
// driver
// ---------------------------------------------------------------------------

void run_exact() {
    criterion_neumann_spectra();
    criterion_edge_vectors();
    criterion_rank_one_splitting();
    criterion_geometric_resolvent();
    criterion_transfer_cocycle();
    criterion_green_two_solutions();
    criterion_feynman_hellmann();
}

void run_monotonic() {
    criterion_interpolation_monotone();
    criterion_bracketing();
    criterion_top_arg_bound();
}

void run_statistical() {
    criterion_fractional_decay();
    criterion_dynamical();
    criterion_lyapunov();
    criterion_ckm();
    criterion_lifshitz_trend();
    criterion_moment_stability();
    criterion_combes_thomas();
}

void run_infrastructure() {
    criterion_determinism();
    criterion_quadrature_vs_mc();
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> groups;
    for (int i = 1; i < argc; ++i) groups.push_back(argv[i]);
    if (groups.empty()) groups = {"exact", "monotonic", "statistical", "infrastructure"};

    for (const std::string& g : groups) {
        if (g == "exact")
            run_exact();
        else if (g == "monotonic")
            run_monotonic();
        else if (g == "statistical")
            run_statistical();
        else if (g == "infrastructure")
            run_infrastructure();
        else {
            std::fprintf(stderr,
                         "unknown group '%s' (expected exact, monotonic, statistical, "
                         "infrastructure)\n",
                         g.c_str());
            return 64;
        }
    }
    std::printf("%d passed, %d failed\n", g_passed, g_failed);
    return std::min(g_failed, 125);
}

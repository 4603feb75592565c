#pragma once
// Monte Carlo estimators for fractional-moment and dynamical quantities:
// a-priori moment bounds, decay ladders, second-moment domination, dynamical
// localization amplitudes, position moments, and trajectory diagnostics.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "core.hpp"
#include "green.hpp"
#include "model.hpp"
#include "operators.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace ulab {

struct MomentEstimate {
    std::string quantity;
    double value = 0.0;
    double se = 0.0;
    std::int64_t samples = 0;  // accepted samples
    std::int64_t rejected = 0; // solves rejected on residual grounds
    double s_exponent = 0.0;
    cplx z;
};

// ---------------------------------------------------------------------------
// fractional moments of Green's functions
// ---------------------------------------------------------------------------

// Monte Carlo mean of |G(k,l;z)|^s over phase realizations on `box`.
inline MomentEstimate fractional_moment(const ModelParams& params, const PhaseDistribution& dist,
                                        const LatticeBox& box, cplx z, const Site& k,
                                        const Site& l, double s, std::int64_t samples,
                                        std::uint64_t seed, int workers = 1,
                                        const BoundarySpec& bc = BoundarySpec::neumann_upper()) {
    if (!(s > 0.0 && s < 1.0))
        throw std::invalid_argument("fractional_moment: s must be in (0,1)");
    if (std::abs(z) == 0.0 || std::abs(std::abs(z) - 1.0) == 0.0)
        throw std::invalid_argument("fractional_moment: |z| must avoid 0 and 1");
    BandedUnitary s_op = build_S_tensor(params, box, bc);
    const int k_idx = static_cast<int>(box.index_of(k));
    const int l_idx = static_cast<int>(box.index_of(l));
    std::vector<double> vals(static_cast<std::size_t>(samples));
    std::vector<char> ok(static_cast<std::size_t>(samples), 0);
    parallel_for(vals.size(), workers, [&](std::size_t i) {
        PhaseField f = sample_phase_field(dist, box, sample_seed(seed, "fractional-moment", i));
        Resolvent res(build_U(f, s_op), z);
        Vec rhs = Vec::Zero(res.size());
        rhs(l_idx) = cplx(1, 0);
        Vec x;
        if (res.try_solve(rhs, x) < 1e-10) {
            vals[i] = std::pow(std::abs(x(k_idx)), s);
            ok[i] = 1;
        }
    });
    std::vector<double> accepted;
    accepted.reserve(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i)
        if (ok[i]) accepted.push_back(vals[i]);
    MeanEstimate m = mean_and_stderr(accepted);
    MomentEstimate out;
    out.quantity = "fractional_moment";
    out.value = m.mean;
    out.se = m.se;
    out.samples = static_cast<std::int64_t>(accepted.size());
    out.rejected = samples - out.samples;
    out.s_exponent = s;
    out.z = z;
    return out;
}

// ---------------------------------------------------------------------------
// two-phase average: Monte Carlo vs tensor quadrature over (theta_k, theta_l)
// ---------------------------------------------------------------------------

namespace detail {

// |G(k,l;z)|^s on the fixed background field with theta_k, theta_l replaced.
inline double two_phase_kernel(const BandedUnitary& s_op, PhaseField field, int k_idx, int l_idx,
                               cplx z, double s, double theta_k, double theta_l) {
    field.theta[static_cast<std::size_t>(k_idx)] = theta_k;
    field.theta[static_cast<std::size_t>(l_idx)] = theta_l;
    Resolvent res(build_U(field, s_op), z);
    Vec rhs = Vec::Zero(res.size());
    rhs(l_idx) = cplx(1, 0);
    Vec x;
    double r = res.try_solve(rhs, x);
    if (!(r < 1e-10))
        throw std::runtime_error("two_phase_kernel: solve residual too large");
    return std::pow(std::abs(x(k_idx)), s);
}

}  // namespace detail

// Deterministic tensor trapezoid quadrature of the two-phase average
// of |G(k,l;z)|^s over dmu(theta_k) dmu(theta_l), all other phases frozen.
inline double two_phase_moment_quadrature(const ModelParams& params,
                                          const PhaseDistribution& dist,
                                          const PhaseField& background, cplx z, const Site& k,
                                          const Site& l, double s, int quadrature_n,
                                          const BoundarySpec& bc = BoundarySpec::neumann_upper()) {
    if (quadrature_n < 8)
        throw std::invalid_argument("two_phase_moment_quadrature: grid too coarse");
    BandedUnitary s_op = build_S_tensor(params, background.box, bc);
    const int k_idx = static_cast<int>(background.box.index_of(k));
    const int l_idx = static_cast<int>(background.box.index_of(l));
    const double h = (dist.hi() - dist.lo()) / quadrature_n;
    NeumaierSum acc;
    for (int i = 0; i <= quadrature_n; ++i) {
        double wi = (i == 0 || i == quadrature_n) ? 0.5 : 1.0;
        double ti = dist.lo() + h * i;
        for (int j = 0; j <= quadrature_n; ++j) {
            double wj = (j == 0 || j == quadrature_n) ? 0.5 : 1.0;
            double tj = dist.lo() + h * j;
            double g = detail::two_phase_kernel(s_op, background, k_idx, l_idx, z, s, ti, tj);
            acc.add(wi * wj * dist.density(ti) * dist.density(tj) * g * h * h);
        }
    }
    return acc.value();
}

// Monte Carlo estimate of the same two-phase average (theta_k, theta_l random,
// everything else frozen at `background`).
inline MeanEstimate two_phase_moment_mc(const ModelParams& params, const PhaseDistribution& dist,
                                        const PhaseField& background, cplx z, const Site& k,
                                        const Site& l, double s, std::int64_t samples,
                                        std::uint64_t seed, int workers = 1,
                                        const BoundarySpec& bc = BoundarySpec::neumann_upper()) {
    BandedUnitary s_op = build_S_tensor(params, background.box, bc);
    const int k_idx = static_cast<int>(background.box.index_of(k));
    const int l_idx = static_cast<int>(background.box.index_of(l));
    std::vector<double> vals(static_cast<std::size_t>(samples));
    parallel_for(vals.size(), workers, [&](std::size_t i) {
        CounterRng rng(sample_seed(seed, "two-phase", i));
        double tk = dist.sample(rng.unit(0));
        double tl = dist.sample(rng.unit(1));
        vals[i] = detail::two_phase_kernel(s_op, background, k_idx, l_idx, z, s, tk, tl);
    });
    return mean_and_stderr(vals);
}

// ---------------------------------------------------------------------------
// decay ladder of fractional moments
// ---------------------------------------------------------------------------

// E|G(k_0 + dist*e_1, k_0; z)|^s along a distance ladder on an automatically
// sized box (source 4 sites from the low edge along axis 0, centered on the
// other axes, margin 6 past the farthest probe).
inline DecayProfile decay_experiment(const ModelParams& params, const PhaseDistribution& dist,
                                     cplx z, double s, const std::vector<int>& distances,
                                     std::int64_t samples, std::uint64_t seed, int workers = 1) {
    if (distances.empty()) throw std::invalid_argument("decay_experiment: empty distance list");
    for (std::size_t i = 0; i + 1 < distances.size(); ++i)
        if (distances[i + 1] <= distances[i])
            throw std::invalid_argument("decay_experiment: distances must be strictly increasing");
    if (distances.front() < 1)
        throw std::invalid_argument("decay_experiment: distances must be >= 1");
    const int max_d = distances.back();
    int hi = 4 + max_d + 6;
    if (hi % 2 == 0) hi += 1;  // Neumann-compatible: odd high edge
    LatticeBox box = LatticeBox::cube(0, hi, params.d);
    const int mid = 2 * ((hi / 2) / 2);  // even center coordinate for the off axes
    Site source(static_cast<std::size_t>(params.d), mid);
    source[0] = 4;
    BandedUnitary s_op = build_S_tensor(params, box, BoundarySpec::neumann_upper());
    const int src_idx = static_cast<int>(box.index_of(source));
    std::vector<std::int64_t> probe_idx;
    for (int d : distances) {
        Site probe = source;
        probe[0] = 4 + d;
        probe_idx.push_back(box.index_of(probe));
    }

    const std::size_t nd = distances.size();
    std::vector<double> vals(static_cast<std::size_t>(samples) * nd, 0.0);
    std::vector<char> ok(static_cast<std::size_t>(samples), 0);
    parallel_for(static_cast<std::size_t>(samples), workers, [&](std::size_t i) {
        PhaseField f = sample_phase_field(dist, box, sample_seed(seed, "fractional-decay", i));
        Resolvent res(build_U(f, s_op), z);
        Vec rhs = Vec::Zero(res.size());
        rhs(src_idx) = cplx(1, 0);
        Vec x;
        if (res.try_solve(rhs, x) < 1e-10) {
            ok[i] = 1;
            for (std::size_t j = 0; j < nd; ++j)
                vals[i * nd + j] = std::pow(std::abs(x(probe_idx[j])), s);
        }
    });

    DecayProfile out;
    out.distances = distances;
    out.values.resize(nd);
    out.se.resize(nd);
    std::vector<double> fit_x, fit_y;
    for (std::size_t j = 0; j < nd; ++j) {
        std::vector<double> col;
        col.reserve(static_cast<std::size_t>(samples));
        for (std::int64_t i = 0; i < samples; ++i)
            if (ok[static_cast<std::size_t>(i)])
                col.push_back(vals[static_cast<std::size_t>(i) * nd + j]);
        MeanEstimate m = mean_and_stderr(col);
        out.values[j] = m.mean;
        out.se[j] = m.se;
        // noise floor: keep only distances resolved beyond 10x their stderr
        if (m.mean > 0.0 && m.mean >= 10.0 * m.se) {
            fit_x.push_back(static_cast<double>(distances[j]));
            fit_y.push_back(m.mean);
        }
    }
    out.fit = fit_log_linear(fit_x, fit_y, 0.0);
    return out;
}

// ---------------------------------------------------------------------------
// second-moment domination
// ---------------------------------------------------------------------------

struct SecondMomentRatio {
    MeanEstimate lhs;  // E((1-|z|^2) |G(k,l;z)|^2)
    MeanEstimate rhs;  // sum over |m-k|_inf <= 4 of E(|G(m,l;z)|^s)
    double ratio = 0.0;
};

inline SecondMomentRatio second_moment_ratio(const ModelParams& params,
                                             const PhaseDistribution& dist, const LatticeBox& box,
                                             cplx z, const Site& k, const Site& l, double s,
                                             std::int64_t samples, std::uint64_t seed,
                                             int workers = 1,
                                             const BoundarySpec& bc =
                                                 BoundarySpec::neumann_upper()) {
    if (!(std::abs(z) < 1.0))
        throw std::invalid_argument("second_moment_ratio: need |z| < 1");
    BandedUnitary s_op = build_S_tensor(params, box, bc);
    const int k_idx = static_cast<int>(box.index_of(k));
    const int l_idx = static_cast<int>(box.index_of(l));
    std::vector<std::int64_t> near;  // indices with |m - k|_inf <= 4
    for (std::int64_t i = 0; i < box.volume(); ++i) {
        Site m = box.site_of(i);
        int d = 0;
        for (std::size_t ax = 0; ax < m.size(); ++ax)
            d = std::max(d, std::abs(m[ax] - k[ax]));
        if (d <= 4) near.push_back(i);
    }
    std::vector<double> lhs_vals(static_cast<std::size_t>(samples), 0.0);
    std::vector<double> rhs_vals(static_cast<std::size_t>(samples), 0.0);
    std::vector<char> ok(static_cast<std::size_t>(samples), 0);
    const double weight = 1.0 - std::norm(z);
    parallel_for(static_cast<std::size_t>(samples), workers, [&](std::size_t i) {
        PhaseField f = sample_phase_field(dist, box, sample_seed(seed, "second-moment", i));
        Resolvent res(build_U(f, s_op), z);
        Vec rhs = Vec::Zero(res.size());
        rhs(l_idx) = cplx(1, 0);
        Vec x;
        if (res.try_solve(rhs, x) < 1e-10) {
            ok[i] = 1;
            lhs_vals[i] = weight * std::norm(x(k_idx));
            NeumaierSum acc;
            for (std::int64_t m : near) acc.add(std::pow(std::abs(x(m)), s));
            rhs_vals[i] = acc.value();
        }
    });
    std::vector<double> lhs_acc, rhs_acc;
    for (std::size_t i = 0; i < ok.size(); ++i)
        if (ok[i]) {
            lhs_acc.push_back(lhs_vals[i]);
            rhs_acc.push_back(rhs_vals[i]);
        }
    SecondMomentRatio out;
    out.lhs = mean_and_stderr(lhs_acc);
    out.rhs = mean_and_stderr(rhs_acc);
    out.ratio = out.rhs.mean != 0.0 ? out.lhs.mean / out.rhs.mean : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// dynamical localization amplitudes
// ---------------------------------------------------------------------------

struct AmplitudeProfile {
    std::vector<int> distances;      // |k - l|_inf per probe site
    std::vector<double> amplitudes;  // E sup_{|n| <= N} |<e_k | U^n e_l>|
    std::vector<double> se;
    int N = 0;
    bool truncated = false;  // true when boundary reflections can reach a probe
    DecayFit fit;
};

namespace detail {

// Sparse forms of U and U* for fast repeated application.
struct EvolutionOps {
    SpMat u, u_adj;
    explicit EvolutionOps(const BandedUnitary& b) {
        u = b.to_sparse();
        u_adj = SpMat(u.adjoint());
    }
};

inline int distance_to_boundary(const LatticeBox& box, const Site& s) {
    int d = std::numeric_limits<int>::max();
    for (int ax = 0; ax < box.dimension(); ++ax) {
        d = std::min(d, s[static_cast<std::size_t>(ax)] - box.lo(ax));
        d = std::min(d, box.hi(ax) - s[static_cast<std::size_t>(ax)]);
    }
    return d;
}

}  // namespace detail

// E sup_{|n| <= N} |<e_k | U^n e_l>| for each probe l, with a log-linear decay
// fit in |k - l|.  Evolution applies U and U* to e_k step by step; U^n is
// never formed densely.
inline AmplitudeProfile dynamical_profile(const ModelParams& params,
                                          const PhaseDistribution& dist, const LatticeBox& box,
                                          const Site& k, const std::vector<Site>& l_list, int N,
                                          std::int64_t samples, std::uint64_t seed,
                                          int workers = 1,
                                          const BoundarySpec& bc = BoundarySpec::neumann_upper()) {
    if (N < 1) throw std::invalid_argument("dynamical_profile: need N >= 1");
    if (l_list.empty()) throw std::invalid_argument("dynamical_profile: empty probe list");
    BandedUnitary s_op = build_S_tensor(params, box, bc);
    const int k_idx = static_cast<int>(box.index_of(k));
    std::vector<std::int64_t> probes;
    AmplitudeProfile out;
    out.N = N;
    // A path of n <= N steps from l stays within sup-distance 2N of l, so the
    // evolution is truncation-free when the 2N-ball around each probe (and
    // around k) stays inside the box.
    out.truncated = detail::distance_to_boundary(box, k) < 2 * N;
    for (const Site& l : l_list) {
        probes.push_back(box.index_of(l));
        int d = 0;
        for (std::size_t ax = 0; ax < l.size(); ++ax)
            d = std::max(d, std::abs(l[ax] - k[ax]));
        out.distances.push_back(d);
        if (detail::distance_to_boundary(box, l) < 2 * N) out.truncated = true;
    }

    const std::size_t np = probes.size();
    std::vector<double> sups(static_cast<std::size_t>(samples) * np, 0.0);
    parallel_for(static_cast<std::size_t>(samples), workers, [&](std::size_t i) {
        PhaseField f = sample_phase_field(dist, box, sample_seed(seed, "dynamical", i));
        detail::EvolutionOps ops(build_U(f, s_op));
        Vec fwd = Vec::Zero(static_cast<std::int64_t>(box.volume()));
        fwd(k_idx) = cplx(1, 0);
        Vec bwd = fwd;
        double* row = &sups[i * np];
        for (std::size_t j = 0; j < np; ++j) row[j] = std::abs(fwd(probes[j]));  // n = 0
        for (int n = 1; n <= N; ++n) {
            fwd = ops.u_adj * fwd;  // |fwd(l)| = |<e_k|U^n e_l>|
            bwd = ops.u * bwd;      // |bwd(l)| = |<e_k|U^{-n} e_l>|
            for (std::size_t j = 0; j < np; ++j) {
                row[j] = std::max(row[j], std::abs(fwd(probes[j])));
                row[j] = std::max(row[j], std::abs(bwd(probes[j])));
            }
        }
    });

    std::vector<double> fit_x, fit_y;
    out.amplitudes.resize(np);
    out.se.resize(np);
    for (std::size_t j = 0; j < np; ++j) {
        std::vector<double> col(static_cast<std::size_t>(samples));
        for (std::int64_t i = 0; i < samples; ++i)
            col[static_cast<std::size_t>(i)] = sups[static_cast<std::size_t>(i) * np + j];
        MeanEstimate m = mean_and_stderr(col);
        out.amplitudes[j] = m.mean;
        out.se[j] = m.se;
        if (m.mean > 0.0 && m.mean >= 10.0 * m.se) {
            fit_x.push_back(static_cast<double>(out.distances[j]));
            fit_y.push_back(m.mean);
        }
    }
    out.fit = fit_log_linear(fit_x, fit_y, 0.0);
    return out;
}

// ---------------------------------------------------------------------------
// position moments and trajectory diagnostics
// ---------------------------------------------------------------------------

struct PositionMomentCurve {
    std::vector<double> curve;  // E max_{|n| <= m} || |X|_e^p U^n psi || for m = 0..N
    double value = 0.0;         // curve.back()
    double se = 0.0;
    bool truncated = false;
};

namespace detail {

// Running max over |n| <= N of the |X|^p-weighted norm along one trajectory.
inline std::vector<double> position_curve(const BandedUnitary& u, const Vec& psi, double p,
                                          int N) {
    const LatticeBox& box = u.box();
    Eigen::VectorXd w2(box.volume());
    for (std::int64_t i = 0; i < box.volume(); ++i) {
        Site s = box.site_of(i);
        double r2 = 0.0;
        for (int c : s) r2 += static_cast<double>(c) * static_cast<double>(c);
        w2(i) = std::pow(r2, p);  // (|x|_e^p)^2 = (x^2)^p
    }
    auto weighted_norm = [&](const Vec& v) {
        NeumaierSum acc;
        for (std::int64_t i = 0; i < v.size(); ++i) acc.add(w2(i) * std::norm(v(i)));
        return std::sqrt(acc.value());
    };
    EvolutionOps ops(u);
    Vec fwd = psi, bwd = psi;
    std::vector<double> curve(static_cast<std::size_t>(N) + 1);
    curve[0] = weighted_norm(psi);
    for (int n = 1; n <= N; ++n) {
        fwd = ops.u * fwd;
        bwd = ops.u_adj * bwd;
        curve[static_cast<std::size_t>(n)] =
            std::max({curve[static_cast<std::size_t>(n) - 1], weighted_norm(fwd),
                      weighted_norm(bwd)});
    }
    return curve;
}

}  // namespace detail

// Single-realization position-moment curve for a given phase field.
inline std::vector<double> position_moment_deterministic(const ModelParams& params,
                                                         const PhaseField& field, const Vec& psi,
                                                         double p, int N,
                                                         const BoundarySpec& bc =
                                                             BoundarySpec::neumann_upper()) {
    return detail::position_curve(build_U_neumann(params, field, bc), psi, p, N);
}

// E max_{|n| <= N} || |X|_e^p U^n psi || with the whole running-max curve.
inline PositionMomentCurve position_moment(const ModelParams& params,
                                           const PhaseDistribution& dist, const LatticeBox& box,
                                           const Vec& psi, double p, int N, std::int64_t samples,
                                           std::uint64_t seed, int workers = 1,
                                           const BoundarySpec& bc =
                                               BoundarySpec::neumann_upper()) {
    if (psi.size() != box.volume())
        throw std::invalid_argument("position_moment: psi must live on the box");
    if (N < 0) throw std::invalid_argument("position_moment: need N >= 0");
    BandedUnitary s_op = build_S_tensor(params, box, bc);
    PositionMomentCurve out;
    // truncation heuristic: support of psi must keep 2N sup-distance from the edge
    for (std::int64_t i = 0; i < box.volume(); ++i)
        if (std::abs(psi(i)) > 0.0 &&
            detail::distance_to_boundary(box, box.site_of(i)) < 2 * N)
            out.truncated = true;
    const std::size_t nc = static_cast<std::size_t>(N) + 1;
    std::vector<double> curves(static_cast<std::size_t>(samples) * nc);
    parallel_for(static_cast<std::size_t>(samples), workers, [&](std::size_t i) {
        PhaseField f = sample_phase_field(dist, box, sample_seed(seed, "position-moment", i));
        std::vector<double> c = detail::position_curve(build_U(f, s_op), psi, p, N);
        std::copy(c.begin(), c.end(), curves.begin() + static_cast<std::ptrdiff_t>(i * nc));
    });
    out.curve.assign(nc, 0.0);
    for (std::size_t m = 0; m < nc; ++m) {
        std::vector<double> col(static_cast<std::size_t>(samples));
        for (std::int64_t i = 0; i < samples; ++i)
            col[static_cast<std::size_t>(i)] = curves[static_cast<std::size_t>(i) * nc + m];
        MeanEstimate est = mean_and_stderr(col);
        out.curve[m] = est.mean;
        if (m + 1 == nc) out.se = est.se;
    }
    out.value = out.curve.back();
    return out;
}

struct TrajectoryDiagnostic {
    std::vector<int> radii;
    std::vector<double> values;  // sup_{|n| <= N} ||(I - P_r) U^n psi||
};

// Truncated-sup tail profile of one realization: for each r, the sup over
// |n| <= N of the norm of U^n psi outside the coordinate ball {|x|_inf <= r}.
inline TrajectoryDiagnostic trajectory_diagnostic(const ModelParams& params,
                                                  const PhaseField& field, const Vec& psi,
                                                  const std::vector<int>& r_list, int N,
                                                  const BoundarySpec& bc =
                                                      BoundarySpec::neumann_upper()) {
    const LatticeBox& box = field.box;
    if (psi.size() != box.volume())
        throw std::invalid_argument("trajectory_diagnostic: psi must live on the box");
    BandedUnitary u = build_U_neumann(params, field, bc);
    std::vector<int> site_radius(static_cast<std::size_t>(box.volume()));
    for (std::int64_t i = 0; i < box.volume(); ++i)
        site_radius[static_cast<std::size_t>(i)] = sup_norm(box.site_of(i));
    TrajectoryDiagnostic out;
    out.radii = r_list;
    out.values.assign(r_list.size(), 0.0);
    auto update = [&](const Vec& v) {
        for (std::size_t j = 0; j < r_list.size(); ++j) {
            NeumaierSum acc;
            for (std::int64_t i = 0; i < v.size(); ++i)
                if (site_radius[static_cast<std::size_t>(i)] > r_list[j]) acc.add(std::norm(v(i)));
            out.values[j] = std::max(out.values[j], std::sqrt(acc.value()));
        }
    };
    detail::EvolutionOps ops(u);
    Vec fwd = psi, bwd = psi;
    update(psi);
    for (int n = 1; n <= N; ++n) {
        fwd = ops.u * fwd;
        bwd = ops.u_adj * bwd;
        update(fwd);
        update(bwd);
    }
    return out;
}

inline TrajectoryDiagnostic trajectory_diagnostic(const ModelParams& params,
                                                  const PhaseDistribution& dist,
                                                  const LatticeBox& box, const Vec& psi,
                                                  const std::vector<int>& r_list, int N,
                                                  std::uint64_t seed) {
    return trajectory_diagnostic(params, sample_phase_field(dist, box,
                                                            sample_seed(seed, "trajectory", 0)),
                                 psi, r_list, N);
}

// ---------------------------------------------------------------------------
// dissipative 2x2 integral bound
// ---------------------------------------------------------------------------

// Smallest eigenvalue of the dissipative part (A - A*) / 2i.
inline double dissipative_margin(const Eigen::Matrix2cd& a) {
    Eigen::Matrix2cd b = (a - a.adjoint()) / cplx(0, 2);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(b);
    return es.eigenvalues().minCoeff();
}

// Trapezoid quadrature of the integral over x in [e0, e0+1] of ||(A+xI)^{-1}||^s;
// bounded by a constant C(s) uniformly over dissipative A.
inline double dissipative_integral_check(const Eigen::Matrix2cd& a, double s, double e0,
                                         int quadrature_n = 4096) {
    if (!(s > 0.0 && s < 1.0))
        throw std::invalid_argument("dissipative_integral_check: s must be in (0,1)");
    if (quadrature_n < 64)
        throw std::invalid_argument("dissipative_integral_check: quadrature too coarse");
    if (dissipative_margin(a) < -1e-12)
        throw std::invalid_argument("dissipative_integral_check: A is not dissipative");
    NeumaierSum acc;
    const double h = 1.0 / quadrature_n;
    for (int i = 0; i <= quadrature_n; ++i) {
        double w = (i == 0 || i == quadrature_n) ? 0.5 : 1.0;
        Eigen::Matrix2cd m = a;
        m.diagonal().array() += e0 + h * i;
        Eigen::JacobiSVD<Eigen::Matrix2cd> svd(m);
        double smin = svd.singularValues()(1);
        acc.add(w * h * std::pow(1.0 / smin, s));
    }
    return acc.value();
}

}  // namespace ulab

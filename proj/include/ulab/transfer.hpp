#pragma once
// One-dimensional transfer-matrix machinery: cocycles, Lyapunov-exponent and
// inverse-moment estimators, boundary-condition solutions of the eigenvalue
// equation, and the two-solution formula for interval Green's functions.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "core.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace ulab {

using Mat2 = Eigen::Matrix2cd;
using Vec2 = Eigen::Vector2cd;

// ---------------------------------------------------------------------------
// transfer matrices
// ---------------------------------------------------------------------------

// T_z(theta, eta): propagates (psi_{2k-1}, psi_{2k})^t to (psi_{2k+1}, psi_{2k+2})^t
// across the phase pair (theta, eta) = (theta_{2k}, theta_{2k+1}).
// det T_z(theta, eta) = e^{i(theta - eta)}, independent of z.
inline Mat2 transfer_matrix(cplx z, double theta, double eta, const ModelParams& params) {
    if (z == cplx(0, 0)) throw std::invalid_argument("transfer_matrix: z must be nonzero");
    const double r = params.r, t = params.t;
    const cplx inv_z_eta = std::exp(-kI * eta) / z;       // e^{-i eta} / z
    const cplx cross = std::exp(kI * (theta - eta));      // e^{i (theta - eta)}
    Mat2 m;
    m(0, 0) = -inv_z_eta;
    m(0, 1) = (r / t) * (cross - inv_z_eta);
    m(1, 0) = (r / t) * (cplx(1, 0) - inv_z_eta);
    m(1, 1) = -z * std::exp(kI * theta) / (t * t) +
              (r * r / (t * t)) * (cplx(1, 0) + cross - inv_z_eta);
    return m;
}

// Companion recursion for the transformed sequence: tilde-T_z(theta, eta) =
// T_z(eta, theta)^t propagates (phi~_{2k-2}, phi~_{2k-1})^t to (phi~_{2k}, phi~_{2k+1})^t
// across (theta, eta) = (theta_{2k-1}, theta_{2k}).
inline Mat2 tilde_transfer_matrix(cplx z, double theta, double eta, const ModelParams& params) {
    return transfer_matrix(z, eta, theta, params).transpose();
}

// Free transfer matrix at spectral parameter e^{i lambda} (all phases zero).
inline Mat2 free_transfer_matrix(const ModelParams& params, double lambda) {
    return transfer_matrix(std::exp(kI * lambda), 0.0, 0.0, params);
}

// Ordered cocycle product T(theta_{2(n-1)}, theta_{2n-1}) ... T(theta_0, theta_1)
// mapping (psi_{-1}, psi_0)^t to (psi_{2n-1}, psi_{2n})^t.  n = 0 gives the identity.
inline Mat2 cocycle(cplx z, const PhaseField& phases, int n, const ModelParams& params) {
    if (n < 0) throw std::invalid_argument("cocycle: n must be >= 0");
    if (phases.box.dimension() != 1)
        throw std::invalid_argument("cocycle: phases must live on a 1-D box");
    if (n > 0 && (phases.box.lo(0) > 0 || phases.box.hi(0) < 2 * n - 1))
        throw std::invalid_argument("cocycle: phases must cover [0, 2n-1]");
    Mat2 acc = Mat2::Identity();
    for (int k = 0; k < n; ++k)
        acc = transfer_matrix(z, phases.at(2 * k), phases.at(2 * k + 1), params) * acc;
    return acc;
}

// ---------------------------------------------------------------------------
// Lyapunov exponent and inverse-moment estimators
// ---------------------------------------------------------------------------

struct LyapunovEstimate {
    cplx z;
    double gamma = 0.0;
    double se = 0.0;
    int n_steps = 0;
    std::int64_t n_samples = 0;
};

namespace detail {

// Exact operator 2-norm of a 2x2 complex matrix (largest singular value).
inline double opnorm_2x2(const Mat2& m) {
    Eigen::JacobiSVD<Mat2> svd(m);
    return svd.singularValues()(0);
}

// log ||T_z(omega, n)|| accumulated with per-step max-norm renormalization,
// drawing theta_0 .. theta_{2n-1} from `dist` via the counter RNG of `seed`.
inline double log_cocycle_norm(cplx z, const PhaseDistribution& dist, int n, std::uint64_t seed,
                               const ModelParams& params) {
    CounterRng rng(seed);
    Mat2 acc = Mat2::Identity();
    double log_scale = 0.0;
    for (int k = 0; k < n; ++k) {
        double theta = dist.sample(rng.unit(static_cast<std::size_t>(2 * k)));
        double eta = dist.sample(rng.unit(static_cast<std::size_t>(2 * k + 1)));
        acc = transfer_matrix(z, theta, eta, params) * acc;
        double m = acc.cwiseAbs().maxCoeff();
        log_scale += std::log(m);
        acc /= m;
    }
    return log_scale + std::log(opnorm_2x2(acc));
}

}  // namespace detail

// Monte Carlo estimate of gamma(z) = E(ln ||T_z(omega, n)||) / n.
inline LyapunovEstimate lyapunov_estimate(cplx z, const PhaseDistribution& dist, int n,
                                          std::int64_t samples, std::uint64_t seed,
                                          const ModelParams& params, int workers = 1) {
    if (n < 50) throw std::invalid_argument("lyapunov_estimate: need n >= 50");
    if (samples < 100) throw std::invalid_argument("lyapunov_estimate: need samples >= 100");
    std::vector<double> vals(static_cast<std::size_t>(samples));
    parallel_for(vals.size(), workers, [&](std::size_t i) {
        vals[i] = detail::log_cocycle_norm(z, dist, n, sample_seed(seed, "lyapunov", i), params) /
                  static_cast<double>(n);
    });
    MeanEstimate m = mean_and_stderr(vals);
    return LyapunovEstimate{z, m.mean, m.se, n, samples};
}

// Deterministic growth exponent ln||T(lambda)^n||/n of the zero-disorder
// cocycle at z = e^{i lambda}; stays near 0 inside the band |r^2-cos(lambda)| < t^2.
inline double free_cocycle_growth(const ModelParams& params, double lambda, int n) {
    if (n < 1) throw std::invalid_argument("free_cocycle_growth: need n >= 1");
    Mat2 step = free_transfer_matrix(params, lambda);
    Mat2 acc = Mat2::Identity();
    double log_scale = 0.0;
    for (int k = 0; k < n; ++k) {
        acc = step * acc;
        double m = acc.cwiseAbs().maxCoeff();
        log_scale += std::log(m);
        acc /= m;
    }
    return (log_scale + std::log(detail::opnorm_2x2(acc))) / static_cast<double>(n);
}

// Monte Carlo estimate of E ||T_z(omega, n) v||^{-delta}; decays
// exponentially in n wherever the Lyapunov exponent is positive.
inline MeanEstimate ckm_moment(cplx z, const PhaseDistribution& dist, double delta, int n,
                               std::int64_t samples, const Vec2& v, std::uint64_t seed,
                               const ModelParams& params, int workers = 1) {
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("ckm_moment: delta must be in (0,1)");
    if (std::abs(v.norm() - 1.0) > 1e-12)
        throw std::invalid_argument("ckm_moment: v must be a unit vector");
    if (n < 0) throw std::invalid_argument("ckm_moment: n must be >= 0");
    if (samples < 1) throw std::invalid_argument("ckm_moment: need samples >= 1");
    std::vector<double> vals(static_cast<std::size_t>(samples));
    parallel_for(vals.size(), workers, [&](std::size_t i) {
        CounterRng rng(sample_seed(seed, "ckm", i));
        Vec2 w = v;
        double log_norm = 0.0;
        for (int k = 0; k < n; ++k) {
            double theta = dist.sample(rng.unit(static_cast<std::size_t>(2 * k)));
            double eta = dist.sample(rng.unit(static_cast<std::size_t>(2 * k + 1)));
            w = transfer_matrix(z, theta, eta, params) * w;
            double m = w.norm();
            log_norm += std::log(m);
            w /= m;
        }
        vals[i] = std::exp(-delta * log_norm);
    });
    return mean_and_stderr(vals);
}

// ---------------------------------------------------------------------------
// boundary solutions of the eigenvalue equation on an interval
// ---------------------------------------------------------------------------

// A generalized eigenvector on an interval, stored with one ghost site beyond
// each propagated end, together with its transformed sequence
// (phi~_{2n}, phi~_{2n+1})^t = [[t^2, rt], [rt, r^2 - z e^{i theta_{2n}}]] (phi_{2n-1}, phi_{2n})^t.
struct SolutionPair {
    int psi_lo = 0;  // site index of psi.front()
    std::vector<cplx> psi;
    int tilde_lo = 0;  // site index of tilde.front(); always even
    std::vector<cplx> tilde;

    cplx psi_at(int k) const {
        if (k < psi_lo || k >= psi_lo + static_cast<int>(psi.size()))
            throw std::out_of_range("SolutionPair: psi index " + std::to_string(k));
        return psi[static_cast<std::size_t>(k - psi_lo)];
    }
    cplx tilde_at(int k) const {
        if (k < tilde_lo || k >= tilde_lo + static_cast<int>(tilde.size()))
            throw std::out_of_range("SolutionPair: tilde index " + std::to_string(k));
        return tilde[static_cast<std::size_t>(k - tilde_lo)];
    }
};

enum class FromEnd { Left, Right };

namespace detail {

// Boundary seed at a left endpoint `a` with boundary phase e^{i eta}:
//  a even: ghost pair (phi_{a-1}, phi_a) = ((e^{i eta} - r)/t, 1),
//  a odd:  direct pair (phi_a, phi_{a+1}) = (1, (r - z e^{i(theta_a - eta)})/t).
// Both make the modified boundary rows of U^{[a,b]} agree with the full-line
// eigenvalue equation.
inline Vec2 left_seed(cplx z, cplx boundary_phase, double theta_a, bool a_even,
                      const ModelParams& params) {
    if (a_even) return Vec2((boundary_phase - params.r) / params.t, cplx(1, 0));
    return Vec2(cplx(1, 0),
                (params.r - z * std::exp(kI * theta_a) / boundary_phase) / params.t);
}

// Boundary seed at a right endpoint `b`:
//  b odd:  ghost pair (phi_b, phi_{b+1}) = (1, (r - e^{i eta})/t),
//  b even: pair (phi_{b-1}, phi_b) = ((z e^{i theta_b}/e^{i eta} - r)/t, 1).
inline Vec2 right_seed(cplx z, cplx boundary_phase, double theta_b, bool b_even,
                       const ModelParams& params) {
    if (b_even)
        return Vec2((z * std::exp(kI * theta_b) / boundary_phase - params.r) / params.t,
                    cplx(1, 0));
    return Vec2(cplx(1, 0), (params.r - boundary_phase) / params.t);
}

}  // namespace detail

// Solution of the eigenvalue equation (U^{[a,b]} - z) phi = 0 satisfying the
// boundary condition at one end, normalized to phi = 1 at that endpoint, and
// propagated across the interval by the transfer recursion.  The phase field
// must cover [a, b]; entries are stored for [a-1, b] plus a ghost at b+1 when
// b is odd.  Tilde values are available for all pair levels inside [a, b]
// (for odd `a` the level below a+1 is not determined by interval data).
inline SolutionPair boundary_solution(cplx z, const BoundarySpec& bc, const PhaseField& phases,
                                      const LatticeBox& interval, FromEnd from_end,
                                      const ModelParams& params) {
    if (z == cplx(0, 0)) throw std::invalid_argument("boundary_solution: z must be nonzero");
    if (interval.dimension() != 1 || phases.box.dimension() != 1)
        throw std::invalid_argument("boundary_solution: interval and phases must be 1-D");
    const int a = interval.lo(0), b = interval.hi(0);
    if (b - a + 1 < 3) throw std::invalid_argument("boundary_solution: need >= 3 sites");
    if (phases.box.lo(0) > a || phases.box.hi(0) < b)
        throw std::invalid_argument("boundary_solution: phases must cover the interval");
    const bool even_a = ((a % 2) + 2) % 2 == 0;
    const bool even_b = ((b % 2) + 2) % 2 == 0;

    // Pair levels n hold sites (2n-1, 2n); level range covering [a-1, b(+1)]:
    const int n_lo = even_a ? a / 2 : (a + 1) / 2;  // lowest level fully determined
    const int n_hi = even_b ? b / 2 : (b + 1) / 2;  // highest propagated level

    std::vector<Vec2> pair(static_cast<std::size_t>(n_hi - n_lo + 1));
    auto level = [&](int n) -> Vec2& { return pair[static_cast<std::size_t>(n - n_lo)]; };

    if (from_end == FromEnd::Left) {
        cplx ephase = bc.left.phase(params);
        if (even_a) {
            level(n_lo) = detail::left_seed(z, ephase, 0.0, true, params);
        } else {
            level(n_lo) = detail::left_seed(z, ephase, phases.at(a), false, params);
        }
        // (phi_{2n+1}, phi_{2n+2}) = T_z(theta_{2n}, theta_{2n+1}) (phi_{2n-1}, phi_{2n})
        for (int n = n_lo; n < n_hi; ++n)
            level(n + 1) =
                transfer_matrix(z, phases.at(2 * n), phases.at(2 * n + 1), params) * level(n);
    } else {
        cplx ephase = bc.right.phase(params);
        if (even_b) {
            level(n_hi) = detail::right_seed(z, ephase, phases.at(b), true, params);
        } else {
            level(n_hi) = detail::right_seed(z, ephase, 0.0, false, params);
        }
        for (int n = n_hi; n > n_lo; --n) {
            Mat2 t_step = transfer_matrix(z, phases.at(2 * (n - 1)), phases.at(2 * n - 1), params);
            level(n - 1) = t_step.inverse() * level(n);
        }
    }

    SolutionPair out;
    out.psi_lo = 2 * n_lo - 1;
    out.psi.resize(static_cast<std::size_t>(2 * (n_hi - n_lo + 1)));
    for (int n = n_lo; n <= n_hi; ++n) {
        out.psi[static_cast<std::size_t>(2 * (n - n_lo))] = level(n)(0);
        out.psi[static_cast<std::size_t>(2 * (n - n_lo) + 1)] = level(n)(1);
    }

    // Tilde values need theta_{2n}, so they exist for levels with 2n in [a, b].
    const int t_lo = even_a ? a / 2 : (a + 1) / 2;
    const int t_hi = even_b ? b / 2 : (b - 1) / 2;  // floor(b/2) also for negative b
    out.tilde_lo = 2 * t_lo;
    out.tilde.resize(static_cast<std::size_t>(2 * (t_hi - t_lo + 1)));
    for (int n = t_lo; n <= t_hi; ++n) {
        const Vec2& p = level(n);
        cplx ze = z * std::exp(kI * phases.at(2 * n));
        const double t = params.t, r = params.r;
        out.tilde[static_cast<std::size_t>(2 * (n - t_lo))] = t * t * p(0) + r * t * p(1);
        out.tilde[static_cast<std::size_t>(2 * (n - t_lo) + 1)] =
            r * t * p(0) + (r * r - ze) * p(1);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Green's function from two boundary solutions
// ---------------------------------------------------------------------------

// G^{[a,b]}(k,l;z) for the eta=0 interval restriction, via the two solutions
// satisfying the boundary condition at a and at b respectively:
//   G(k,l) = c_l phi~^b_l phi^a_k   if k < l, or k = l even,
//   G(k,l) = c_l phi~^a_l phi^b_k   if k > l, or k = l odd,
// with c_l = e^{i theta_l} / (phi~^a_{2n+1} phi~^b_{2n} - phi~^a_{2n} phi~^b_{2n+1})
// for l in {2n, 2n+1}.  The left endpoint must be even (the construction of
// the tilde sequence at the lowest pair level requires it).
inline cplx green_via_solutions(const ModelParams& params, const PhaseField& phases,
                                const LatticeBox& interval, cplx z, int k, int l,
                                const BoundarySpec& bc = BoundarySpec::with_eta(0.0, 0.0)) {
    if (interval.dimension() != 1)
        throw std::invalid_argument("green_via_solutions: interval must be 1-D");
    const int a = interval.lo(0), b = interval.hi(0);
    if (((a % 2) + 2) % 2 != 0)
        throw std::invalid_argument("green_via_solutions: left endpoint must be even");
    if (k < a || k > b || l < a || l > b)
        throw std::invalid_argument("green_via_solutions: k, l must lie in the interval");
    SolutionPair left = boundary_solution(z, bc, phases, interval, FromEnd::Left, params);
    SolutionPair right = boundary_solution(z, bc, phases, interval, FromEnd::Right, params);

    const int n = (l >= 0) ? l / 2 : (l - 1) / 2;  // floor(l/2)
    cplx denom = left.tilde_at(2 * n + 1) * right.tilde_at(2 * n) -
                 left.tilde_at(2 * n) * right.tilde_at(2 * n + 1);
    if (std::abs(denom) < 1e-12)
        throw std::runtime_error("green_via_solutions: degenerate denominator (z near spectrum)");
    cplx c_l = std::exp(kI * phases.at(l)) / denom;

    const bool l_even = ((l % 2) + 2) % 2 == 0;
    if (k < l || (k == l && l_even)) return c_l * right.tilde_at(l) * left.psi_at(k);
    return c_l * left.tilde_at(l) * right.psi_at(k);
}

// Closed form for the far corner element of an even-to-even interval [2n, 2m]
// with eta = 0 boundary conditions:
//   G^{[2n,2m]}(2n, 2m; z) = e^{i theta_{2m}} / (t phi^{2n}_{2m-1} + (r - z e^{i theta_{2m}}) phi^{2n}_{2m}).
inline cplx green_corner_closed_form(const ModelParams& params, const PhaseField& phases,
                                     const LatticeBox& interval, cplx z) {
    const int a = interval.lo(0), b = interval.hi(0);
    if (((a % 2) + 2) % 2 != 0 || ((b % 2) + 2) % 2 != 0)
        throw std::invalid_argument("green_corner_closed_form: both endpoints must be even");
    BoundarySpec bc = BoundarySpec::with_eta(0.0, 0.0);
    SolutionPair left = boundary_solution(z, bc, phases, interval, FromEnd::Left, params);
    cplx ze = z * std::exp(kI * phases.at(b));
    cplx denom = params.t * left.psi_at(b - 1) + (params.r - ze) * left.psi_at(b);
    if (std::abs(denom) < 1e-300)
        throw std::runtime_error("green_corner_closed_form: degenerate denominator");
    return std::exp(kI * phases.at(b)) / denom;
}

// ---------------------------------------------------------------------------
// norm-decoupling integral (quadrature check helper)
// ---------------------------------------------------------------------------

// integral over theta of  tau(theta) / |t phi_1 + (r - z e^{i theta}) phi_2|^s,
// by the trapezoid rule; bounded by C ||(phi_1, phi_2)||^{-s} uniformly in phi.
inline double norm_decoupling_integral(const ModelParams& params, const PhaseDistribution& dist,
                                       cplx z, const Vec2& phi, double s, int quadrature_n = 2048) {
    if (quadrature_n < 16)
        throw std::invalid_argument("norm_decoupling_integral: quadrature too coarse");
    NeumaierSum acc;
    const double h = (dist.hi() - dist.lo()) / quadrature_n;
    for (int i = 0; i <= quadrature_n; ++i) {
        double theta = dist.lo() + h * i;
        double w = (i == 0 || i == quadrature_n) ? 0.5 : 1.0;
        cplx val = params.t * phi(0) + (params.r - z * std::exp(kI * theta)) * phi(1);
        acc.add(w * h * dist.density(theta) * std::pow(std::abs(val), -s));
    }
    return acc.value();
}

}  // namespace ulab

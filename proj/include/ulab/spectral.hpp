#pragma once
// Spectral analysis: closed-form Neumann spectra and gaps, band-edge
// eigenvectors, top-eigenvalue extraction with a disorder-aware branch cut,
// Feynman-Hellmann derivatives, eigenvalue monotonicity along the disorder
// interpolation, Neumann bracketing and the Lifshits-tail Monte Carlo.

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "core.hpp"
#include "model.hpp"
#include "operators.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace ulab {

// ---------------------------------------------------------------------------
// closed-form Neumann spectra
// ---------------------------------------------------------------------------

struct SpectralSet {
    std::vector<cplx> eigenvalues;
    std::vector<double> args;  // matching angles in (-pi, pi]
};

// Eigenvalue angles of the 1-D Neumann operator on an interval of 2M sites:
// lambda_k = arccos(r^2 - t^2 cos(k pi / M)).  The edge angle lambda_0 occurs
// with the + sign only, the interior angles k = 1..M-1 with both signs, and
// k = M gives angle 0.  (The - sign of lambda_0 is NOT in the spectrum.)
inline std::vector<double> neumann_factor_args(const ModelParams& params, int M) {
    if (M < 2) throw std::invalid_argument("neumann_factor_args: need M >= 2");
    std::vector<double> args;
    args.reserve(static_cast<std::size_t>(2 * M));
    for (int k = 0; k <= M; ++k) {
        double lam = std::acos(params.r * params.r -
                               params.t * params.t * std::cos(kPi * k / M));
        if (k == 0) {
            args.push_back(lam);  // + sign forced at the edge
        } else if (k == M) {
            args.push_back(0.0);  // lambda_M = 0
        } else {
            args.push_back(lam);
            args.push_back(-lam);
        }
    }
    return args;
}

// Closed-form spectrum of the d-fold tensor Neumann operator whose 1-D
// factor lives on [0, 2L-1]: all products of factor eigenvalues, i.e. all
// sums of factor angles, wrapped to (-pi, pi].
inline SpectralSet neumann_spectrum_closed_form(const ModelParams& params, int L, int d) {
    if (L < 2) throw std::invalid_argument("neumann_spectrum_closed_form: need L >= 2");
    if (d < 1) throw std::invalid_argument("neumann_spectrum_closed_form: need d >= 1");
    std::vector<double> factor = neumann_factor_args(params, L);
    std::vector<double> sums{0.0};
    for (int ax = 0; ax < d; ++ax) {
        std::vector<double> next;
        next.reserve(sums.size() * factor.size());
        for (double s : sums)
            for (double a : factor) next.push_back(s + a);
        sums.swap(next);
    }
    SpectralSet out;
    out.args.reserve(sums.size());
    out.eigenvalues.reserve(sums.size());
    for (double s : sums) {
        double w = wrap_angle(s);
        out.args.push_back(w);
        out.eigenvalues.push_back(std::exp(kI * w));
    }
    return out;
}

// Numerically computed eigenvalues (dense solver).
inline std::vector<cplx> eigenvalues(const BandedUnitary& u) {
    Eigen::ComplexEigenSolver<Mat> es(u.to_dense(), /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigenvalues: eigensolver failed");
    std::vector<cplx> out(static_cast<std::size_t>(es.eigenvalues().size()));
    for (std::int64_t i = 0; i < es.eigenvalues().size(); ++i)
        out[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
    return out;
}

// Multiset distance between two spectra: sort both by principal argument and
// take the largest elementwise modulus difference (infinite on size mismatch).
inline double multiset_mismatch(std::vector<cplx> a, std::vector<cplx> b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    auto by_arg = [](cplx x, cplx y) { return arg_principal(x) < arg_principal(y); };
    std::sort(a.begin(), a.end(), by_arg);
    std::sort(b.begin(), b.end(), by_arg);
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// ---------------------------------------------------------------------------
// band-edge eigenvectors
// ---------------------------------------------------------------------------

// phi_0 = (1, i, 1, i, ...)^t on [0, 2L-1]: eigenvector of S_N for e^{i lambda0}.
inline Vec band_edge_vector(int L) {
    Vec v(2 * L);
    for (int j = 0; j < L; ++j) {
        v(2 * j) = cplx(1, 0);
        v(2 * j + 1) = kI;
    }
    return v;
}

// phi_L = (i, 1, -i, -1, i, 1, ...)^t: eigenvector of S_N for eigenvalue 1.
inline Vec antiperiodic_edge_vector(int L) {
    Vec v(2 * L);
    for (int j = 0; j < L; ++j) {
        double sign = (j % 2 == 0) ? 1.0 : -1.0;
        v(2 * j) = sign * kI;
        v(2 * j + 1) = cplx(sign, 0);
    }
    return v;
}

inline Vec tensor_power(const Vec& v, int d) {
    Vec acc = v;
    for (int ax = 1; ax < d; ++ax) {
        Vec next(acc.size() * v.size());
        for (std::int64_t i = 0; i < acc.size(); ++i)
            next.segment(i * v.size(), v.size()) = acc(i) * v;
        acc.swap(next);
    }
    return acc;
}

// Relative residual of S_N phi0^{(d)} = e^{i d lambda0} phi0^{(d)} on the
// cube with 1-D factor [0, 2L-1].
inline double band_edge_eigvec_residual(const ModelParams& params, int L, int d) {
    ModelParams p(params.t, d);
    LatticeBox box = LatticeBox::cube(0, 2 * L - 1, d);
    BandedUnitary s = build_S_tensor(p, box, BoundarySpec::neumann_upper());
    Vec phi = tensor_power(band_edge_vector(L), d);
    Vec res = s.apply(phi) - std::exp(kI * (d * params.lambda0)) * phi;
    return res.norm() / phi.norm();
}

// ---------------------------------------------------------------------------
// spectral gap at the upper band edge
// ---------------------------------------------------------------------------

struct SpectralGap {
    double gap = 0.0;          // distance from e^{i d lambda0} to the rest
    double lower_bound = 0.0;  // c0 t^2 / |box|^{2/d}
};

inline constexpr double kGapC0 = 0.90915667486864894;  // (pi*(4-pi))^2 / 8

inline SpectralGap spectral_gap(const ModelParams& params, int L, int d) {
    if (d * params.lambda0 >= kPi)
        throw std::invalid_argument(
            "spectral_gap: edge eigenvalue degenerate (requires d*arccos(r^2-t^2) < pi)");
    SpectralSet spec = neumann_spectrum_closed_form(params, L, d);
    cplx edge = std::exp(kI * (d * params.lambda0));
    double gap = std::numeric_limits<double>::infinity();
    for (cplx mu : spec.eigenvalues) {
        double dist = std::abs(mu - edge);
        if (dist > 1e-12) gap = std::min(gap, dist);
    }
    SpectralGap out;
    out.gap = gap;
    double volume = std::pow(2.0 * L, d);
    out.lower_bound = kGapC0 * params.t * params.t / std::pow(volume, 2.0 / d);
    return out;
}

// ---------------------------------------------------------------------------
// top eigenvalue (largest argument) with a disorder-aware branch cut
// ---------------------------------------------------------------------------

// With phases supported in [0, theta_M] and 2 d lambda0 + theta_M < 2 pi the
// almost-sure spectrum leaves an arc around angle pi - theta_M/2 free, so we
// place the branch cut there: angles are taken in (cut - 2 pi, cut].
inline double branch_cut_angle(double theta_M) { return kPi - 0.5 * theta_M; }

inline double arg_in_branch(cplx z, double cut) {
    double a = arg_principal(z);
    if (a > cut) a -= 2.0 * kPi;
    return a;
}

struct TopEigenvalue {
    cplx value;
    double arg;  // in the rotated branch
};

inline TopEigenvalue top_eigenvalue(const BandedUnitary& u, double theta_M = 0.0) {
    Mat m = u.to_dense();
    if (unitarity_defect(m) > 1e-10)
        throw std::invalid_argument("top_eigenvalue: operator is not unitary");
    Eigen::ComplexEigenSolver<Mat> es(m, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("top_eigenvalue: eigensolver failed");
    const double cut = branch_cut_angle(theta_M);
    TopEigenvalue best{cplx(0, 0), -std::numeric_limits<double>::infinity()};
    for (std::int64_t i = 0; i < es.eigenvalues().size(); ++i) {
        cplx mu = es.eigenvalues()(i);
        double a = arg_in_branch(mu, cut);
        if (a > best.arg) best = TopEigenvalue{mu, a};
    }
    return best;
}

// ---------------------------------------------------------------------------
// disorder interpolation U(alpha) = diag(e^{-i alpha theta_k}) S_N
// ---------------------------------------------------------------------------

struct InterpolationFamily {
    PhaseField phases;
    BandedUnitary S_N;

    Mat u_alpha(double alpha) const {
        Mat m = S_N.to_dense();
        for (std::int64_t k = 0; k < m.rows(); ++k)
            m.row(k) *= std::exp(-kI * (alpha * phases.at_index(k)));
        return m;
    }
};

inline InterpolationFamily make_interpolation_family(const ModelParams& params,
                                                     const PhaseField& phases) {
    return InterpolationFamily{phases,
                               build_S_tensor(params, phases.box, BoundarySpec::neumann_upper())};
}

// One tracked eigenpair of U(alpha).
struct EigenPair {
    cplx value;
    Vec vector;  // normalized
    double gap;  // distance to the nearest other eigenvalue
};

namespace detail {

inline Eigen::ComplexEigenSolver<Mat> eig_with_vectors(const Mat& m) {
    Eigen::ComplexEigenSolver<Mat> es(m, /*computeEigenvectors=*/true);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("eigensolver failed on interpolation family");
    return es;
}

inline double pair_gap(const Eigen::VectorXcd& values, std::int64_t chosen) {
    double g = std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < values.size(); ++i)
        if (i != chosen) g = std::min(g, std::abs(values(i) - values(chosen)));
    return g;
}

}  // namespace detail

// Eigenpair with the largest branch-rotated argument.
inline EigenPair top_eigenpair(const InterpolationFamily& fam, double alpha, double theta_M) {
    auto es = detail::eig_with_vectors(fam.u_alpha(alpha));
    const double cut = branch_cut_angle(theta_M);
    std::int64_t best = 0;
    double best_arg = -std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < es.eigenvalues().size(); ++i) {
        double a = arg_in_branch(es.eigenvalues()(i), cut);
        if (a > best_arg) {
            best_arg = a;
            best = i;
        }
    }
    return EigenPair{es.eigenvalues()(best), es.eigenvectors().col(best).normalized(),
                     detail::pair_gap(es.eigenvalues(), best)};
}

// Eigenpair continued from a reference vector by maximal overlap.
inline EigenPair continued_eigenpair(const InterpolationFamily& fam, double alpha,
                                     const Vec& reference, double min_overlap = 0.5) {
    auto es = detail::eig_with_vectors(fam.u_alpha(alpha));
    std::int64_t best = 0;
    double best_overlap = -1.0;
    for (std::int64_t i = 0; i < es.eigenvalues().size(); ++i) {
        double ov = std::abs(es.eigenvectors().col(i).normalized().dot(reference));
        if (ov > best_overlap) {
            best_overlap = ov;
            best = i;
        }
    }
    if (best_overlap < min_overlap)
        throw std::runtime_error("eigenvalue tracking lost: best overlap below 0.5");
    return EigenPair{es.eigenvalues()(best), es.eigenvectors().col(best).normalized(),
                     detail::pair_gap(es.eigenvalues(), best)};
}

// Feynman-Hellmann derivative of the tracked eigenvalue angle:
// lambda'(alpha) = - sum_k theta_k |<e_k|phi(alpha)>|^2, which depends on
// alpha only through the tracked eigenvector.
inline double feynman_hellmann_derivative(const InterpolationFamily& fam, const EigenPair& pair) {
    if (pair.gap <= 1e-8)
        throw std::invalid_argument("feynman_hellmann_derivative: eigenvalue not simple (gap <= 1e-8)");
    NeumaierSum s;
    for (std::int64_t k = 0; k < pair.vector.size(); ++k)
        s.add(fam.phases.at_index(k) * std::norm(pair.vector(k)));
    return -s.value();
}

inline double feynman_hellmann_derivative(const InterpolationFamily& fam, double alpha) {
    double theta_M = *std::max_element(fam.phases.theta.begin(), fam.phases.theta.end());
    return feynman_hellmann_derivative(fam, top_eigenpair(fam, alpha, theta_M));
}

// ---------------------------------------------------------------------------
// monotonicity scan along alpha
// ---------------------------------------------------------------------------

struct MonotonicityScan {
    std::vector<double> alpha;
    std::vector<double> lambda;        // continuous lift of the tracked angle
    std::vector<std::size_t> skipped;  // grid points with near-degenerate gap
};

// Tracks one analytic eigenvalue branch of U(alpha) across the grid by
// overlap continuation and returns the continuously lifted angle lambda(alpha).
// Grid points where the tracked eigenvalue comes closer than `gap_tol` to a
// neighbor are recorded as skipped (crossings are allowed to happen there).
inline MonotonicityScan monotonicity_scan(const InterpolationFamily& fam,
                                          const std::vector<double>& alpha_grid,
                                          double gap_tol = 1e-8) {
    if (alpha_grid.size() < 2)
        throw std::invalid_argument("monotonicity_scan: need at least 2 grid points");
    MonotonicityScan out;
    out.alpha = alpha_grid;
    out.lambda.assign(alpha_grid.size(), std::numeric_limits<double>::quiet_NaN());
    double theta_M = *std::max_element(fam.phases.theta.begin(), fam.phases.theta.end());
    EigenPair cur = top_eigenpair(fam, alpha_grid.front(), theta_M);
    double lift = arg_in_branch(cur.value, branch_cut_angle(theta_M));
    if (cur.gap > gap_tol)
        out.lambda[0] = lift;
    else
        out.skipped.push_back(0);
    for (std::size_t i = 1; i < alpha_grid.size(); ++i) {
        EigenPair next = continued_eigenpair(fam, alpha_grid[i], cur.vector);
        lift += wrap_angle(std::arg(next.value / cur.value));
        if (next.gap > gap_tol)
            out.lambda[i] = lift;
        else
            out.skipped.push_back(i);
        cur = next;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Neumann bracketing
// ---------------------------------------------------------------------------

struct BracketingResult {
    double arg_joined;  // top argument of U^{Lambda0}
    double arg_split;   // top argument of U^{Lambda1} (+) U^{Lambda2}
};

// Split the box of `phases` perpendicular to `axis` at even coordinate `cut`
// and compare top-eigenvalue arguments: introducing the Neumann cut must move
// the top eigenvalue toward the band edge (arg_joined <= arg_split).
inline BracketingResult neumann_bracketing_check(const ModelParams& params,
                                                 const PhaseField& phases, int cut, int axis = 0) {
    const LatticeBox& box = phases.box;
    if (axis < 0 || axis >= box.dimension())
        throw std::invalid_argument("neumann_bracketing_check: bad axis");
    if (((cut % 2) + 2) % 2 != 0)
        throw std::invalid_argument("neumann_bracketing_check: cut must be even");
    if (cut - box.lo(axis) < 4 || box.hi(axis) - cut + 1 < 4)
        throw std::invalid_argument("neumann_bracketing_check: each side needs >= 4 sites");

    auto with_axis = [&](int lo, int hi) {
        auto iv = box.intervals();
        iv[static_cast<std::size_t>(axis)] = {lo, hi};
        return LatticeBox(iv);
    };
    LatticeBox left = with_axis(box.lo(axis), cut - 1);
    LatticeBox right = with_axis(cut, box.hi(axis));

    double theta_M = *std::max_element(phases.theta.begin(), phases.theta.end());
    BandedUnitary joined = build_U_neumann(params, phases);
    BandedUnitary u1 = build_U_neumann(params, restrict_field(phases, left));
    BandedUnitary u2 = build_U_neumann(params, restrict_field(phases, right));
    SpMat split_sp = embed_on(box, u1) + embed_on(box, u2);
    BandedUnitary split_op =
        joined.is_dense()
            ? BandedUnitary(box, Mat(split_sp), BandedUnitary::Kind::Unitary, joined.band_width())
            : BandedUnitary(box, split_sp, BandedUnitary::Kind::Unitary, joined.band_width());

    BracketingResult out;
    out.arg_joined = top_eigenvalue(joined, theta_M).arg;
    out.arg_split = top_eigenvalue(split_op, theta_M).arg;
    return out;
}

// ---------------------------------------------------------------------------
// Lifshits-tail Monte Carlo
// ---------------------------------------------------------------------------

struct LifshitzTrial {
    int L = 0;
    double b = 0.0;
    std::int64_t samples = 0;
    std::int64_t hits = 0;
    double p_hat = 0.0;
    double se = 0.0;
};

// Probability estimate of the rare event that the top eigenvalue of
// U^{Lambda_L} on [-2L, 2L+1]^d sits within b/L^2 of the clean band edge
// e^{i d lambda0}.  Supported phases in [0, theta_M]; the event probability
// is expected to decay like exp(-gamma L^d).
inline LifshitzTrial lifshitz_trial(const ModelParams& params, const PhaseDistribution& dist,
                                    int L, double b, std::int64_t samples, std::uint64_t seed,
                                    int workers = 1) {
    if (b <= 0.0) throw std::invalid_argument("lifshitz_trial: b must be > 0");
    if (L < 1) throw std::invalid_argument("lifshitz_trial: L must be >= 1");
    LatticeBox box = cube_layer_box(L, params.d);
    BandedUnitary s_n = build_S_tensor(params, box, BoundarySpec::neumann_upper());
    cplx edge = std::exp(kI * (params.d * params.lambda0));
    const double radius = b / static_cast<double>(L * L);
    std::vector<char> hit(static_cast<std::size_t>(samples), 0);
    parallel_for(static_cast<std::size_t>(samples), workers, [&](std::size_t i) {
        PhaseField f = sample_phase_field(dist, box, sample_seed(seed, "lifshitz", i));
        BandedUnitary u = build_U(f, s_n);
        TopEigenvalue top = top_eigenvalue(u, dist.hi());
        hit[i] = std::abs(top.value - edge) <= radius ? 1 : 0;
    });
    LifshitzTrial out;
    out.L = L;
    out.b = b;
    out.samples = samples;
    for (char h : hit) out.hits += h;
    out.p_hat = samples > 0 ? static_cast<double>(out.hits) / static_cast<double>(samples) : 0.0;
    out.se = samples > 0 ? std::sqrt(out.p_hat * (1.0 - out.p_hat) / static_cast<double>(samples))
                         : 0.0;
    return out;
}

// The proof-chain default for the Lifshits radius parameter b:
//   s0 = -0.5 ln E(e^{-theta}),  c1 = 128 theta_M^2 / (t^2 c0),
//   c2 = t^2 c0 / (32 theta_M),  c4 = min(c2, s0 / (2 c1)),  b = c4 s0 / 2.
// Far too small to produce hits at desk scale, but computable; exposed so
// configs may omit b knowingly.
inline double lifshitz_default_b(const ModelParams& params, const PhaseDistribution& dist,
                                 int quadrature_n = 4096) {
    double theta_M = dist.hi();
    NeumaierSum acc;
    double h = (dist.hi() - dist.lo()) / quadrature_n;
    for (int i = 0; i <= quadrature_n; ++i) {
        double x = dist.lo() + h * i;
        double w = (i == 0 || i == quadrature_n) ? 0.5 : 1.0;
        acc.add(w * std::exp(-x) * dist.density(x) * h);
    }
    double s0 = -0.5 * std::log(acc.value());
    double c0 = kGapC0;
    double c1 = 128.0 * theta_M * theta_M / (params.t * params.t * c0);
    double c2 = params.t * params.t * c0 / (32.0 * theta_M);
    double c4 = std::min(c2, s0 / (2.0 * c1));
    return c4 * s0 / 2.0;
}

}  // namespace ulab

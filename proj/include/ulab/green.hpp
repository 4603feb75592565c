#pragma once
// Resolvents and Green's functions: direct solves with residual control, the
// modified resolvent, the Poisson functional calculus, Combes-Thomas decay
// profiles, and the geometric resolvent identity on cube layers.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "core.hpp"
#include "model.hpp"
#include "operators.hpp"
#include "stats.hpp"

namespace ulab {

// ---------------------------------------------------------------------------
// resolvent solves
// ---------------------------------------------------------------------------

// Factored (U - z) supporting repeated right-hand sides.  Columns are checked
// against the solve residual ||(U - z) x - e_l||.
class Resolvent {
  public:
    Resolvent(const BandedUnitary& u, cplx z, double residual_tol = 1e-10)
        : u_(&u), z_(z), tol_(residual_tol) {
        if (u.is_dense()) {
            dense_ = u.dense();
            dense_.diagonal().array() -= z;
            dense_lu_ = std::make_unique<Eigen::PartialPivLU<Mat>>(dense_);
        } else {
            sparse_ = u.sparse();
            SpMat eye(sparse_.rows(), sparse_.cols());
            eye.setIdentity();
            sparse_ = (sparse_ - z * eye).pruned();
            sparse_.makeCompressed();
            sparse_lu_ = std::make_unique<Eigen::SparseLU<SpMat>>();
            sparse_lu_->compute(sparse_);
            if (sparse_lu_->info() != Eigen::Success)
                throw std::runtime_error("Resolvent: sparse factorization failed");
        }
    }

    // Solve (U - z) x = rhs without throwing; returns the attained residual.
    double try_solve(const Vec& rhs, Vec& x) const {
        if (dense_lu_) {
            x = dense_lu_->solve(rhs);
            return (dense_ * x - rhs).cwiseAbs().maxCoeff();
        }
        x = sparse_lu_->solve(rhs);
        return (sparse_ * x - rhs).cwiseAbs().maxCoeff();
    }

    Vec solve(const Vec& rhs) const {
        Vec x;
        double res = try_solve(rhs, x);
        if (!(res < tol_))
            throw std::runtime_error("Resolvent: solve residual " + std::to_string(res) +
                                     " exceeds tolerance (z too close to the spectrum?)");
        return x;
    }

    // Column (U - z)^{-1} e_l.
    Vec column(int l) const {
        Vec rhs = Vec::Zero(size());
        rhs(l) = cplx(1, 0);
        return solve(rhs);
    }

    cplx entry(int k, int l) const { return column(l)(k); }

    std::int64_t size() const {
        return dense_lu_ ? dense_.rows() : static_cast<std::int64_t>(sparse_.rows());
    }
    const BandedUnitary& op() const { return *u_; }
    cplx z() const { return z_; }

  private:
    const BandedUnitary* u_;
    cplx z_;
    double tol_;
    Mat dense_;
    SpMat sparse_;
    std::unique_ptr<Eigen::PartialPivLU<Mat>> dense_lu_;
    std::unique_ptr<Eigen::SparseLU<SpMat>> sparse_lu_;
};

// Green's function G(k, l; z) = <e_k | (U - z)^{-1} e_l> by flat index.
inline cplx green(const BandedUnitary& u, cplx z, int k, int l) {
    return Resolvent(u, z).entry(k, l);
}

inline cplx green(const BandedUnitary& u, cplx z, const Site& k, const Site& l) {
    return green(u, z, u.box().index_of(k), u.box().index_of(l));
}

// Matrix element of the modified resolvent (U + z)(U - z)^{-1}; related to the
// plain resolvent by (U - z)^{-1} = ((U + z)(U - z)^{-1} - I) / (2z).
inline cplx modified_green(const BandedUnitary& u, cplx z, int k, int l) {
    if (z == cplx(0, 0)) throw std::invalid_argument("modified_green: z must be nonzero");
    Vec x = Resolvent(u, z).column(l);
    Vec ux = u.apply(x);
    return ux(k) + z * x(k);
}

inline cplx modified_green(const BandedUnitary& u, cplx z, const Site& k, const Site& l) {
    return modified_green(u, z, u.box().index_of(k), u.box().index_of(l));
}

// ---------------------------------------------------------------------------
// spectral calculus and the Poisson integral
// ---------------------------------------------------------------------------

// f(U) for unitary U via the Schur form (diagonal for a normal matrix).
inline Mat f_of_unitary(const BandedUnitary& u, const std::function<cplx(cplx)>& f) {
    Mat m = u.to_dense();
    Eigen::ComplexSchur<Mat> schur(m, /*computeU=*/true);
    if (schur.info() != Eigen::Success)
        throw std::runtime_error("f_of_unitary: Schur decomposition failed");
    const Mat& q = schur.matrixU();
    const Mat& t = schur.matrixT();
    double offdiag = (t - Mat(t.diagonal().asDiagonal())).cwiseAbs().maxCoeff();
    if (offdiag > 1e-8)
        throw std::runtime_error("f_of_unitary: operator is not normal (Schur form not diagonal)");
    Vec fd(t.rows());
    for (std::int64_t i = 0; i < t.rows(); ++i) fd(i) = f(t(i, i));
    return q * fd.asDiagonal() * q.adjoint();
}

// Poisson-kernel approximation of f(U) at radius r < 1:
//   (1 - r^2)/(2 pi) * integral over theta of
//       (U - r e^{i theta})^{-1} (U^{-1} - r e^{-i theta})^{-1} f(e^{i theta}) dtheta,
// with (U^{-1} - r e^{-i theta})^{-1} = (I - r e^{-i theta} U)^{-1} U.  Uniform
// trapezoid grid over the full circle (periodic, so weights are equal).
inline Mat poisson_functional(const BandedUnitary& u, const std::function<cplx(cplx)>& f, double r,
                              int quadrature_n) {
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("poisson_functional: need 0 < r < 1");
    if (quadrature_n < 64) throw std::invalid_argument("poisson_functional: need quadrature_n >= 64");
    Mat m = u.to_dense();
    const auto n = m.rows();
    Mat acc = Mat::Zero(n, n);
    for (int j = 0; j < quadrature_n; ++j) {
        double theta = 2.0 * kPi * j / quadrature_n;
        cplx w = std::exp(kI * theta);
        Mat a = m;
        a.diagonal().array() -= r * w;
        Mat b = -r * std::conj(w) * m;
        b.diagonal().array() += 1.0;
        // (U - r w)^{-1} (I - r conj(w) U)^{-1} U f(w)
        Mat term = Eigen::PartialPivLU<Mat>(a).solve(Eigen::PartialPivLU<Mat>(b).solve(m));
        acc += f(w) * term;
    }
    return acc * ((1.0 - r * r) / static_cast<double>(quadrature_n));
}

// ---------------------------------------------------------------------------
// decay profiles
// ---------------------------------------------------------------------------

struct DecayProfile {
    std::vector<int> distances;
    std::vector<double> values;
    std::vector<double> se;  // per-distance standard errors; empty for deterministic profiles
    DecayFit fit;
};

// Max of |values over the shell {x : |x - origin|_inf = n}| for n = 0..max_dist.
inline std::vector<double> shell_maxima(const LatticeBox& box, const Vec& column,
                                        const Site& origin, int max_dist) {
    std::vector<double> shells(static_cast<std::size_t>(max_dist) + 1, 0.0);
    for (std::int64_t i = 0; i < box.volume(); ++i) {
        Site s = box.site_of(i);
        int d = 0;
        for (std::size_t ax = 0; ax < s.size(); ++ax)
            d = std::max(d, std::abs(s[ax] - origin[ax]));
        if (d <= max_dist)
            shells[static_cast<std::size_t>(d)] =
                std::max(shells[static_cast<std::size_t>(d)], std::abs(column(i)));
    }
    return shells;
}

struct CombesThomasResult {
    DecayProfile profile;
    double dist = 0.0;   // dist(z, sigma(U))
    double b_fit = 0.0;  // envelope rate: values <= (2/dist) e^{-dist * n * b_fit}
};

// Distance from z to the spectrum of U (full eigendecomposition).
inline double spectrum_distance(const BandedUnitary& u, cplx z) {
    Eigen::ComplexEigenSolver<Mat> es(u.to_dense(), /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("spectrum_distance: eigensolver failed");
    double d = std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < es.eigenvalues().size(); ++i)
        d = std::min(d, std::abs(es.eigenvalues()(i) - z));
    return d;
}

// Off-diagonal resolvent decay outside the spectrum: shell maxima of
// |G(j, origin; z)|, a log-linear fit, and the largest envelope rate b_fit
// with value_n <= (2/dist) e^{-dist * n * b_fit} for every shell.
inline CombesThomasResult combes_thomas_profile(const BandedUnitary& u, cplx z,
                                                const Site& origin, int max_dist,
                                                double floor = 1e-14) {
    CombesThomasResult out;
    out.dist = spectrum_distance(u, z);
    if (!(out.dist > 1e-8))
        throw std::invalid_argument("combes_thomas_profile: z is inside spectrum tolerance");
    Vec column = Resolvent(u, z).column(u.box().index_of(origin));
    std::vector<double> shells = shell_maxima(u.box(), column, origin, max_dist);
    out.profile.distances.resize(shells.size());
    out.profile.values = shells;
    std::vector<double> dist_real(shells.size());
    for (std::size_t n = 0; n < shells.size(); ++n) {
        out.profile.distances[n] = static_cast<int>(n);
        dist_real[n] = static_cast<double>(n);
    }
    out.profile.fit = fit_log_linear(dist_real, shells, floor);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t n = 1; n < shells.size(); ++n) {
        if (shells[n] <= floor) continue;
        b = std::min(b, (std::log(2.0 / out.dist) - std::log(shells[n])) /
                            (out.dist * static_cast<double>(n)));
    }
    out.b_fit = std::isfinite(b) ? b : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// geometric resolvent identity
// ---------------------------------------------------------------------------

struct GeometricResidual {
    double factorization = 0.0;     // chi_0 G chi_y vs the exact three-resolvent product
    double double_resolvent = 0.0;  // full-matrix residual of the two-step expansion
    double vanishing_block = 0.0;   // max |chi_0 G^{(L)} chi_y|, zero by construction
};

namespace detail {

// World-sized resolvent of the block operator U^{Lambda_L} (+) U^{Lambda_L^c},
// inverting the two diagonal blocks separately so all cross blocks are
// exactly zero.
inline Mat block_resolvent(const ModelParams& params, const PhaseField& world_field, int L,
                           cplx z, const BoundarySpec& bc) {
    const LatticeBox& wbox = world_field.box;
    LatticeBox inner = cube_layer_box(L, params.d);
    const auto n = wbox.volume();
    std::vector<std::int64_t> interior, exterior;
    interior.reserve(static_cast<std::size_t>(inner.volume()));
    for (std::int64_t i = 0; i < n; ++i) {
        if (inner.contains(wbox.site_of(i)))
            interior.push_back(i);
        else
            exterior.push_back(i);
    }

    Mat out = Mat::Zero(n, n);

    // Interior block: the Neumann-restricted operator on the inner box.
    BandedUnitary ui = build_U_neumann(params, restrict_field(world_field, inner), bc);
    Mat ai = ui.to_dense();
    ai.diagonal().array() -= z;
    Mat gi = Eigen::PartialPivLU<Mat>(ai).inverse();
    for (std::size_t p = 0; p < interior.size(); ++p)
        for (std::size_t q = 0; q < interior.size(); ++q) {
            Site sp = wbox.site_of(interior[p]);
            Site sq = wbox.site_of(interior[q]);
            out(interior[p], interior[q]) = gi(inner.index_of(sp), inner.index_of(sq));
        }

    // Exterior block: the cut-down world operator on the complement sites.
    BandedUnitary ue = exterior_restriction(build_U_neumann(params, world_field, bc), inner);
    Mat full = ue.to_dense();
    Mat ae(static_cast<std::int64_t>(exterior.size()), static_cast<std::int64_t>(exterior.size()));
    for (std::size_t p = 0; p < exterior.size(); ++p)
        for (std::size_t q = 0; q < exterior.size(); ++q)
            ae(static_cast<std::int64_t>(p), static_cast<std::int64_t>(q)) =
                full(exterior[p], exterior[q]);
    ae.diagonal().array() -= z;
    Mat ge = Eigen::PartialPivLU<Mat>(ae).inverse();
    for (std::size_t p = 0; p < exterior.size(); ++p)
        for (std::size_t q = 0; q < exterior.size(); ++q)
            out(exterior[p], exterior[q]) = ge(static_cast<std::int64_t>(p),
                                               static_cast<std::int64_t>(q));
    return out;
}

}  // namespace detail

// Residuals of the exact resolvent factorization through cube layers L and
// L+1: with T^{(L)} = U - (U^{Lambda_L} (+) U^{Lambda_L^c}) and G^{(L)} the
// block resolvent,
//   chi_0 G chi_y = chi_0 G^{(L)} T^{(L)} G T^{(L+1)} G^{(L+1)} chi_y
// for cubes |y|_inf >= L+2, and the two-step expansion
//   G = G^{(L)} - G^{(L)} T^{(L)} G^{(L+1)} + G^{(L)} T^{(L)} G T^{(L+1)} G^{(L+1)}.
inline GeometricResidual geometric_resolvent_residual(const ModelParams& params,
                                                      const PhaseField& world_field, int L,
                                                      const Site& y, cplx z,
                                                      const BoundarySpec& bc =
                                                          BoundarySpec::neumann_upper()) {
    if (static_cast<int>(y.size()) != params.d)
        throw std::invalid_argument("geometric_resolvent_residual: cube index has wrong dimension");
    if (sup_norm(y) < L + 2)
        throw std::invalid_argument("geometric_resolvent_residual: need |y|_inf >= L+2");
    const LatticeBox& wbox = world_field.box;
    for (int ax = 0; ax < params.d; ++ax)
        if (wbox.lo(ax) > -2 * (L + 4) || wbox.hi(ax) < 2 * (L + 4) + 1)
            throw std::invalid_argument(
                "geometric_resolvent_residual: world box needs margin >= L+4 cube layers");

    GeometricDecomposition dl = geometric_decomposition(params, world_field, L, bc);
    GeometricDecomposition dl1 = geometric_decomposition(params, world_field, L + 1, bc);

    Mat u = dl.world.to_dense();
    Mat a = u;
    a.diagonal().array() -= z;
    Mat g = Eigen::PartialPivLU<Mat>(a).inverse();
    Mat gl = detail::block_resolvent(params, world_field, L, z, bc);
    Mat gl1 = detail::block_resolvent(params, world_field, L + 1, z, bc);
    Mat tl = Mat(dl.boundary);
    Mat tl1 = Mat(dl1.boundary);

    std::vector<std::int64_t> rows = cube_indices(wbox, Site(static_cast<std::size_t>(params.d), 0));
    std::vector<std::int64_t> cols = cube_indices(wbox, y);

    Mat expanded = gl * (tl * (g * (tl1 * gl1)));
    GeometricResidual out;
    for (std::int64_t i : rows)
        for (std::int64_t j : cols) {
            out.factorization = std::max(out.factorization, std::abs(g(i, j) - expanded(i, j)));
            out.vanishing_block = std::max(out.vanishing_block, std::abs(gl(i, j)));
        }
    Mat two_step = gl - gl * (tl * gl1) + expanded;
    out.double_resolvent = (g - two_step).cwiseAbs().maxCoeff();
    return out;
}

}  // namespace ulab

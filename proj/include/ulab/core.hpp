#pragma once
// Shared aliases, constants and small numeric helpers used across the library.

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <complex>
#include <stdexcept>
#include <string>

namespace ulab {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<cplx>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

inline const char* version_string() { return "ulab 0.1.0"; }

// ---------------------------------------------------------------------------
// norms and unitarity checks
// ---------------------------------------------------------------------------

// Largest entry modulus (max norm).
inline double max_norm(const Mat& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// Max-norm distance of U*U from the identity; < 1e-12 for our unitary builds.
inline double unitarity_defect(const Mat& u) {
    if (u.rows() != u.cols())
        throw std::invalid_argument("unitarity_defect: matrix not square");
    Mat d = u.adjoint() * u;
    d -= Mat::Identity(u.rows(), u.cols());
    return max_norm(d);
}

// Operator (spectral) norm estimated by a fixed number of power iterations on
// M*M, started from the deterministic all-ones vector.  A fixed iteration
// count keeps the estimate reproducible; it approaches the norm from below.
inline double operator_norm_power(const Mat& m, int iters = 20) {
    if (m.size() == 0) return 0.0;
    Vec v = Vec::Constant(m.cols(), cplx(1.0, 0.0));
    v /= v.norm();
    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
        Vec w = m.adjoint() * (m * v);
        double n = w.norm();
        if (n == 0.0) return 0.0;
        lambda = n;  // Rayleigh-style estimate of the top eigenvalue of M*M
        v = w / n;
    }
    return std::sqrt(lambda);
}

// ---------------------------------------------------------------------------
// angles
// ---------------------------------------------------------------------------

// Principal argument in (-pi, pi]; std::arg returns [-pi, pi] and we fold the
// lower endpoint so every angle has one representative.
inline double arg_principal(cplx z) {
    double a = std::arg(z);
    if (a <= -kPi) a = kPi;
    return a;
}

// Wrap any angle into (-pi, pi].
inline double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    return a;
}

}  // namespace ulab

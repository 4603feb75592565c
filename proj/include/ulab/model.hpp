#pragma once
// Model data: disorder parameters, phase distributions, lattice boxes,
// boundary conditions and sampled phase fields.
//
// The model under study is U = D S on l^2 of a finite lattice box, where S is
// a deterministic banded unitary built from 2x2 rotation blocks with coupling
// t (and r = sqrt(1-t^2)), and D multiplies site k by a random phase
// e^{-i theta_k} with theta_k i.i.d. from a fixed distribution.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace ulab {

// ---------------------------------------------------------------------------
// ModelParams
// ---------------------------------------------------------------------------

struct ModelParams {
    double t;        // off-diagonal coupling, strictly inside (0,1)
    double r;        // sqrt(1 - t^2)
    int d;           // lattice dimension
    double lambda0;  // band-edge angle arccos(r^2 - t^2)

    explicit ModelParams(double t_, int d_ = 1) : t(t_), d(d_) {
        if (!(t > 0.0 && t < 1.0))
            throw std::invalid_argument("ModelParams: t must lie strictly inside (0,1)");
        if (d < 1) throw std::invalid_argument("ModelParams: dimension must be >= 1");
        r = std::sqrt(1.0 - t * t);
        lambda0 = std::acos(r * r - t * t);
    }
};

// ---------------------------------------------------------------------------
// PhaseDistribution
// ---------------------------------------------------------------------------

// A distribution for the site phases on a closed sub-interval of [0, 2*pi),
// either uniform or given by a piecewise-constant bounded density.
class PhaseDistribution {
  public:
    enum class Kind { UniformInterval, PiecewiseDensity };

    static PhaseDistribution uniform(double lo, double hi) {
        PhaseDistribution p;
        p.kind_ = Kind::UniformInterval;
        p.lo_ = lo;
        p.hi_ = hi;
        p.validate_support();
        p.density_sup_ = 1.0 / (hi - lo);
        return p;
    }

    // `cell_density` holds the density value on each of equally wide cells
    // spanning [lo, hi]; it must integrate to 1.
    static PhaseDistribution piecewise(double lo, double hi, std::vector<double> cell_density) {
        PhaseDistribution p;
        p.kind_ = Kind::PiecewiseDensity;
        p.lo_ = lo;
        p.hi_ = hi;
        p.validate_support();
        if (cell_density.empty())
            throw std::invalid_argument("PhaseDistribution: empty density grid");
        double width = (hi - lo) / static_cast<double>(cell_density.size());
        double mass = 0.0;
        for (double v : cell_density) {
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::invalid_argument("PhaseDistribution: density must be finite and >= 0");
            mass += v * width;
        }
        if (std::abs(mass - 1.0) > 1e-10)
            throw std::invalid_argument("PhaseDistribution: density must integrate to 1");
        p.cells_ = std::move(cell_density);
        p.cum_.assign(p.cells_.size() + 1, 0.0);
        for (std::size_t i = 0; i < p.cells_.size(); ++i)
            p.cum_[i + 1] = p.cum_[i] + p.cells_[i] * width;
        p.cum_.back() = 1.0;  // absorb rounding so the inverse CDF hits hi exactly
        p.density_sup_ = *std::max_element(p.cells_.begin(), p.cells_.end());
        return p;
    }

    Kind kind() const { return kind_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double density_sup() const { return density_sup_; }

    // Density tau with respect to dtheta (0 outside the support).
    double density(double x) const {
        if (x < lo_ || x > hi_) return 0.0;
        if (kind_ == Kind::UniformInterval) return density_sup_;
        double width = (hi_ - lo_) / static_cast<double>(cells_.size());
        auto i = static_cast<std::size_t>((x - lo_) / width);
        if (i >= cells_.size()) i = cells_.size() - 1;
        return cells_[i];
    }

    double cdf(double x) const {
        if (x <= lo_) return 0.0;
        if (x >= hi_) return 1.0;
        if (kind_ == Kind::UniformInterval) return (x - lo_) / (hi_ - lo_);
        double width = (hi_ - lo_) / static_cast<double>(cells_.size());
        auto i = static_cast<std::size_t>((x - lo_) / width);
        if (i >= cells_.size()) i = cells_.size() - 1;
        return cum_[i] + cells_[i] * (x - (lo_ + width * static_cast<double>(i)));
    }

    // Inverse CDF applied to u in [0,1).
    double sample(double u) const {
        if (!(u >= 0.0 && u < 1.0)) throw std::invalid_argument("PhaseDistribution: u outside [0,1)");
        if (kind_ == Kind::UniformInterval) return lo_ + u * (hi_ - lo_);
        auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
        std::size_t i = static_cast<std::size_t>(it - cum_.begin());
        if (i > 0) --i;
        if (i >= cells_.size()) i = cells_.size() - 1;
        double width = (hi_ - lo_) / static_cast<double>(cells_.size());
        double local = u - cum_[i];
        double x = lo_ + width * static_cast<double>(i);
        if (cells_[i] > 0.0) x += local / cells_[i];
        return std::min(x, hi_);
    }

  private:
    void validate_support() const {
        // hi == 2*pi is allowed: samples land in [lo, hi), so this is the
        // full-circle uniform case.
        if (!(lo_ >= 0.0 && hi_ > lo_ && hi_ <= 2.0 * kPi))
            throw std::invalid_argument(
                "PhaseDistribution: support must satisfy 0 <= lo < hi <= 2*pi");
    }

    Kind kind_ = Kind::UniformInterval;
    double lo_ = 0.0, hi_ = 0.0;
    double density_sup_ = 0.0;
    std::vector<double> cells_;  // piecewise density values
    std::vector<double> cum_;    // cumulative mass at cell boundaries
};

// ---------------------------------------------------------------------------
// LatticeBox
// ---------------------------------------------------------------------------

using Site = std::vector<int>;  // d integer coordinates

// A product of per-axis integer intervals [a_j, b_j].  Site enumeration is
// row-major over axes in declared order (last axis fastest), the fixed
// bijection used by every matrix in the library.
class LatticeBox {
  public:
    LatticeBox() = default;

    LatticeBox(std::vector<std::array<int, 2>> intervals) : intervals_(std::move(intervals)) {
        for (const auto& iv : intervals_) {
            if (iv[1] < iv[0]) throw std::invalid_argument("LatticeBox: empty axis interval");
        }
    }

    static LatticeBox interval(int a, int b) {
        return LatticeBox(std::vector<std::array<int, 2>>{{a, b}});
    }

    // The d-fold product of one interval with itself.
    static LatticeBox cube(int a, int b, int d) {
        std::vector<std::array<int, 2>> iv(static_cast<std::size_t>(d), std::array<int, 2>{a, b});
        return LatticeBox(std::move(iv));
    }

    int dimension() const { return static_cast<int>(intervals_.size()); }
    const std::vector<std::array<int, 2>>& intervals() const { return intervals_; }
    int lo(int axis) const { return intervals_.at(static_cast<std::size_t>(axis))[0]; }
    int hi(int axis) const { return intervals_.at(static_cast<std::size_t>(axis))[1]; }
    int extent(int axis) const { return hi(axis) - lo(axis) + 1; }

    std::int64_t volume() const {
        std::int64_t v = 1;
        for (int ax = 0; ax < dimension(); ++ax) v *= extent(ax);
        return v;
    }

    bool contains(const Site& s) const {
        if (static_cast<int>(s.size()) != dimension()) return false;
        for (int ax = 0; ax < dimension(); ++ax)
            if (s[static_cast<std::size_t>(ax)] < lo(ax) || s[static_cast<std::size_t>(ax)] > hi(ax))
                return false;
        return true;
    }

    std::int64_t index_of(const Site& s) const {
        if (!contains(s)) throw std::invalid_argument("LatticeBox: site outside box");
        std::int64_t idx = 0;
        for (int ax = 0; ax < dimension(); ++ax)
            idx = idx * extent(ax) + (s[static_cast<std::size_t>(ax)] - lo(ax));
        return idx;
    }

    Site site_of(std::int64_t idx) const {
        if (idx < 0 || idx >= volume()) throw std::invalid_argument("LatticeBox: index outside box");
        Site s(static_cast<std::size_t>(dimension()));
        for (int ax = dimension() - 1; ax >= 0; --ax) {
            std::int64_t e = extent(ax);
            s[static_cast<std::size_t>(ax)] = lo(ax) + static_cast<int>(idx % e);
            idx /= e;
        }
        return s;
    }

    // Neumann-compatible boxes have even left ends, odd right ends and at
    // least 4 sites per axis (the 2-site interval is a degenerate special
    // case that the constructions deliberately reject).
    bool neumann_compatible() const {
        for (int ax = 0; ax < dimension(); ++ax) {
            if ((lo(ax) % 2 + 2) % 2 != 0) return false;
            if ((hi(ax) % 2 + 2) % 2 != 1) return false;
            if (hi(ax) < lo(ax) + 3) return false;
        }
        return dimension() >= 1;
    }

    bool operator==(const LatticeBox& o) const { return intervals_ == o.intervals_; }

  private:
    std::vector<std::array<int, 2>> intervals_;
};

// ---------------------------------------------------------------------------
// BoundarySpec
// ---------------------------------------------------------------------------

// Condition at one finite endpoint of a 1-D interval: a free angle eta, or
// one of the two Neumann angles e^{i eta} = r +- i t that make box splitting
// spectrally monotone.
struct BoundaryCondition {
    enum class Kind { Eta, NeumannUpper, NeumannLower };

    Kind kind = Kind::NeumannUpper;
    double eta = 0.0;  // only meaningful for Kind::Eta

    static BoundaryCondition with_eta(double e) { return {Kind::Eta, e}; }
    static BoundaryCondition neumann_upper() { return {Kind::NeumannUpper, 0.0}; }
    static BoundaryCondition neumann_lower() { return {Kind::NeumannLower, 0.0}; }

    // The boundary block e^{i eta} as a complex number.
    cplx phase(const ModelParams& p) const {
        switch (kind) {
            case Kind::Eta:
                return std::exp(kI * eta);
            case Kind::NeumannUpper:
                return cplx(p.r, p.t);
            case Kind::NeumannLower:
                return cplx(p.r, -p.t);
        }
        throw std::logic_error("BoundaryCondition: bad kind");
    }
};

// Boundary conditions for the two finite endpoints of an interval; tensor
// constructions reuse the same pair on every axis.
struct BoundarySpec {
    BoundaryCondition left = BoundaryCondition::neumann_upper();
    BoundaryCondition right = BoundaryCondition::neumann_upper();

    static BoundarySpec neumann_upper() { return {}; }
    static BoundarySpec neumann_lower() {
        return {BoundaryCondition::neumann_lower(), BoundaryCondition::neumann_lower()};
    }
    static BoundarySpec with_eta(double eta_left, double eta_right) {
        return {BoundaryCondition::with_eta(eta_left), BoundaryCondition::with_eta(eta_right)};
    }
};

// ---------------------------------------------------------------------------
// PhaseField
// ---------------------------------------------------------------------------

// One realization of the i.i.d. phases over a box, stored by site index.
struct PhaseField {
    LatticeBox box;
    std::vector<double> theta;
    std::uint64_t seed = 0;

    double at_index(std::int64_t idx) const { return theta.at(static_cast<std::size_t>(idx)); }
    double at(const Site& s) const { return theta.at(static_cast<std::size_t>(box.index_of(s))); }
    double at(int k) const { return at(Site{k}); }  // d=1 convenience
};

// Draw one phase per site.  Draw i depends only on (seed, i), never on the
// order sites are visited in, so fields are reproducible under any traversal.
inline PhaseField sample_phase_field(const PhaseDistribution& dist, const LatticeBox& box,
                                     std::uint64_t seed) {
    PhaseField f;
    f.box = box;
    f.seed = seed;
    CounterRng rng(seed);
    auto n = static_cast<std::size_t>(box.volume());
    f.theta.resize(n);
    for (std::size_t i = 0; i < n; ++i) f.theta[i] = dist.sample(rng.unit(i));
    return f;
}

inline PhaseField constant_phase_field(const LatticeBox& box, double value) {
    PhaseField f;
    f.box = box;
    f.theta.assign(static_cast<std::size_t>(box.volume()), value);
    return f;
}

}  // namespace ulab

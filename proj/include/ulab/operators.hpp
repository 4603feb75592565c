#pragma once
// Construction of the model operators.
//
// The one-dimensional building block is S0(t) = U_e * U_o, where U_e is the
// direct sum of 2x2 blocks B1 = [[r, t], [-t, r]] over the pairs
// (2k, 2k+1) and U_o the direct sum of B2 = [[r, -t], [t, r]] over the pairs
// (2k-1, 2k).  Restricting to an interval keeps every block that fits inside
// and replaces each endpoint site left uncovered in U_e or U_o by a 1x1
// block e^{i eta} - the boundary condition.  Higher dimensions are Kronecker
// products of the 1-D factors, and the random operator is U = D S with
// D = diag(e^{-i theta_k}).

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "core.hpp"
#include "model.hpp"

namespace ulab {

// Boxes up to this many sites are stored dense; larger ones stay sparse.
inline constexpr std::int64_t kDenseSiteLimit = 4096;

// ---------------------------------------------------------------------------
// BandedUnitary
// ---------------------------------------------------------------------------

class BandedUnitary {
  public:
    enum class Kind { Unitary, Contraction };

    BandedUnitary(LatticeBox box, Mat dense, Kind kind, int band_width = 2)
        : box_(std::move(box)), dense_(std::move(dense)), kind_(kind), band_width_(band_width) {
        if (dense_->rows() != box_.volume() || dense_->cols() != box_.volume())
            throw std::invalid_argument("BandedUnitary: matrix size does not match box volume");
    }

    BandedUnitary(LatticeBox box, SpMat sparse, Kind kind, int band_width = 2)
        : box_(std::move(box)), sparse_(std::move(sparse)), kind_(kind), band_width_(band_width) {
        if (sparse_->rows() != box_.volume() || sparse_->cols() != box_.volume())
            throw std::invalid_argument("BandedUnitary: matrix size does not match box volume");
        sparse_->makeCompressed();
    }

    const LatticeBox& box() const { return box_; }
    Kind kind() const { return kind_; }
    int band_width() const { return band_width_; }
    std::int64_t size() const { return box_.volume(); }
    bool is_dense() const { return dense_.has_value(); }

    const Mat& dense() const {
        if (!dense_) throw std::logic_error("BandedUnitary: stored sparse, use to_dense()");
        return *dense_;
    }
    const SpMat& sparse() const {
        if (!sparse_) throw std::logic_error("BandedUnitary: stored dense, use to_sparse()");
        return *sparse_;
    }
    Mat to_dense() const { return dense_ ? *dense_ : Mat(*sparse_); }
    SpMat to_sparse() const {
        if (sparse_) return *sparse_;
        return dense_->sparseView();
    }

    cplx entry(std::int64_t row, std::int64_t col) const {
        return dense_ ? (*dense_)(row, col) : sparse_->coeff(row, col);
    }
    cplx entry(const Site& row, const Site& col) const {
        return entry(box_.index_of(row), box_.index_of(col));
    }

    Vec apply(const Vec& x) const { return dense_ ? Vec(*dense_ * x) : Vec(*sparse_ * x); }
    Vec apply_adjoint(const Vec& x) const {
        return dense_ ? Vec(dense_->adjoint() * x) : Vec(sparse_->adjoint() * x);
    }

  private:
    LatticeBox box_;
    std::optional<Mat> dense_;
    std::optional<SpMat> sparse_;
    Kind kind_;
    int band_width_;
};

// CSV debug dump of the stored entries: row,col,re,im (band entries only).
inline void dump_csv(const BandedUnitary& u, std::ostream& os) {
    os << "row,col,re,im\n";
    os.precision(17);
    SpMat s = u.to_sparse();
    for (int k = 0; k < s.outerSize(); ++k)
        for (SpMat::InnerIterator it(s, k); it; ++it)
            os << it.row() << "," << it.col() << "," << it.value().real() << ","
               << it.value().imag() << "\n";
}

namespace detail {

// Helper collecting triplets for a sparse build.
struct TripletSink {
    std::vector<Eigen::Triplet<cplx>> trip;
    void add(std::int64_t i, std::int64_t j, cplx v) {
        trip.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
    }
    SpMat matrix(std::int64_t n) const {
        SpMat m(n, n);
        m.setFromTriplets(trip.begin(), trip.end());
        return m;
    }
};

inline BandedUnitary finalize(LatticeBox box, const SpMat& m, BandedUnitary::Kind kind,
                              int band_width = 2) {
    if (box.volume() <= kDenseSiteLimit)
        return BandedUnitary(std::move(box), Mat(m), kind, band_width);
    return BandedUnitary(std::move(box), m, kind, band_width);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// 1-D interval construction
// ---------------------------------------------------------------------------

namespace detail {

inline bool is_even(int k) { return ((k % 2) + 2) % 2 == 0; }

// One of the two half-step operators on [a,b]: `even_pairs` selects U_e
// (B1 blocks on pairs starting at even sites) vs U_o (B2 blocks on pairs
// starting at odd sites).  Endpoint sites not covered by a full block get
// the 1x1 boundary phase.
inline SpMat half_step_interval(const ModelParams& p, int a, int b, bool even_pairs,
                                cplx left_phase, cplx right_phase) {
    const std::int64_t n = b - a + 1;
    TripletSink sink;
    const double r = p.r, t = p.t;
    // 2x2 blocks: B1 = [[r, t], [-t, r]] on (2k,2k+1); B2 = [[r, -t], [t, r]]
    // on (2k-1,2k).  Only the sign of the off-diagonal differs.
    const double upper = even_pairs ? t : -t;
    const double lower = even_pairs ? -t : t;
    int first = even_pairs ? (is_even(a) ? a : a + 1) : (is_even(a) ? a + 1 : a);
    for (int s = first; s + 1 <= b; s += 2) {
        std::int64_t i = s - a;
        sink.add(i, i, cplx(r, 0));
        sink.add(i, i + 1, cplx(upper, 0));
        sink.add(i + 1, i, cplx(lower, 0));
        sink.add(i + 1, i + 1, cplx(r, 0));
    }
    bool left_dangles = even_pairs ? !is_even(a) : is_even(a);
    bool right_dangles = even_pairs ? is_even(b) : !is_even(b);
    if (left_dangles) sink.add(0, 0, left_phase);
    if (right_dangles) sink.add(n - 1, n - 1, right_phase);
    return sink.matrix(n);
}

}  // namespace detail

// The unitary band matrix S^{[a,b]} with boundary phases from `bc`.
inline BandedUnitary build_S_interval(const ModelParams& params, int a, int b,
                                      const BoundarySpec& bc) {
    if (b - a + 1 < 3)
        throw std::invalid_argument(
            "build_S_interval: interval must have at least 3 sites (the 2-site "
            "restriction is a degenerate special case and is rejected)");
    cplx left = bc.left.phase(params);
    cplx right = bc.right.phase(params);
    SpMat ue = detail::half_step_interval(params, a, b, true, left, right);
    SpMat uo = detail::half_step_interval(params, a, b, false, left, right);
    SpMat s = (ue * uo).pruned();
    return detail::finalize(LatticeBox::interval(a, b), s, BandedUnitary::Kind::Unitary);
}

// ---------------------------------------------------------------------------
// Kronecker products (site enumeration: last axis fastest)
// ---------------------------------------------------------------------------

inline SpMat kron_sparse(const SpMat& A, const SpMat& B) {
    SpMat out(A.rows() * B.rows(), A.cols() * B.cols());
    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(static_cast<std::size_t>(A.nonZeros()) * static_cast<std::size_t>(B.nonZeros()));
    for (int ka = 0; ka < A.outerSize(); ++ka)
        for (SpMat::InnerIterator ia(A, ka); ia; ++ia)
            for (int kb = 0; kb < B.outerSize(); ++kb)
                for (SpMat::InnerIterator ib(B, kb); ib; ++ib)
                    trip.emplace_back(static_cast<int>(ia.row() * B.rows() + ib.row()),
                                      static_cast<int>(ia.col() * B.cols() + ib.col()),
                                      ia.value() * ib.value());
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

// S(t) on a product box: the left-associated Kronecker product of the 1-D
// factors in axis order, so that the first axis is the slowest index.
inline BandedUnitary build_S_tensor(const ModelParams& params, const LatticeBox& box,
                                    const BoundarySpec& bc) {
    if (box.dimension() != params.d)
        throw std::invalid_argument("build_S_tensor: box dimension != params.d");
    if (!box.neumann_compatible())
        throw std::invalid_argument(
            "build_S_tensor: box must have even left ends, odd right ends and >= 4 sites per axis");
    SpMat acc;
    for (int ax = 0; ax < box.dimension(); ++ax) {
        SpMat factor = build_S_interval(params, box.lo(ax), box.hi(ax), bc).to_sparse();
        acc = (ax == 0) ? factor : kron_sparse(acc, factor);
    }
    return detail::finalize(box, acc, BandedUnitary::Kind::Unitary);
}

// ---------------------------------------------------------------------------
// Random diagonal and U = D S
// ---------------------------------------------------------------------------

inline BandedUnitary build_D(const PhaseField& phases) {
    const std::int64_t n = phases.box.volume();
    detail::TripletSink sink;
    for (std::int64_t k = 0; k < n; ++k)
        sink.add(k, k, std::exp(-kI * phases.at_index(k)));
    return detail::finalize(phases.box, sink.matrix(n), BandedUnitary::Kind::Unitary, 0);
}

// U = D S: row k of S multiplied by e^{-i theta_k}.
inline BandedUnitary build_U(const PhaseField& phases, const BandedUnitary& S) {
    if (!(phases.box == S.box())) throw std::invalid_argument("build_U: box mismatch");
    if (S.is_dense()) {
        Mat m = S.dense();
        for (std::int64_t k = 0; k < m.rows(); ++k)
            m.row(k) *= std::exp(-kI * phases.at_index(k));
        return BandedUnitary(S.box(), std::move(m), S.kind(), S.band_width());
    }
    SpMat m = S.sparse();
    for (int k = 0; k < m.outerSize(); ++k)
        for (SpMat::InnerIterator it(m, k); it; ++it)
            it.valueRef() *= std::exp(-kI * phases.at_index(it.row()));
    return BandedUnitary(S.box(), std::move(m), S.kind(), S.band_width());
}

// Convenience: assemble U = D S_N on a Neumann box in one call.
inline BandedUnitary build_U_neumann(const ModelParams& params, const PhaseField& phases,
                                     const BoundarySpec& bc = BoundarySpec::neumann_upper()) {
    return build_U(phases, build_S_tensor(params, phases.box, bc));
}

// Copy the phases of a world field onto a sub-box (values keyed by site, so
// the restriction agrees with the world field at every shared site).
inline PhaseField restrict_field(const PhaseField& world, const LatticeBox& sub) {
    PhaseField f;
    f.box = sub;
    f.seed = world.seed;
    auto n = static_cast<std::size_t>(sub.volume());
    f.theta.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        f.theta[i] = world.at(sub.site_of(static_cast<std::int64_t>(i)));
    return f;
}

// ---------------------------------------------------------------------------
// Restrictions, direct sums, boundary operator
// ---------------------------------------------------------------------------

// P U P on the complement of `inner`, embedded on the world box (rows and
// columns touching the interior are zeroed; the operator acts as 0 there).
// An absent `inner` means the empty set, i.e. the world operator itself.
inline BandedUnitary exterior_restriction(const BandedUnitary& world,
                                          const std::optional<LatticeBox>& inner) {
    if (!inner)
        return BandedUnitary(world.box(), world.to_sparse(), BandedUnitary::Kind::Contraction,
                             world.band_width());
    const LatticeBox& box = world.box();
    if (inner->dimension() != box.dimension())
        throw std::invalid_argument("exterior_restriction: dimension mismatch");
    for (int ax = 0; ax < box.dimension(); ++ax)
        if (inner->lo(ax) < box.lo(ax) || inner->hi(ax) > box.hi(ax))
            throw std::invalid_argument("exterior_restriction: inner box not contained in world");
    std::vector<bool> is_inner(static_cast<std::size_t>(box.volume()), false);
    for (std::int64_t i = 0; i < box.volume(); ++i)
        if (inner->contains(box.site_of(i))) is_inner[static_cast<std::size_t>(i)] = true;
    SpMat src = world.to_sparse();
    detail::TripletSink sink;
    for (int k = 0; k < src.outerSize(); ++k)
        for (SpMat::InnerIterator it(src, k); it; ++it)
            if (!is_inner[static_cast<std::size_t>(it.row())] &&
                !is_inner[static_cast<std::size_t>(it.col())])
                sink.add(it.row(), it.col(), it.value());
    return detail::finalize(box, sink.matrix(box.volume()), BandedUnitary::Kind::Contraction,
                            world.band_width());
}

// Embed `part` (defined on its own box) into a world box as a sparse matrix.
inline SpMat embed_on(const LatticeBox& world, const BandedUnitary& part) {
    SpMat src = part.to_sparse();
    detail::TripletSink sink;
    const LatticeBox& pbox = part.box();
    for (int k = 0; k < src.outerSize(); ++k)
        for (SpMat::InnerIterator it(src, k); it; ++it)
            sink.add(world.index_of(pbox.site_of(it.row())), world.index_of(pbox.site_of(it.col())),
                     it.value());
    return sink.matrix(world.volume());
}

// ---------------------------------------------------------------------------
// cube geometry (side-2 cubes C_n tiling the lattice)
// ---------------------------------------------------------------------------

// C_n = prod_j [2 n_j, 2 n_j + 1];  Lambda_L = union over |n|_inf <= L of C_n
// = [-2L, 2L+1]^d.  The L-th cube layer is the natural length scale of the
// geometric decompositions.
inline LatticeBox cube_layer_box(int L, int d) { return LatticeBox::cube(-2 * L, 2 * L + 1, d); }

inline int cube_coord(int site_coord) {
    // floor division by 2
    return site_coord >= 0 ? site_coord / 2 : (site_coord - 1) / 2;
}

inline Site cube_of_site(const Site& s) {
    Site n(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) n[j] = cube_coord(s[j]);
    return n;
}

inline int sup_norm(const Site& n) {
    int m = 0;
    for (int c : n) m = std::max(m, std::abs(c));
    return m;
}

// Indices (in `box` enumeration) of the sites of cube C_n.
inline std::vector<std::int64_t> cube_indices(const LatticeBox& box, const Site& n) {
    std::vector<std::int64_t> idx;
    const int d = box.dimension();
    std::vector<std::array<int, 2>> iv(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j)
        iv[static_cast<std::size_t>(j)] = {2 * n[static_cast<std::size_t>(j)],
                                           2 * n[static_cast<std::size_t>(j)] + 1};
    LatticeBox cube(iv);
    for (std::int64_t i = 0; i < cube.volume(); ++i) {
        Site s = cube.site_of(i);
        if (box.contains(s)) idx.push_back(box.index_of(s));
    }
    return idx;
}

// The decomposition U = U^{Lambda_L} (+) U^{Lambda_L^c} + T^{(L)} on a world
// cube box, with the interior restriction built with Neumann conditions.
struct GeometricDecomposition {
    BandedUnitary world;     // U on the world box
    SpMat interior;          // D S_N^{Lambda_L}, embedded on the world box
    BandedUnitary exterior;  // P U P on the complement, embedded
    SpMat boundary;          // T^{(L)} = world - interior - exterior
    int L = 0;
};

inline GeometricDecomposition geometric_decomposition(const ModelParams& params,
                                                      const PhaseField& world_field, int L,
                                                      const BoundarySpec& bc =
                                                          BoundarySpec::neumann_upper()) {
    const LatticeBox& wbox = world_field.box;
    if (wbox.dimension() != params.d)
        throw std::invalid_argument("geometric_decomposition: dimension mismatch");
    for (int ax = 0; ax < wbox.dimension(); ++ax) {
        if (wbox.lo(ax) > -2 * (L + 2) || wbox.hi(ax) < 2 * (L + 2) + 1)
            throw std::invalid_argument(
                "geometric_decomposition: world box needs margin >= 2 cube layers around "
                "Lambda_L");
    }
    BandedUnitary world = build_U_neumann(params, world_field, bc);
    LatticeBox inner = cube_layer_box(L, params.d);
    BandedUnitary u_inner = build_U_neumann(params, restrict_field(world_field, inner), bc);
    SpMat interior = embed_on(wbox, u_inner);
    BandedUnitary exterior = exterior_restriction(world, inner);
    SpMat boundary = (world.to_sparse() - interior - exterior.to_sparse()).pruned(1.0, 1e-300);
    return GeometricDecomposition{std::move(world), std::move(interior), std::move(exterior),
                                  std::move(boundary), L};
}

// T^{(L)} alone, as a sparse matrix on the world box.
inline SpMat boundary_operator(const ModelParams& params, const PhaseField& world_field, int L) {
    return geometric_decomposition(params, world_field, L).boundary;
}

// ---------------------------------------------------------------------------
// rank-one splitting at an even cut
// ---------------------------------------------------------------------------

struct SplittingData {
    Vec psi;           // 4-site vector at the cut (norm sqrt(2))
    Vec phi;           // 2-site vector at the cut (norm t*sqrt(2))
    double beta;       // phase of the rank-one rotation; equals -lambda0
    LatticeBox left;   // [a, cut-1]
    LatticeBox right;  // [cut, b]
};

// Split the 1-D Neumann box of `phases` at even site `cut`:
//   S_N^{Lambda0} = S_N^{Lambda1} (+) S_N^{Lambda2} + |psi><phi|
// and with phases restored,
//   U^{Lambda0}  = U^{Lambda1} (+) U^{Lambda2} + |D psi><phi|,
// whose unitary rank-one correction has phase e^{i beta} = e^{-i lambda0}
// independent of the realization.
inline SplittingData splitting_data(const ModelParams& params, int cut, const PhaseField& phases) {
    const LatticeBox& box = phases.box;
    if (box.dimension() != 1)
        throw std::invalid_argument("splitting_data: 1-D boxes only (tensor splits are handled "
                                    "by the bracketing check)");
    if (!box.neumann_compatible())
        throw std::invalid_argument("splitting_data: box must be Neumann-compatible");
    const int a = box.lo(0), b = box.hi(0);
    if (detail::is_even(cut) == false)
        throw std::invalid_argument("splitting_data: cut must be an even site");
    if (cut - a < 4 || b - cut + 1 < 4)
        throw std::invalid_argument("splitting_data: each side of the cut needs >= 4 sites");

    SplittingData out;
    out.left = LatticeBox::interval(a, cut - 1);
    out.right = LatticeBox::interval(cut, b);

    const std::int64_t n = box.volume();
    const double t = params.t, r = params.r;
    out.psi = Vec::Zero(n);
    out.phi = Vec::Zero(n);
    auto at = [&](int site) { return box.index_of(Site{site}); };
    out.psi(at(cut - 2)) = cplx(-t, 0);
    out.psi(at(cut - 1)) = cplx(-r, 0);
    out.psi(at(cut)) = -kI * r;
    out.psi(at(cut + 1)) = kI * t;
    out.phi(at(cut - 1)) = -kI * t;
    out.phi(at(cut)) = cplx(t, 0);

    // e^{i beta} = 1 + <(U^{L1} (+) U^{L2}) phi | D psi>, antilinear in the
    // first slot.  The random phases cancel between the two factors, so beta
    // is realization-independent.
    BandedUnitary u1 = build_U_neumann(params, restrict_field(phases, out.left));
    BandedUnitary u2 = build_U_neumann(params, restrict_field(phases, out.right));
    SpMat usplit = embed_on(box, u1) + embed_on(box, u2);
    Vec uphi = usplit * out.phi;
    Vec dpsi = out.psi;
    for (std::int64_t k = 0; k < n; ++k) dpsi(k) *= std::exp(-kI * phases.at_index(k));
    cplx mu = cplx(1, 0) + uphi.dot(dpsi);
    if (std::abs(std::abs(mu) - 1.0) > 1e-10)
        throw std::runtime_error("splitting_data: 1 + <U phi|D psi> is not unimodular");
    out.beta = arg_principal(mu);
    return out;
}

// Phase beta in (-pi, pi] of the unitary rank-one perturbation
// V = U + |f><g| = e^{i beta |f^><f^|} U.  Requires V unitary.
inline double rank_one_phase(const BandedUnitary& U, const Vec& f, const Vec& g,
                             double tol = 1e-10) {
    if (f.size() != U.size() || g.size() != U.size())
        throw std::invalid_argument("rank_one_phase: vector size mismatch");
    Mat V = U.to_dense();
    V += f * g.adjoint();
    if (unitarity_defect(V) > tol)
        throw std::invalid_argument("rank_one_phase: U + |f><g| is not unitary");
    Vec ug = U.apply(g);
    cplx mu = cplx(1, 0) + ug.dot(f);  // 1 + <Ug|f>, antilinear first slot
    if (std::abs(std::abs(mu) - 1.0) > tol)
        throw std::invalid_argument("rank_one_phase: 1 + <Ug|f> not unimodular");
    return arg_principal(mu);
}

}  // namespace ulab

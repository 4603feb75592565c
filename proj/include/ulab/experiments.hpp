#pragma once
// Named-experiment registry and batch runner.  Each experiment validates its
// configuration up front (violations are returned as data, not thrown one at
// a time), runs deterministically off a single master seed regardless of the
// worker count, and persists CSV outputs plus a JSON manifest with per-file
// checksums.  Outputs are staged to temporary files and renamed into place
// only on success, the manifest last; on failure every partial file is
// removed.  A sweep driver expands a small Cartesian grid of config overrides
// and merges the per-point rows into shared CSVs under one manifest.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "config.hpp"
#include "core.hpp"
#include "green.hpp"
#include "model.hpp"
#include "moments.hpp"
#include "operators.hpp"
#include "rng.hpp"
#include "spectral.hpp"
#include "stats.hpp"
#include "transfer.hpp"

namespace ulab {

// Thrown when a config fails validation; carries the full violation list.
struct ValidationError : std::runtime_error {
    std::vector<std::string> violations;
    explicit ValidationError(std::vector<std::string> v)
        : std::runtime_error(v.empty() ? "validation failed"
                                       : "validation failed: " + v.front()),
          violations(std::move(v)) {}
};

// ---------------------------------------------------------------------------
// small formatting helpers
// ---------------------------------------------------------------------------

// Locale-independent number rendering at full double precision, used for every
// CSV field so that reruns are byte-identical.
inline std::string csv_num(double x) {
    std::ostringstream o;
    o.precision(17);
    o << x;
    return o.str();
}

// Builder for the semicolon-separated `parameters` CSV field (no commas, so
// the field never needs quoting).
class ParamList {
  public:
    ParamList& operator()(const std::string& key, const std::string& value) {
        if (!text_.empty()) text_ += ';';
        text_ += key + "=" + value;
        return *this;
    }
    ParamList& operator()(const std::string& key, double value) {
        return (*this)(key, csv_num(value));
    }
    ParamList& operator()(const std::string& key, int value) {
        return (*this)(key, std::to_string(value));
    }
    const std::string& str() const { return text_; }

  private:
    std::string text_;
};

// FNV-1a over a byte buffer, hex encoded; used for output checksums.
inline std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    std::ostringstream o;
    o << std::hex << std::setw(16) << std::setfill('0') << h;
    return o.str();
}

inline std::string iso_utc_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// staged output directory
// ---------------------------------------------------------------------------

// Stages every CSV as `<name>.tmp` inside the target directory.  commit()
// closes the streams, renames the data files into place, and writes the
// manifest last (also via a temporary), so a `manifest.json` on disk always
// describes complete outputs.  If the stage is destroyed uncommitted, all
// partial files are removed.
class OutputStage {
  public:
    explicit OutputStage(std::string dir) : dir_(std::move(dir)), started_(iso_utc_now()) {
        std::filesystem::create_directories(dir_);
    }
    OutputStage(const OutputStage&) = delete;
    OutputStage& operator=(const OutputStage&) = delete;
    ~OutputStage() {
        if (!committed_) cleanup();
    }

    // Open a fresh CSV with the given header line (no ".tmp" in `name`).
    std::ostream& csv(const std::string& name, const std::string& header) {
        for (const auto& f : files_)
            if (f->name == name) throw std::logic_error("OutputStage: duplicate output " + name);
        files_.push_back(std::make_unique<File>());
        File& f = *files_.back();
        f.name = name;
        f.tmp = dir_ + "/" + name + ".tmp";
        f.final = dir_ + "/" + name;
        f.stream = std::make_unique<std::ofstream>(f.tmp, std::ios::binary | std::ios::trunc);
        if (!*f.stream) throw std::runtime_error("OutputStage: cannot open '" + f.tmp + "'");
        f.stream->precision(17);
        *f.stream << header << "\n";
        return *f.stream;
    }

    // Finalize: rename outputs, then write the manifest.  Returns the manifest.
    nlohmann::json commit(const std::string& experiment, const Config& config) {
        nlohmann::json j;
        j["experiment"] = experiment;
        j["version"] = version_string();
        j["started"] = started_;
        j["config"] = nlohmann::json::object();
        for (const auto& kv : config.raw()) j["config"][kv.first] = kv.second;
        j["outputs"] = nlohmann::json::array();
        for (auto& f : files_) {
            f->stream->flush();
            if (!*f->stream) throw std::runtime_error("OutputStage: write failed on " + f->name);
            f->stream->close();
            std::string bytes = read_file_bytes(f->tmp);
            j["outputs"].push_back({{"file", f->name},
                                    {"bytes", bytes.size()},
                                    {"fnv1a64", fnv1a64_hex(bytes)}});
        }
        j["finished"] = iso_utc_now();
        for (auto& f : files_) {
            std::filesystem::rename(f->tmp, f->final);
            f->renamed = true;
        }
        const std::string mtmp = dir_ + "/manifest.json.tmp";
        {
            std::ofstream m(mtmp, std::ios::binary | std::ios::trunc);
            if (!m) throw std::runtime_error("OutputStage: cannot open '" + mtmp + "'");
            m << j.dump(2) << "\n";
            if (!m) throw std::runtime_error("OutputStage: manifest write failed");
        }
        std::filesystem::rename(mtmp, dir_ + "/manifest.json");
        committed_ = true;
        return j;
    }

    const std::string& dir() const { return dir_; }

  private:
    struct File {
        std::string name, tmp, final;
        std::unique_ptr<std::ofstream> stream;
        bool renamed = false;
    };

    void cleanup() noexcept {
        std::error_code ec;
        for (auto& f : files_) {
            if (f->stream && f->stream->is_open()) f->stream->close();
            std::filesystem::remove(f->tmp, ec);
            if (f->renamed) std::filesystem::remove(f->final, ec);
        }
        std::filesystem::remove(dir_ + "/manifest.json.tmp", ec);
    }

    std::string dir_;
    std::string started_;
    bool committed_ = false;
    std::vector<std::unique_ptr<File>> files_;
};

// ---------------------------------------------------------------------------
// shared config readers and validators
// ---------------------------------------------------------------------------

namespace detail {

inline ModelParams model_from(const Config& c) {
    return ModelParams(c.get_double("model.t"), static_cast<int>(c.get_int("model.d", 1)));
}

inline PhaseDistribution phases_from(const Config& c) {
    const std::string kind = c.get_string("phases.kind", "uniform");
    const double lo = c.get_double("phases.lo", 0.0);
    const double hi = c.get_double("phases.hi");
    if (kind == "uniform") return PhaseDistribution::uniform(lo, hi);
    if (kind == "piecewise")
        return PhaseDistribution::piecewise(lo, hi, c.get_double_list("phases.density"));
    throw std::runtime_error("phases.kind must be 'uniform' or 'piecewise'");
}

inline std::uint64_t seed_from(const Config& c) {
    return static_cast<std::uint64_t>(c.get_int("experiment.seed", 1));
}

inline int workers_from(const Config& c) {
    return static_cast<int>(c.get_int("experiment.workers", 1));
}

inline cplx z_from(const Config& c, const std::string& section) {
    return std::polar(c.get_double(section + ".z_abs"), c.get_double(section + ".z_arg", 0.0));
}

// Push the model/phase construction errors (if any) as violations; return the
// parsed objects when valid.
inline std::optional<ModelParams> model_if_valid(const Config& c, std::vector<std::string>& v) {
    if (!c.has("model.t")) {
        v.push_back("missing key: model.t");
        return std::nullopt;
    }
    try {
        return model_from(c);
    } catch (const std::exception& e) {
        v.push_back(e.what());
        return std::nullopt;
    }
}

inline std::optional<PhaseDistribution> phases_if_valid(const Config& c,
                                                        std::vector<std::string>& v) {
    if (!c.has("phases.hi")) {
        v.push_back("missing key: phases.hi");
        return std::nullopt;
    }
    try {
        return phases_from(c);
    } catch (const std::exception& e) {
        v.push_back(e.what());
        return std::nullopt;
    }
}

inline void check_seed_workers(const Config& c, std::vector<std::string>& v) {
    try {
        seed_from(c);
    } catch (const std::exception& e) {
        v.push_back(e.what());
    }
    try {
        int w = workers_from(c);
        if (w < 1 || w > 256) v.push_back("experiment.workers must lie in [1, 256]");
    } catch (const std::exception& e) {
        v.push_back(e.what());
    }
}

// Require keys, recording one violation per missing key; true if all present.
inline bool require_keys(const Config& c, const std::vector<std::string>& keys,
                         std::vector<std::string>& v) {
    bool ok = true;
    for (const auto& k : keys)
        if (!c.has(k)) {
            v.push_back("missing key: " + k);
            ok = false;
        }
    return ok;
}

inline bool strictly_increasing(const std::vector<std::int64_t>& xs) {
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        if (xs[i + 1] <= xs[i]) return false;
    return true;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// experiment: neumann-spectrum
// ---------------------------------------------------------------------------

inline std::vector<std::string> validate_neumann_spectrum(const Config& c) {
    std::vector<std::string> v;
    detail::check_seed_workers(c, v);
    auto p = detail::model_if_valid(c, v);
    if (!detail::require_keys(c, {"neumann-spectrum.L"}, v) || !p) return v;
    try {
        const std::int64_t L = c.get_int("neumann-spectrum.L");
        if (L < 2) {
            v.push_back("neumann-spectrum: L must be at least 2");
            return v;
        }
        double volume = std::pow(2.0 * static_cast<double>(L), p->d);
        if (volume > kDenseSiteLimit)
            v.push_back("neumann-spectrum: box of " + std::to_string(static_cast<long>(volume)) +
                        " sites exceeds the dense eigensolver limit of " +
                        std::to_string(kDenseSiteLimit));
        if (p->d * p->lambda0 >= kPi)
            v.push_back(
                "spectral_gap: edge eigenvalue degenerate (requires d*arccos(r^2-t^2) < pi)");
    } catch (const std::exception& e) {
        v.push_back(e.what());
    }
    return v;
}

inline void run_neumann_spectrum(const Config& c, OutputStage& out) {
    const ModelParams p = detail::model_from(c);
    const int L = static_cast<int>(c.get_int("neumann-spectrum.L"));

    SpectralSet closed = neumann_spectrum_closed_form(p, L, p.d);
    BandedUnitary s_op =
        build_S_tensor(p, LatticeBox::cube(0, 2 * L - 1, p.d), BoundarySpec::neumann_upper());
    double mismatch = multiset_mismatch(closed.eigenvalues, eigenvalues(s_op));

    double edge_residual = band_edge_eigvec_residual(p, L, p.d);
    Vec phi_anti = tensor_power(antiperiodic_edge_vector(L), p.d);
    double anti_residual = (s_op.apply(phi_anti) - phi_anti).norm() / phi_anti.norm();
    SpectralGap gap = spectral_gap(p, L, p.d);

    std::vector<std::size_t> order(closed.args.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return closed.args[a] < closed.args[b]; });
    auto& sp = out.csv("spectrum.csv", "k,re,im,arg");
    for (std::size_t i = 0; i < order.size(); ++i) {
        const cplx mu = closed.eigenvalues[order[i]];
        sp << i << "," << csv_num(mu.real()) << "," << csv_num(mu.imag()) << ","
           << csv_num(closed.args[order[i]]) << "\n";
    }

    const std::string pars = ParamList()("t", p.t)("d", p.d)("L", L).str();
    auto& ch = out.csv("checks.csv", "quantity,parameters,value,stderr,samples");
    ch << "spectrum_mismatch," << pars << "," << csv_num(mismatch) << ",0,"
       << closed.eigenvalues.size() << "\n";
    ch << "band_edge_residual," << pars << "," << csv_num(edge_residual) << ",0,1\n";
    ch << "antiperiodic_edge_residual," << pars << "," << csv_num(anti_residual) << ",0,1\n";
    ch << "spectral_gap," << pars << "," << csv_num(gap.gap) << ",0,1\n";
    ch << "spectral_gap_lower_bound," << pars << "," << csv_num(gap.lower_bound) << ",0,1\n";
}

// ---------------------------------------------------------------------------
// experiment: lifshitz
// ---------------------------------------------------------------------------

inline std::vector<std::string> validate_lifshitz(const Config& c) {
    std::vector<std::string> v;
    detail::check_seed_workers(c, v);
    auto p = detail::model_if_valid(c, v);
    auto dist = detail::phases_if_valid(c, v);
    if (!detail::require_keys(c, {"lifshitz.L_list", "lifshitz.samples"}, v) || !p || !dist)
        return v;
    try {
        auto ls = c.get_int_list("lifshitz.L_list");
        if (ls.empty()) v.push_back("lifshitz: L_list must not be empty");
        for (auto L : ls) {
            if (L < 1) v.push_back("lifshitz_trial: L must be >= 1");
            double volume = std::pow(4.0 * static_cast<double>(L) + 2.0, p->d);
            if (volume > kDenseSiteLimit)
                v.push_back("lifshitz: box for L=" + std::to_string(L) +
                            " exceeds the dense eigensolver limit");
        }
        if (c.get_int("lifshitz.samples") < 1) v.push_back("lifshitz: samples must be >= 1");
        if (c.has("lifshitz.b") && !(c.get_double("lifshitz.b") > 0.0))
            v.push_back("lifshitz_trial: b must be > 0");
        if (2.0 * p->d * p->lambda0 + dist->hi() >= 2.0 * kPi)
            v.push_back(
                "lifshitz: branch separation requires 2*d*lambda0 + theta_M < 2*pi "
                "(shrink phases.hi or increase model.t)");
    } catch (const std::exception& e) {
        v.push_back(e.what());
    }
    return v;
}

inline void run_lifshitz(const Config& c, OutputStage& out) {
    const ModelParams p = detail::model_from(c);
    const PhaseDistribution dist = detail::phases_from(c);
    const std::uint64_t seed = detail::seed_from(c);
    const int workers = detail::workers_from(c);
    const std::int64_t samples = c.get_int("lifshitz.samples");
    const double b =
        c.has("lifshitz.b") ? c.get_double("lifshitz.b") : lifshitz_default_b(p, dist);

    auto& cs = out.csv("lifshitz.csv", "L,b,samples,hits,p_hat,stderr");
    for (std::int64_t L : c.get_int_list("lifshitz.L_list")) {
        LifshitzTrial tr = lifshitz_trial(p, dist, static_cast<int>(L), b, samples, seed, workers);
        cs << tr.L << "," << csv_num(tr.b) << "," << tr.samples << "," << tr.hits << ","
           << csv_num(tr.p_hat) << "," << csv_num(tr.se) << "\n";
    }
}

// ---------------------------------------------------------------------------
// experiment: lyapunov
// ---------------------------------------------------------------------------

inline std::vector<std::string> validate_lyapunov(const Config& c) {
    std::vector<std::string> v;
    detail::check_seed_workers(c, v);
    auto p = detail::model_if_valid(c, v);
    auto dist = detail::phases_if_valid(c, v);
    if (!detail::require_keys(
            c, {"lyapunov.z_abs", "lyapunov.z_arg_list", "lyapunov.n", "lyapunov.samples"}, v) ||
        !p || !dist)
        return v;
    try {
        if (p->d != 1) v.push_back("lyapunov: transfer-matrix experiments require model.d = 1");
        if (!(c.get_double("lyapunov.z_abs") > 0.0))
            v.push_back("lyapunov: z_abs must be positive");
        if (c.get_double_list("lyapunov.z_arg_list").empty())
            v.push_back("lyapunov: z_arg_list must not be empty");
        if (c.get_int("lyapunov.n") < 50) v.push_back("lyapunov_estimate: need n >= 50");
        if (c.get_int("lyapunov.samples") < 100)
            v.push_back("lyapunov_estimate: need samples >= 100");
    } catch (const std::exception& e) {
        v.push_back(e.what());
    }
    return v;
}

inline void run_lyapunov(const Config& c, OutputStage& out) {
    const ModelParams p = detail::model_from(c);
    const PhaseDistribution dist = detail::phases_from(c);
    const std::uint64_t seed = detail::seed_from(c);
    const int workers = detail::workers_from(c);
    const double z_abs = c.get_double("lyapunov.z_abs");
    const int n = static_cast<int>(c.get_int("lyapunov.n"));
    const std::int64_t samples = c.get_int("lyapunov.samples");

    auto& cs = out.csv("lyapunov.csv", "z_re,z_im,gamma,stderr,n,samples");
    for (double arg : c.get_double_list("lyapunov.z_arg_list")) {
        LyapunovEstimate est =
            lyapunov_estimate(std::polar(z_abs, arg), dist, n, samples, seed, p, workers);
        cs << csv_num(est.z.real()) << "," << csv_num(est.z.imag()) << "," << csv_num(est.gamma)
           << "," << csv_num(est.se) << "," << est.n_steps << "," << est.n_samples << "\n";
    }
}

// ---------------------------------------------------------------------------
// experiment: fractional-decay
// ---------------------------------------------------------------------------

inline std::vector<std::string> validate_fractional_decay(const Config& c) {
    std::vector<std::string> v;
    detail::check_seed_workers(c, v);
    auto p = detail::model_if_valid(c, v);
    auto dist = detail::phases_if_valid(c, v);
    if (!detail::require_keys(c,
                              {"fractional-decay.z_abs", "fractional-decay.s",
                               "fractional-decay.distances", "fractional-decay.samples"},
                              v) ||
        !p || !dist)
        return v;
    try {
        const double za = c.get_double("fractional-decay.z_abs");
        if (!(za > 0.0) || za == 1.0)
            v.push_back("fractional_moment: |z| must avoid 0 and 1");
        const double s = c.get_double("fractional-decay.s");
        if (!(s > 0.0 && s < 1.0)) v.push_back("fractional_moment: s must be in (0,1)");
        auto ds = c.get_int_list("fractional-decay.distances");
        if (ds.empty() || ds.front() < 1 || !detail::strictly_increasing(ds))
            v.push_back("decay_experiment: distances must be strictly increasing and >= 1");
        if (c.get_int("fractional-decay.samples") < 2)
            v.push_back("fractional-decay: samples must be >= 2");
        if (!ds.empty()) {
            int hi = 4 + static_cast<int>(ds.back()) + 6;
            if (hi % 2 == 0) hi += 1;
            double volume = std::pow(static_cast<double>(hi) + 1.0, p->d);
            if (volume > 20000)
                v.push_back("fractional-decay: implied box of " +
                            std::to_string(static_cast<long>(volume)) +
                            " sites is too large (shrink the distance ladder or d)");
        }
    } catch (const std::exception& e) {
        v.push_back(e.what());
    }
    return v;
}

inline void run_fractional_decay(const Config& c, OutputStage& out) {
    const ModelParams p = detail::model_from(c);
    const PhaseDistribution dist = detail::phases_from(c);
    const cplx z = detail::z_from(c, "fractional-decay");
    const double s = c.get_double("fractional-decay.s");
    std::vector<int> distances;
    for (auto d : c.get_int_list("fractional-decay.distances"))
        distances.push_back(static_cast<int>(d));

    DecayProfile prof = decay_experiment(p, dist, z, s, distances,
                                         c.get_int("fractional-decay.samples"),
                                         detail::seed_from(c), detail::workers_from(c));

    auto& cs = out.csv("decay.csv", "dist,value,fitted_rate,fitted_prefactor,r_squared");
    for (std::size_t i = 0; i < prof.distances.size(); ++i)
        cs << prof.distances[i] << "," << csv_num(prof.values[i]) << ","
           << csv_num(prof.fit.rate) << "," << csv_num(prof.fit.prefactor) << ","
           << csv_num(prof.fit.r_squared) << "\n";
}

// ---------------------------------------------------------------------------
// experiment: dynamical
// ---------------------------------------------------------------------------

namespace detail {

struct DynamicalGeometry {
    LatticeBox box;
    int center = 0;
    std::vector<Site> probes;
};

inline DynamicalGeometry dynamical_geometry(const Config& c) {
    const int N = static_cast<int>(c.get_int("dynamical.N"));
    auto offsets = c.get_int_list("dynamical.offsets");
    const int max_off = static_cast<int>(offsets.back());
    int hi;
    int center;
    if (c.has("dynamical.box_hi")) {
        hi = static_cast<int>(c.get_int("dynamical.box_hi"));
        center = 2 * ((hi / 2) / 2);
    } else {
        // Truncation-free by construction: paths of |n| <= N steps stay within
        // sup-distance 2N, so keep 2N sites of margin on both sides.
        hi = 4 * N + max_off + 1;
        if (hi % 2 == 0) hi += 1;
        center = 2 * N;
    }
    DynamicalGeometry g{LatticeBox::interval(0, hi), center, {}};
    for (auto off : offsets) g.probes.push_back(Site{center + static_cast<int>(off)});
    return g;
}

}  // namespace detail

inline std::vector<std::string> validate_dynamical(const Config& c) {
    std::vector<std::string> v;
    detail::check_seed_workers(c, v);
    auto p = detail::model_if_valid(c, v);
    auto dist = detail::phases_if_valid(c, v);
    if (!detail::require_keys(c, {"dynamical.N", "dynamical.offsets", "dynamical.samples"}, v) ||
        !p || !dist)
        return v;
    try {
        if (p->d != 1) v.push_back("dynamical: experiment geometry is 1-D (set model.d = 1)");
        if (c.get_int("dynamical.N") < 1) v.push_back("dynamical_profile: need N >= 1");
        auto offs = c.get_int_list("dynamical.offsets");
        if (offs.empty() || offs.front() < 1 || !detail::strictly_increasing(offs))
            v.push_back("dynamical: offsets must be strictly increasing and >= 1");
        if (c.get_int("dynamical.samples") < 2) v.push_back("dynamical: samples must be >= 2");
        if (c.has("dynamical.box_hi")) {
            const std::int64_t hi = c.get_int("dynamical.box_hi");
            if (hi < 3 || hi % 2 == 0)
                v.push_back("dynamical: box_hi must be odd and >= 3 (even-to-odd box)");
            else if (!offs.empty() && p->d == 1) {
                const int center = 2 * ((static_cast<int>(hi) / 2) / 2);
                if (center + offs.back() > hi)
                    v.push_back("dynamical: farthest probe leaves the box (raise box_hi)");
            }
        }
    } catch (const std::exception& e) {
        v.push_back(e.what());
    }
    return v;
}

inline void run_dynamical(const Config& c, OutputStage& out) {
    const ModelParams p = detail::model_from(c);
    const PhaseDistribution dist = detail::phases_from(c);
    detail::DynamicalGeometry g = detail::dynamical_geometry(c);
    AmplitudeProfile prof = dynamical_profile(
        p, dist, g.box, Site{g.center}, g.probes, static_cast<int>(c.get_int("dynamical.N")),
        c.get_int("dynamical.samples"), detail::seed_from(c), detail::workers_from(c));

    auto& cs = out.csv("dynamical.csv",
                       "dist,value,stderr,fitted_rate,fitted_prefactor,r_squared,truncated");
    for (std::size_t i = 0; i < prof.distances.size(); ++i)
        cs << prof.distances[i] << "," << csv_num(prof.amplitudes[i]) << ","
           << csv_num(prof.se[i]) << "," << csv_num(prof.fit.rate) << ","
           << csv_num(prof.fit.prefactor) << "," << csv_num(prof.fit.r_squared) << ","
           << (prof.truncated ? 1 : 0) << "\n";
}

// ---------------------------------------------------------------------------
// experiment: combes-thomas
// ---------------------------------------------------------------------------

inline std::vector<std::string> validate_combes_thomas(const Config& c) {
    std::vector<std::string> v;
    detail::check_seed_workers(c, v);
    auto p = detail::model_if_valid(c, v);
    auto dist = detail::phases_if_valid(c, v);
    if (!detail::require_keys(c, {"combes-thomas.z_abs"}, v) || !p || !dist) return v;
    try {
        const double za = c.get_double("combes-thomas.z_abs");
        if (std::abs(za - 1.0) <= 1e-6)
            v.push_back(
                "combes_thomas_profile: |z| must stay away from the unit circle "
                "(the spectrum of a unitary operator lies on it)");
        const std::int64_t sites = c.get_int("combes-thomas.sites", 200);
        if (sites < 8 || sites % 2 != 0)
            v.push_back("combes-thomas: sites must be even and >= 8");
        double volume = std::pow(static_cast<double>(sites), p->d);
        if (volume > kDenseSiteLimit)
            v.push_back("combes-thomas: box exceeds the dense eigensolver limit");
        if (c.get_int("combes-thomas.realizations", 1) < 1)
            v.push_back("combes-thomas: realizations must be >= 1");
    } catch (const std::exception& e) {
        v.push_back(e.what());
    }
    return v;
}

inline void run_combes_thomas(const Config& c, OutputStage& out) {
    const ModelParams p = detail::model_from(c);
    const PhaseDistribution dist = detail::phases_from(c);
    const std::uint64_t seed = detail::seed_from(c);
    const cplx z = detail::z_from(c, "combes-thomas");
    const int sites = static_cast<int>(c.get_int("combes-thomas.sites", 200));
    const std::int64_t realizations = c.get_int("combes-thomas.realizations", 1);

    LatticeBox box = LatticeBox::cube(0, sites - 1, p.d);
    const int c0 = 2 * (((sites - 1) / 2) / 2);
    Site origin(static_cast<std::size_t>(p.d), c0);
    int reach = std::min(c0, sites - 1 - c0);
    const int max_dist =
        static_cast<int>(c.get_int("combes-thomas.max_dist", reach));

    auto& cs = out.csv("ct.csv",
                       "realization,dist,value,b_fit,dist_to_spectrum,fitted_rate,r_squared");
    for (std::int64_t i = 0; i < realizations; ++i) {
        PhaseField f = sample_phase_field(dist, box, sample_seed(seed, "combes-thomas", i));
        CombesThomasResult res =
            combes_thomas_profile(build_U_neumann(p, f), z, origin, max_dist);
        for (std::size_t n = 0; n < res.profile.distances.size(); ++n)
            cs << i << "," << res.profile.distances[n] << ","
               << csv_num(res.profile.values[n]) << "," << csv_num(res.b_fit) << ","
               << csv_num(res.dist) << "," << csv_num(res.profile.fit.rate) << ","
               << csv_num(res.profile.fit.r_squared) << "\n";
    }
}

// ---------------------------------------------------------------------------
// experiment: second-moment
// ---------------------------------------------------------------------------

inline std::vector<std::string> validate_second_moment(const Config& c) {
    std::vector<std::string> v;
    detail::check_seed_workers(c, v);
    auto p = detail::model_if_valid(c, v);
    auto dist = detail::phases_if_valid(c, v);
    if (!detail::require_keys(
            c, {"second-moment.z_abs_list", "second-moment.s", "second-moment.samples"}, v) ||
        !p || !dist)
        return v;
    try {
        if (p->d != 1) v.push_back("second-moment: experiment geometry is 1-D (set model.d = 1)");
        for (double za : c.get_double_list("second-moment.z_abs_list"))
            if (!(za > 0.0 && za < 1.0))
                v.push_back("second_moment_ratio: need |z| < 1 (and > 0), got z_abs=" +
                            csv_num(za));
        const double s = c.get_double("second-moment.s");
        if (!(s > 0.0 && s < 1.0)) v.push_back("second-moment: s must be in (0,1)");
        const std::int64_t sites = c.get_int("second-moment.sites", 20);
        if (sites < 12 || sites % 2 != 0)
            v.push_back("second-moment: sites must be even and >= 12");
        const std::int64_t k = c.get_int("second-moment.k", sites / 2);
        const std::int64_t l = c.get_int("second-moment.l", 4);
        if (k < 0 || k >= sites || l < 0 || l >= sites)
            v.push_back("second-moment: probe sites k, l must lie inside [0, sites)");
        if (c.get_int("second-moment.samples") < 2)
            v.push_back("second-moment: samples must be >= 2");
    } catch (const std::exception& e) {
        v.push_back(e.what());
    }
    return v;
}

inline void run_second_moment(const Config& c, OutputStage& out) {
    const ModelParams p = detail::model_from(c);
    const PhaseDistribution dist = detail::phases_from(c);
    const std::uint64_t seed = detail::seed_from(c);
    const int workers = detail::workers_from(c);
    const double s = c.get_double("second-moment.s");
    const double z_arg = c.get_double("second-moment.z_arg", 0.0);
    const int sites = static_cast<int>(c.get_int("second-moment.sites", 20));
    const int k = static_cast<int>(c.get_int("second-moment.k", sites / 2));
    const int l = static_cast<int>(c.get_int("second-moment.l", 4));
    const std::int64_t samples = c.get_int("second-moment.samples");
    LatticeBox box = LatticeBox::interval(0, sites - 1);

    auto& cs = out.csv("estimators.csv", "quantity,parameters,value,stderr,samples");
    for (double za : c.get_double_list("second-moment.z_abs_list")) {
        SecondMomentRatio r = second_moment_ratio(p, dist, box, std::polar(za, z_arg), Site{k},
                                                  Site{l}, s, samples, seed, workers);
        const std::string pars =
            ParamList()("z_abs", za)("z_arg", z_arg)("s", s)("k", k)("l", l).str();
        cs << "second_moment_lhs," << pars << "," << csv_num(r.lhs.mean) << ","
           << csv_num(r.lhs.se) << "," << r.lhs.n << "\n";
        cs << "second_moment_rhs," << pars << "," << csv_num(r.rhs.mean) << ","
           << csv_num(r.rhs.se) << "," << r.rhs.n << "\n";
        cs << "second_moment_ratio," << pars << "," << csv_num(r.ratio) << ",0," << r.lhs.n
           << "\n";
    }
}

// ---------------------------------------------------------------------------
// experiment: ckm
// ---------------------------------------------------------------------------

inline std::vector<std::string> validate_ckm(const Config& c) {
    std::vector<std::string> v;
    detail::check_seed_workers(c, v);
    auto p = detail::model_if_valid(c, v);
    auto dist = detail::phases_if_valid(c, v);
    if (!detail::require_keys(c, {"ckm.z_abs", "ckm.delta", "ckm.n_list", "ckm.samples"}, v) ||
        !p || !dist)
        return v;
    try {
        if (p->d != 1) v.push_back("ckm: transfer-matrix experiments require model.d = 1");
        if (!(c.get_double("ckm.z_abs") > 0.0)) v.push_back("ckm: z_abs must be positive");
        const double delta = c.get_double("ckm.delta");
        if (!(delta > 0.0 && delta < 1.0))
            v.push_back("ckm_moment: delta must be in (0,1)");
        auto ns = c.get_int_list("ckm.n_list");
        if (ns.empty() || ns.front() < 0 || !detail::strictly_increasing(ns))
            v.push_back("ckm: n_list must be strictly increasing and >= 0");
        if (c.get_int("ckm.samples") < 1) v.push_back("ckm_moment: need samples >= 1");
    } catch (const std::exception& e) {
        v.push_back(e.what());
    }
    return v;
}

inline void run_ckm(const Config& c, OutputStage& out) {
    const ModelParams p = detail::model_from(c);
    const PhaseDistribution dist = detail::phases_from(c);
    const cplx z = detail::z_from(c, "ckm");
    const double delta = c.get_double("ckm.delta");
    const std::int64_t samples = c.get_int("ckm.samples");
    const Vec2 v = Vec2(1.0, 0.0);

    std::vector<double> ns, values;
    std::vector<MeanEstimate> ests;
    for (auto n : c.get_int_list("ckm.n_list")) {
        MeanEstimate est = ckm_moment(z, dist, delta, static_cast<int>(n), samples, v,
                                      detail::seed_from(c), p, detail::workers_from(c));
        ns.push_back(static_cast<double>(n));
        values.push_back(est.mean);
        ests.push_back(est);
    }
    DecayFit fit = fit_log_linear(ns, values, 0.0);

    auto& cs = out.csv("ckm.csv", "n,value,stderr,samples,fitted_rate,r_squared");
    for (std::size_t i = 0; i < ns.size(); ++i)
        cs << static_cast<std::int64_t>(ns[i]) << "," << csv_num(values[i]) << ","
           << csv_num(ests[i].se) << "," << ests[i].n << "," << csv_num(fit.rate) << ","
           << csv_num(fit.r_squared) << "\n";
}

// ---------------------------------------------------------------------------
// experiment: identities-suite
// ---------------------------------------------------------------------------

inline std::vector<std::string> validate_identities_suite(const Config& c) {
    std::vector<std::string> v;
    detail::check_seed_workers(c, v);
    auto p = detail::model_if_valid(c, v);
    auto dist = detail::phases_if_valid(c, v);
    if (!p || !dist) return v;
    try {
        if (p->d != 1) v.push_back("identities-suite: set model.d = 1 (interval identities)");
        const std::int64_t sites = c.get_int("identities-suite.sites", 20);
        if (sites < 16 || sites % 4 != 0)
            v.push_back(
                "identities-suite: sites must be a multiple of 4 and >= 16 "
                "(the splitting cut needs an even site with >= 4 sites per side)");
    } catch (const std::exception& e) {
        v.push_back(e.what());
    }
    return v;
}

namespace detail {

inline Mat dense_resolvent(const Mat& u, cplx z) {
    Mat a = u;
    a.diagonal().array() -= z;
    return Eigen::PartialPivLU<Mat>(a).inverse();
}

}  // namespace detail

inline void run_identities_suite(const Config& c, OutputStage& out) {
    const ModelParams p = detail::model_from(c);
    const PhaseDistribution dist = detail::phases_from(c);
    const std::uint64_t seed = detail::seed_from(c);
    const int sites = static_cast<int>(c.get_int("identities-suite.sites", 20));

    auto& cs = out.csv("identities.csv", "quantity,parameters,value,stderr,samples");
    std::vector<std::string> failures;
    auto row = [&](const std::string& quantity, std::string pars, double value, double tol) {
        if (!pars.empty()) pars += ';';
        pars += "tol=" + csv_num(tol);
        cs << quantity << "," << pars << "," << csv_num(value) << ",0,1\n";
        if (!(value <= tol))
            failures.push_back(quantity + " = " + csv_num(value) + " > " + csv_num(tol));
    };
    const std::string base = ParamList()("t", p.t)("sites", sites).str();

    // Interval operator with Neumann ends and its rank-one splitting.
    LatticeBox box = LatticeBox::interval(0, sites - 1);
    PhaseField field = sample_phase_field(dist, box, sample_seed(seed, "identities", 1));
    BandedUnitary u = build_U_neumann(p, field);
    Mat udense = u.to_dense();
    row("unitarity_defect", base, unitarity_defect(udense), 1e-12);

    const int cut = sites / 2;
    SplittingData split = splitting_data(p, cut, field);
    row("splitting_beta_error", base, std::abs(split.beta - (-p.lambda0)), 1e-12);
    {
        BandedUnitary u1 = build_U_neumann(p, restrict_field(field, split.left));
        BandedUnitary u2 = build_U_neumann(p, restrict_field(field, split.right));
        Mat usplit = Mat(embed_on(box, u1) + embed_on(box, u2));
        Vec dpsi = split.psi;
        for (std::int64_t k = 0; k < dpsi.size(); ++k)
            dpsi(k) *= std::exp(-kI * field.at_index(k));
        Mat recon = usplit + dpsi * split.phi.adjoint();
        row("splitting_reconstruction_error", base, max_norm(udense - recon), 1e-14);
    }

    // Transfer-matrix determinant over random draws, and the cocycle variant.
    {
        CounterRng rng(sample_seed(seed, "identities", 0));
        double worst = 0.0;
        for (std::size_t i = 0; i < 20; ++i) {
            cplx z = std::polar(0.5 + rng.unit(3 * i), 2.0 * kPi * rng.unit(3 * i + 1));
            double theta = 2.0 * kPi * rng.unit(3 * i + 2);
            double eta = 2.0 * kPi * rng.unit(3 * i + 50000);
            cplx det = transfer_matrix(z, theta, eta, p).determinant();
            worst = std::max(worst, std::abs(det - std::exp(kI * (theta - eta))));
        }
        row("transfer_det_error", base, worst, 1e-14);

        // The raw determinant of the accumulated product is ill-conditioned
        // (error ~ ||cocycle||^2 eps), so multiply the per-factor determinants,
        // which is the same quantity exactly.
        const int levels = std::min(5, sites / 2 - 1);
        cplx z = std::polar(1.2, 0.9);
        cplx det(1.0, 0.0), expected(1.0, 0.0);
        for (int k = 0; k < levels; ++k) {
            det *= transfer_matrix(z, field.at(2 * k), field.at(2 * k + 1), p).determinant();
            expected *= std::exp(kI * (field.at(2 * k) - field.at(2 * k + 1)));
        }
        row("cocycle_det_error", base, std::abs(det - expected), 1e-12);
    }

    // Cocycle propagation of a directly computed eigenvector (eta = 0 ends).
    {
        BoundarySpec bc = BoundarySpec::with_eta(0.0, 0.0);
        BandedUnitary u_eta = build_U(field, build_S_interval(p, 0, sites - 1, bc));
        Eigen::ComplexEigenSolver<Mat> es(u_eta.to_dense(), true);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("identities-suite: eigensolver failed");
        std::int64_t pick = 0;
        double best_gap = -1.0;
        for (std::int64_t i = 0; i < es.eigenvalues().size(); ++i) {
            double g = std::numeric_limits<double>::infinity();
            for (std::int64_t j = 0; j < es.eigenvalues().size(); ++j)
                if (j != i) g = std::min(g, std::abs(es.eigenvalues()(i) - es.eigenvalues()(j)));
            if (g > best_gap) {
                best_gap = g;
                pick = i;
            }
        }
        const cplx mu = es.eigenvalues()(pick);
        Vec phi = es.eigenvectors().col(pick);
        const double scale = phi.cwiseAbs().maxCoeff();
        Vec2 v0((1.0 - p.r) / p.t * phi(0), phi(0));  // ghost entry for the eta = 0 end
        double worst = 0.0;
        for (int m = 1; 2 * m < sites; ++m) {
            Vec2 vm = cocycle(mu, field, m, p) * v0;
            worst = std::max(worst, std::abs(vm(0) - phi(2 * m - 1)) / scale);
            worst = std::max(worst, std::abs(vm(1) - phi(2 * m)) / scale);
        }
        row("cocycle_propagation_error", base, worst, 1e-8);
    }

    // Green's function via two boundary solutions, and the corner closed form.
    {
        BoundarySpec bc = BoundarySpec::with_eta(0.0, 0.0);
        const cplx z = std::polar(1.3, 0.7);
        BandedUnitary u_eta = build_U(field, build_S_interval(p, 0, sites - 1, bc));
        Resolvent res(u_eta, z);
        double worst = 0.0;
        for (int l = 0; l < sites; ++l) {
            Vec col = res.column(l);
            for (int k = 0; k < sites; ++k) {
                cplx direct = col(k);
                cplx via = green_via_solutions(p, field, box, z, k, l, bc);
                worst = std::max(worst, std::abs(via - direct) /
                                            std::max(std::abs(direct), 1e-14));
            }
        }
        row("green_two_solution_error", base, worst, 1e-8);

        LatticeBox even_box = LatticeBox::interval(0, sites - 2);
        PhaseField ef = restrict_field(field, even_box);
        BandedUnitary u_even = build_U(ef, build_S_interval(p, 0, sites - 2, bc));
        cplx direct = Resolvent(u_even, z).entry(0, sites - 2);
        cplx corner = green_corner_closed_form(p, ef, even_box, z);
        row("green_corner_error", base, std::abs(corner - direct) / std::abs(direct), 1e-8);
    }

    // Geometric resolvent factorization through two cube layers.
    {
        const int L = 3;
        LatticeBox world = cube_layer_box(L + 4, 1);
        PhaseField wf = sample_phase_field(dist, world, sample_seed(seed, "identities", 2));
        GeometricResidual gr = geometric_resolvent_residual(
            p, wf, L, Site{6}, std::polar(1.5, p.lambda0));
        const std::string gpars = ParamList()("t", p.t)("L", L)("y", 6).str();
        row("geometric_factorization_error", gpars, gr.factorization, 1e-10);
        row("geometric_double_resolvent_error", gpars, gr.double_resolvent, 1e-10);
        row("geometric_vanishing_block", gpars, gr.vanishing_block, 0.0);
    }

    // Derivative of the tracked top eigenvalue angle vs a centered difference.
    {
        InterpolationFamily fam = make_interpolation_family(p, field);
        const double theta_M = *std::max_element(field.theta.begin(), field.theta.end());
        const double alpha = 0.5, h = 1e-5;
        EigenPair pair = top_eigenpair(fam, alpha, theta_M);
        double analytic = feynman_hellmann_derivative(fam, pair);
        EigenPair plus = continued_eigenpair(fam, alpha + h, pair.vector);
        EigenPair minus = continued_eigenpair(fam, alpha - h, pair.vector);
        double fd = arg_principal(plus.value / minus.value) / (2.0 * h);
        row("feynman_hellmann_error", base, std::abs(analytic - fd), 1e-6);
    }

    // Resolvent identities on the Neumann interval operator.
    {
        const cplx z1 = std::polar(1.3, 0.7), z2 = std::polar(0.7, -0.4);
        Mat g1 = detail::dense_resolvent(udense, z1);
        Mat g2 = detail::dense_resolvent(udense, z2);
        row("resolvent_identity_error", base, max_norm(g1 - g2 - (z1 - z2) * (g1 * g2)), 1e-10);

        Mat modified = (udense + z1 * Mat::Identity(udense.rows(), udense.cols())) * g1;
        Mat back = (modified - Mat::Identity(udense.rows(), udense.cols())) / (2.0 * z1);
        row("modified_resolvent_error", base, max_norm(back - g1), 1e-10);

        const cplx zr = cplx(1.0, 0.0) / std::conj(z1);  // reflected point 1 / conj(z1)
        Mat gr = detail::dense_resolvent(udense, zr);
        Mat lhs = g1.adjoint();
        Mat rhs = -(1.0 / std::conj(z1)) * (udense * gr);
        row("reflection_identity_error", base, max_norm(lhs - rhs), 1e-10);
    }

    if (!failures.empty()) {
        std::string msg = "identity checks failed:";
        for (const auto& f : failures) msg += " [" + f + "]";
        throw std::runtime_error(msg);
    }
}

// ---------------------------------------------------------------------------
// registry and the run / validate / sweep drivers
// ---------------------------------------------------------------------------

struct ExperimentDef {
    const char* name;
    std::vector<std::string> (*validate)(const Config&);
    void (*run)(const Config&, OutputStage&);
};

inline const std::vector<ExperimentDef>& experiment_registry() {
    static const std::vector<ExperimentDef> defs = {
        {"neumann-spectrum", validate_neumann_spectrum, run_neumann_spectrum},
        {"lifshitz", validate_lifshitz, run_lifshitz},
        {"lyapunov", validate_lyapunov, run_lyapunov},
        {"fractional-decay", validate_fractional_decay, run_fractional_decay},
        {"dynamical", validate_dynamical, run_dynamical},
        {"combes-thomas", validate_combes_thomas, run_combes_thomas},
        {"identities-suite", validate_identities_suite, run_identities_suite},
        {"second-moment", validate_second_moment, run_second_moment},
        {"ckm", validate_ckm, run_ckm},
    };
    return defs;
}

inline const ExperimentDef* find_experiment(const std::string& name) {
    for (const auto& def : experiment_registry())
        if (name == def.name) return &def;
    return nullptr;
}

inline std::vector<std::string> validate_experiment(const Config& c) {
    if (!c.has("experiment.name")) return {"missing key: experiment.name"};
    const std::string name = c.get_string("experiment.name");
    const ExperimentDef* def = find_experiment(name);
    if (!def) return {"unknown experiment: " + name};
    return def->validate(c);
}

// Output directory resolution: experiment.output, then $ULAB_OUTPUT_DIR/<name>,
// then ./out/<name>.
inline std::string resolve_output_dir(const Config& c) {
    if (c.has("experiment.output")) return c.get_string("experiment.output");
    const std::string name = c.get_string("experiment.name", "experiment");
    if (const char* env = std::getenv("ULAB_OUTPUT_DIR"); env && *env)
        return std::string(env) + "/" + name;
    return "out/" + name;
}

// Validate, run, and persist one experiment; returns the written manifest.
// Throws ValidationError on config violations, anything else on runtime
// failure (partial outputs are removed either way).
inline nlohmann::json run_experiment(const Config& c, const std::string& out_dir) {
    std::vector<std::string> violations = validate_experiment(c);
    if (!violations.empty()) throw ValidationError(std::move(violations));
    const ExperimentDef* def = find_experiment(c.get_string("experiment.name"));
    OutputStage stage(out_dir);
    def->run(c, stage);
    return stage.commit(def->name, c);
}

// ---------------------------------------------------------------------------
// sweep driver
// ---------------------------------------------------------------------------

struct SweepPoint {
    std::string label;
    std::vector<std::pair<std::string, std::string>> overrides;
};

struct SweepPlan {
    std::vector<std::string> keys;
    std::vector<SweepPoint> points;
};

// Expand [sweep] grid = key1, key2 (each with its own value list under
// [sweep]) into the Cartesian product, last key fastest.
inline SweepPlan sweep_plan(const Config& c) {
    SweepPlan plan;
    if (!c.has("sweep.grid")) return plan;
    plan.keys = c.get_string_list("sweep.grid");
    if (plan.keys.empty()) return plan;
    std::vector<std::vector<std::string>> values;
    for (const auto& k : plan.keys) {
        if (!c.has("sweep." + k)) return plan;  // caught by validate_sweep
        values.push_back(c.get_string_list("sweep." + k));
        if (values.back().empty()) {
            plan.points.clear();
            return plan;  // empty axis -> empty grid
        }
    }
    std::size_t total = 1;
    for (const auto& vs : values) total *= vs.size();
    std::vector<std::size_t> idx(plan.keys.size(), 0);
    for (std::size_t i = 0; i < total; ++i) {
        SweepPoint pt;
        std::ostringstream label;
        label << "point_" << std::setw(3) << std::setfill('0') << i;
        pt.label = label.str();
        for (std::size_t k = 0; k < plan.keys.size(); ++k)
            pt.overrides.emplace_back(plan.keys[k], values[k][idx[k]]);
        plan.points.push_back(std::move(pt));
        for (std::size_t k = plan.keys.size(); k-- > 0;) {
            if (++idx[k] < values[k].size()) break;
            idx[k] = 0;
        }
    }
    return plan;
}

inline Config apply_overrides(Config c, const SweepPoint& pt) {
    for (const auto& kv : pt.overrides) c.set(kv.first, kv.second);
    return c;
}

inline std::vector<std::string> validate_sweep(const Config& c) {
    std::vector<std::string> v;
    if (!c.has("experiment.name")) v.push_back("missing key: experiment.name");
    if (!c.has("sweep.grid")) {
        v.push_back("missing key: sweep.grid");
        return v;
    }
    const auto keys = c.get_string_list("sweep.grid");
    if (keys.size() > 3) v.push_back("sweep: grid has more than 3 dimensions");
    for (const auto& k : keys) {
        if (k == "experiment.name") v.push_back("sweep: experiment.name cannot be swept");
        if (!c.has("sweep." + k)) v.push_back("sweep: missing value list for grid key " + k);
    }
    if (!v.empty()) return v;
    SweepPlan plan = sweep_plan(c);
    std::int64_t budget = 64;
    try {
        budget = c.get_int("sweep.budget", 64);
    } catch (const std::exception& e) {
        v.push_back(e.what());
        return v;
    }
    if (static_cast<std::int64_t>(plan.points.size()) > budget)
        v.push_back("sweep: " + std::to_string(plan.points.size()) +
                    " grid points exceed the budget of " + std::to_string(budget));
    for (const auto& pt : plan.points) {
        std::ostringstream ov;
        for (const auto& kv : pt.overrides) ov << " " << kv.first << "=" << kv.second;
        for (const auto& s : validate_experiment(apply_overrides(c, pt)))
            v.push_back(pt.label + " (" + ov.str().substr(1) + "): " + s);
    }
    return v;
}

namespace detail {

// Removes a directory tree on scope exit unless disarmed.
struct DirGuard {
    std::filesystem::path path;
    bool armed = true;
    ~DirGuard() {
        if (armed) {
            std::error_code ec;
            std::filesystem::remove_all(path, ec);
        }
    }
};

}  // namespace detail

// Run every grid point into a staging area, then merge each output into one
// shared CSV per name (rows prefixed with the point label) and write a single
// shared manifest.  An empty grid writes nothing.  On failure the staging
// area and any partially merged file are removed.
inline nlohmann::json run_sweep(const Config& c, const std::string& out_root) {
    std::vector<std::string> violations = validate_sweep(c);
    if (!violations.empty()) throw ValidationError(std::move(violations));
    SweepPlan plan = sweep_plan(c);
    if (plan.points.empty()) return nlohmann::json::object();

    const std::string started = iso_utc_now();
    std::filesystem::create_directories(out_root);
    const std::string tmp_root = out_root + "/.sweep_tmp";
    detail::DirGuard guard{tmp_root};

    std::vector<nlohmann::json> manifests;
    for (const auto& pt : plan.points)
        manifests.push_back(
            run_experiment(apply_overrides(c, pt), tmp_root + "/" + pt.label));

    // Merge per-point CSVs; every point produces the same output set.
    std::vector<std::string> names;
    for (const auto& o : manifests.front()["outputs"]) names.push_back(o["file"]);
    nlohmann::json j;
    j["experiment"] = c.get_string("experiment.name");
    j["version"] = version_string();
    j["started"] = started;
    j["config"] = nlohmann::json::object();
    for (const auto& kv : c.raw()) j["config"][kv.first] = kv.second;
    j["sweep"] = {{"keys", plan.keys}, {"points", nlohmann::json::array()}};
    for (const auto& pt : plan.points) {
        nlohmann::json overrides = nlohmann::json::object();
        for (const auto& kv : pt.overrides) overrides[kv.first] = kv.second;
        j["sweep"]["points"].push_back({{"label", pt.label}, {"overrides", overrides}});
    }
    j["outputs"] = nlohmann::json::array();

    std::vector<std::pair<std::string, std::string>> staged;  // tmp path -> final path
    try {
        for (const auto& name : names) {
            std::string merged;
            for (std::size_t i = 0; i < plan.points.size(); ++i) {
                std::string text =
                    read_file_bytes(tmp_root + "/" + plan.points[i].label + "/" + name);
                auto nl = text.find('\n');
                if (nl == std::string::npos)
                    throw std::runtime_error("sweep: malformed output " + name);
                if (i == 0) merged = "point," + text.substr(0, nl + 1);
                std::size_t pos = nl + 1;
                while (pos < text.size()) {
                    auto end = text.find('\n', pos);
                    std::string line = end == std::string::npos ? text.substr(pos) + "\n"
                                                                : text.substr(pos, end - pos + 1);
                    merged += plan.points[i].label + "," + line;
                    pos = end == std::string::npos ? text.size() : end + 1;
                }
            }
            const std::string tmp = out_root + "/" + name + ".tmp";
            std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
            if (!f) throw std::runtime_error("sweep: cannot open '" + tmp + "'");
            f << merged;
            if (!f) throw std::runtime_error("sweep: write failed on " + name);
            f.close();
            staged.emplace_back(tmp, out_root + "/" + name);
            j["outputs"].push_back(
                {{"file", name}, {"bytes", merged.size()}, {"fnv1a64", fnv1a64_hex(merged)}});
        }
        j["finished"] = iso_utc_now();
        for (auto& st : staged) {
            std::filesystem::rename(st.first, st.second);
            st.first = st.second;  // track the renamed location for cleanup
        }
        const std::string mtmp = out_root + "/manifest.json.tmp";
        std::ofstream m(mtmp, std::ios::binary | std::ios::trunc);
        if (!m) throw std::runtime_error("sweep: cannot open '" + mtmp + "'");
        m << j.dump(2) << "\n";
        if (!m) throw std::runtime_error("sweep: manifest write failed");
        m.close();
        std::filesystem::rename(mtmp, out_root + "/manifest.json");
    } catch (...) {
        std::error_code ec;
        for (const auto& st : staged) std::filesystem::remove(st.first, ec);
        std::filesystem::remove(out_root + "/manifest.json.tmp", ec);
        throw;
    }
    return j;
}

}  // namespace ulab

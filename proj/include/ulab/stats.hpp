#pragma once
// Compensated summation, streaming-free reductions, least-squares fits and a
// deterministic parallel map.
//
// All Monte Carlo reductions follow one pattern: workers write per-sample
// values into pre-sized slots (index = sample index), then a single thread
// reduces the slots with compensated (Neumaier) summation.  The reduction is
// therefore bit-identical for any worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace ulab {

// ---------------------------------------------------------------------------
// compensated summation
// ---------------------------------------------------------------------------

class NeumaierSum {
  public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(const std::vector<double>& v) {
    NeumaierSum s;
    for (double x : v) s.add(x);
    return s.value();
}

struct MeanEstimate {
    double mean = 0.0;
    double se = 0.0;  // standard error of the mean
    std::size_t n = 0;
};

// Two-pass mean / standard error with compensated sums (order-stable).
inline MeanEstimate mean_and_stderr(const std::vector<double>& v) {
    MeanEstimate out;
    out.n = v.size();
    if (v.empty()) return out;
    out.mean = compensated_sum(v) / static_cast<double>(v.size());
    if (v.size() < 2) return out;
    NeumaierSum sq;
    for (double x : v) {
        double d = x - out.mean;
        sq.add(d * d);
    }
    double var = sq.value() / static_cast<double>(v.size() - 1);
    if (var < 0.0) var = 0.0;
    out.se = std::sqrt(var / static_cast<double>(v.size()));
    return out;
}

// ---------------------------------------------------------------------------
// least squares
// ---------------------------------------------------------------------------

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t n_used = 0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("fit_line: size mismatch");
    LineFit f;
    f.n_used = x.size();
    if (x.size() < 2) throw std::invalid_argument("fit_line: need at least 2 points");
    NeumaierSum sx, sy;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx.add(x[i]);
        sy.add(y[i]);
    }
    double n = static_cast<double>(x.size());
    double mx = sx.value() / n, my = sy.value() / n;
    NeumaierSum sxx, sxy;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx.add((x[i] - mx) * (x[i] - mx));
        sxy.add((x[i] - mx) * (y[i] - my));
    }
    if (sxx.value() == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
    f.slope = sxy.value() / sxx.value();
    f.intercept = my - f.slope * mx;
    NeumaierSum ss_res, ss_tot;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double r = y[i] - (f.intercept + f.slope * x[i]);
        ss_res.add(r * r);
        ss_tot.add((y[i] - my) * (y[i] - my));
    }
    f.r_squared = ss_tot.value() > 0.0 ? 1.0 - ss_res.value() / ss_tot.value()
                                       : (ss_res.value() == 0.0 ? 1.0 : 0.0);
    return f;
}

// Log-linear decay fit: value ~ prefactor * exp(-rate * distance).  Values at
// or below `floor` are dropped before taking logs (noise floor).
struct DecayFit {
    double rate = 0.0;       // decay exponent per unit distance (>0 = decay)
    double prefactor = 0.0;  // value extrapolated to distance 0
    double r_squared = 0.0;
    std::size_t n_used = 0;
};

inline DecayFit fit_log_linear(const std::vector<double>& distances,
                               const std::vector<double>& values, double floor) {
    if (distances.size() != values.size())
        throw std::invalid_argument("fit_log_linear: size mismatch");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] > floor && std::isfinite(values[i])) {
            xs.push_back(distances[i]);
            ys.push_back(std::log(values[i]));
        }
    }
    DecayFit out;
    out.n_used = xs.size();
    if (xs.size() < 2) return out;  // nothing fittable; rate 0, r^2 0
    LineFit lf = fit_line(xs, ys);
    out.rate = -lf.slope;
    out.prefactor = std::exp(lf.intercept);
    out.r_squared = lf.r_squared;
    return out;
}

// ---------------------------------------------------------------------------
// goodness of fit for sampled distributions
// ---------------------------------------------------------------------------

// Kolmogorov-Smirnov statistic of samples against a CDF.
inline double ks_statistic(std::vector<double> samples,
                           const std::function<double(double)>& cdf) {
    if (samples.empty()) throw std::invalid_argument("ks_statistic: empty sample");
    std::sort(samples.begin(), samples.end());
    double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double f = cdf(samples[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    }
    return d;
}

// ---------------------------------------------------------------------------
// deterministic parallel map
// ---------------------------------------------------------------------------

// Runs f(i) for i in [0, n) on `workers` threads pulling indices from a
// shared counter.  f must write only to its own slot; the first exception
// thrown by any worker is re-thrown on the calling thread.
template <typename F>
inline void parallel_for(std::size_t n, int workers, F&& f) {
    if (n == 0) return;
    if (workers <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    std::vector<std::thread> pool;
    pool.reserve(count);
    for (std::size_t k = 0; k < count; ++k) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace ulab

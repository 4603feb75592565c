// Numeric and concurrency primitives: compensated sums, fits, the KS
// statistic, the deterministic parallel map and the counter-based RNG.

#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "ulab/core.hpp"
#include "ulab/rng.hpp"
#include "ulab/stats.hpp"

using namespace ulab;

TEST_CASE("neumaier summation recovers what naive summation drops") {
    // 1 followed by many 1e-16 terms: naively the small terms vanish.
    NeumaierSum s;
    s.add(1.0);
    for (int i = 0; i < 100000; ++i) s.add(1e-16);
    CHECK(s.value() == Catch::Approx(1.0 + 1e-11).epsilon(1e-12));

    // The classic cancellation pair.
    NeumaierSum c;
    c.add(1e100);
    c.add(1.0);
    c.add(-1e100);
    CHECK(c.value() == 1.0);

    CHECK(compensated_sum({}) == 0.0);
    CHECK(compensated_sum({2.5, -1.5}) == 1.0);
}

TEST_CASE("mean and standard error") {
    MeanEstimate e = mean_and_stderr({1.0, 2.0, 3.0, 4.0});
    CHECK(e.n == 4);
    CHECK(e.mean == Catch::Approx(2.5));
    // sample variance 5/3, se = sqrt(5/12)
    CHECK(e.se == Catch::Approx(std::sqrt(5.0 / 12.0)));

    MeanEstimate single = mean_and_stderr({7.0});
    CHECK(single.mean == 7.0);
    CHECK(single.se == 0.0);

    MeanEstimate empty = mean_and_stderr({});
    CHECK(empty.n == 0);
    CHECK(empty.mean == 0.0);
}

TEST_CASE("line fit recovers exact lines and rejects degenerate input") {
    std::vector<double> x{0, 1, 2, 3, 4};
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 - 2.0 * v);
    LineFit f = fit_line(x, y);
    CHECK(f.slope == Catch::Approx(-2.0).margin(1e-14));
    CHECK(f.intercept == Catch::Approx(3.0).margin(1e-14));
    CHECK(f.r_squared == Catch::Approx(1.0).margin(1e-14));
    CHECK(f.n_used == 5);

    CHECK_THROWS_AS(fit_line({1.0}, {2.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_line({1.0, 2.0}, {2.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_line({2.0, 2.0, 2.0}, {1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("log-linear decay fit") {
    std::vector<double> d{1, 2, 3, 4, 5, 6};
    std::vector<double> v;
    for (double x : d) v.push_back(0.7 * std::exp(-0.35 * x));
    DecayFit f = fit_log_linear(d, v, 0.0);
    CHECK(f.rate == Catch::Approx(0.35).margin(1e-12));
    CHECK(f.prefactor == Catch::Approx(0.7).margin(1e-12));
    CHECK(f.r_squared == Catch::Approx(1.0).margin(1e-12));
    CHECK(f.n_used == 6);

    // Values at or below the floor are dropped before the logs.
    std::vector<double> noisy = v;
    noisy[3] = 1e-30;
    DecayFit g = fit_log_linear(d, noisy, 1e-20);
    CHECK(g.n_used == 5);
    CHECK(g.rate == Catch::Approx(0.35).margin(1e-12));

    // Fewer than two usable points: flat result, nothing to fit.
    DecayFit h = fit_log_linear({1.0, 2.0}, {0.5, 0.0}, 0.0);
    CHECK(h.n_used == 1);
    CHECK(h.rate == 0.0);
    CHECK(h.r_squared == 0.0);
}

TEST_CASE("kolmogorov-smirnov statistic") {
    auto uniform_cdf = [](double x) { return std::min(1.0, std::max(0.0, x)); };
    // Perfectly spaced quantiles: D = 1/(2n).
    std::vector<double> q;
    for (int i = 0; i < 10; ++i) q.push_back((i + 0.5) / 10.0);
    CHECK(ks_statistic(q, uniform_cdf) == Catch::Approx(0.05).margin(1e-12));
    // Grossly wrong distribution: D near 1.
    std::vector<double> clump(50, 0.999);
    CHECK(ks_statistic(clump, uniform_cdf) > 0.9);
    CHECK_THROWS_AS(ks_statistic({}, uniform_cdf), std::invalid_argument);
}

TEST_CASE("parallel_for fills slots identically for any worker count") {
    const std::size_t n = 1000;
    auto run = [&](int workers) {
        std::vector<double> slots(n, 0.0);
        parallel_for(n, workers, [&](std::size_t i) {
            slots[i] = std::sin(static_cast<double>(i)) * 1e-3 + static_cast<double>(i);
        });
        return slots;
    };
    std::vector<double> serial = run(1);
    CHECK(run(4) == serial);
    CHECK(run(8) == serial);

    // Every index is visited exactly once.
    std::vector<std::atomic<int>> visits(64);
    parallel_for(64, 8, [&](std::size_t i) { visits[i].fetch_add(1); });
    for (auto& v : visits) CHECK(v.load() == 1);

    // n = 0 is a no-op.
    parallel_for(0, 8, [](std::size_t) { throw std::logic_error("must not run"); });
}

TEST_CASE("parallel_for rethrows the first worker exception") {
    CHECK_THROWS_WITH(parallel_for(100, 4,
                                   [](std::size_t i) {
                                       if (i == 37) throw std::runtime_error("slot 37 boom");
                                   }),
                      "slot 37 boom");
}

TEST_CASE("seed derivation separates experiments and samples") {
    const std::uint64_t master = 42;
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(sample_seed(master, "alpha", i));
    CHECK(seen.size() == 1000);

    CHECK(sample_seed(master, "alpha", 0) != sample_seed(master, "beta", 0));
    CHECK(sample_seed(master, "alpha", 0) != sample_seed(master + 1, "alpha", 0));
    // Pure function of its arguments.
    CHECK(sample_seed(7, "gamma", 3) == sample_seed(7, "gamma", 3));
}

TEST_CASE("counter rng draws are order independent and in range") {
    CounterRng rng(12345);
    std::vector<double> forward;
    for (std::uint64_t i = 0; i < 100; ++i) forward.push_back(rng.unit(i));
    for (std::uint64_t i = 100; i-- > 0;) CHECK(rng.unit(i) == forward[i]);
    for (double u : forward) {
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    // Distinct seeds decorrelate draw 0.
    CHECK(CounterRng(1).unit(0) != CounterRng(2).unit(0));
    // mix64 is a bijection-grade mixer: no collisions over a small scan.
    std::set<std::uint64_t> bits;
    for (std::uint64_t i = 0; i < 4096; ++i) bits.insert(mix64(i));
    CHECK(bits.size() == 4096);
}

TEST_CASE("matrix norms and unitarity checks") {
    Mat id = Mat::Identity(4, 4);
    CHECK(unitarity_defect(id) == 0.0);
    CHECK(max_norm(Mat::Zero(3, 3)) == 0.0);

    Mat m(2, 2);
    m << cplx(1, 0), cplx(0, -3), cplx(0.5, 0), cplx(0, 0);
    CHECK(max_norm(m) == 3.0);
    CHECK_THROWS_AS(unitarity_defect(Mat::Zero(2, 3)), std::invalid_argument);

    // Power iteration reproduces the norm of a diagonal matrix.
    Mat d = Mat::Zero(3, 3);
    d(0, 0) = 2.0;
    d(1, 1) = cplx(0, 0.5);
    d(2, 2) = -1.0;
    CHECK(operator_norm_power(d, 60) == Catch::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("angle helpers use the principal branch (-pi, pi]") {
    CHECK(arg_principal(cplx(1, 0)) == 0.0);
    CHECK(arg_principal(cplx(-1, 0)) == Catch::Approx(kPi));
    // The lower endpoint folds onto +pi so each angle has one representative.
    CHECK(arg_principal(std::exp(kI * (-kPi))) == Catch::Approx(kPi));
    CHECK(wrap_angle(3.0 * kPi) == Catch::Approx(kPi));
    CHECK(wrap_angle(-kPi) == Catch::Approx(kPi));
    CHECK(wrap_angle(0.3 - 4.0 * kPi) == Catch::Approx(0.3));
}

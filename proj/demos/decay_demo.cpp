// Fractional-moment decay of the Green's function off the unit circle: the
// sample mean of |G(k, l)|^s falls off exponentially in |k - l| at strong
// disorder, here on a short 1-D ladder so the demo runs in seconds.

#include <cstdio>

#include "ulab/moments.hpp"

int main() {
    using namespace ulab;
    ModelParams p(0.5);
    PhaseDistribution dist = PhaseDistribution::uniform(0.0, 2.0 * kPi);
    const cplx z = std::polar(1.001, 0.3);
    const double s = 0.1;

    DecayProfile prof = decay_experiment(p, dist, z, s, {2, 4, 6, 8, 10, 12}, 400,
                                         /*seed=*/7, /*workers=*/4);
    std::printf("E|G(4, 4+dist)|^s at |z| = %.3f, s = %.2f, 400 samples\n", std::abs(z), s);
    std::printf("%6s %14s %14s\n", "dist", "mean", "stderr");
    for (std::size_t i = 0; i < prof.distances.size(); ++i)
        std::printf("%6d %14.6e %14.6e\n", prof.distances[i], prof.values[i], prof.se[i]);
    std::printf("fit: rate %.4f, prefactor %.4f, r^2 %.4f (%d points)\n", prof.fit.rate,
                prof.fit.prefactor, prof.fit.r_squared, prof.fit.n_used);
    return 0;
}

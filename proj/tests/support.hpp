#pragma once

#include "sigpal/dataset.hpp"
#include "sigpal/rng.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace sigpal::testing {

inline Matrix random_normal(Eigen::Index n, Eigen::Index d, Rng& rng) {
    std::normal_distribution<double> z;
    Matrix x(n, d);
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < n; ++i) x(i, j) = z(rng);
    return x;
}

inline Matrix random_orthogonal(Eigen::Index d, Rng& rng) {
    Eigen::HouseholderQR<Matrix> qr(random_normal(d, d, rng));
    return qr.householderQ() * Matrix::Identity(d, d);
}

/// Asymptotic Kolmogorov-Smirnov p-value against Uniform(0, 1), with Stephens'
/// small-sample correction of the statistic.
inline double ks_uniform_pvalue(std::vector<double> p) {
    std::sort(p.begin(), p.end());
    const double n = static_cast<double>(p.size());
    double dmax = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double u = std::clamp(p[i], 0.0, 1.0);
        dmax = std::max({dmax, (static_cast<double>(i) + 1.0) / n - u, u - static_cast<double>(i) / n});
    }
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * dmax;
    if (lambda < 1e-3) return 1.0;
    double q = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        q += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(q, 0.0, 1.0);
}

struct SlopeTest {
    double slope;
    double p_decreasing;  ///< one-sided p-value for slope < 0
};

/// Ordinary least squares of y on x with a one-sided t test for a negative slope.
inline SlopeTest slope_test(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    const double slope = sxy / sxx;
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - my - slope * (x[i] - mx);
        rss += e * e;
    }
    const double se = std::sqrt(rss / (n - 2.0) / sxx);
    if (se == 0.0) return {slope, slope < 0.0 ? 0.0 : 1.0};
    boost::math::students_t t(n - 2.0);
    return {slope, boost::math::cdf(t, slope / se)};
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace sigpal::testing

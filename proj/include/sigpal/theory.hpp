#pragma once

#include "sigpal/spectrum.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace sigpal::theory {

/// Population cluster index of the semi-supervised test under N(0, Sigma) when the
/// unlabeled rows are split along the first principal direction. `ratio` is
/// lambda_1 / sum(lambda).
template <typename Scalar>
Scalar tci_sigpal(Scalar theta, Scalar ratio) {
    const Scalar u = Scalar(1) - theta;
    return Scalar(1) + theta - Scalar(2) / std::numbers::pi_v<Scalar> * u * u * u * ratio;
}

template <typename Scalar>
Scalar tci_sigclust(Scalar ratio) {
    return Scalar(1) - Scalar(2) / std::numbers::pi_v<Scalar> * ratio;
}

template <typename Scalar>
Scalar tci_difference(Scalar theta, Scalar ratio) {
    return tci_sigpal(theta, ratio) - tci_sigclust(ratio);
}

/// Per-class lambda_1 coefficient of the population within-class SS:
/// (1 + theta)/2 - (1 - theta)^3 / pi.
template <typename Scalar>
Scalar wss_lambda1_coefficient(Scalar theta) {
    const Scalar u = Scalar(1) - theta;
    return (Scalar(1) + theta) / Scalar(2) - u * u * u / std::numbers::pi_v<Scalar>;
}

/// lambda_1 / sum(lambda) of a spectrum. Throws InvalidInput on an empty or zero-sum spectrum.
double top_ratio(const EigenSpectrum& spectrum);

struct EigenBias {
    double e;        ///< ratio(est) - ratio(truth)
    double delta1;   ///< est lambda_1 - true lambda_1
    double delta;    ///< est sum - true sum
    int predicted_sign;  ///< sign of sum(truth)*delta1 - lambda_1(truth)*delta
};

EigenBias eigen_bias(const EigenSpectrum& est, const EigenSpectrum& truth);

struct McEstimate {
    double mean;
    double standard_error;
};

/// Empirical CI when a theta-fraction of N(0, diag(spectrum)) rows carry uniform +-1
/// labels and the rest are split by the sign of their top-variance coordinate.
McEstimate monte_carlo_tci(double theta, const EigenSpectrum& spectrum, Eigen::Index n, int reps,
                           std::uint64_t seed, int threads = 1);

/// Mixture eta N(0, D) + (1 - eta) N(mu, D) with D = diag(lambda) and mu = a * 1, tested
/// with the constrained-k-means SigPal against the known marginal spectrum. The
/// scaling assumptions on lambda and a (sum lambda = O(d^beta), beta < 1; sum a^2 = O(d);
/// bounded marginal variances) are the caller's responsibility.
struct AsymptoticStudyConfig {
    double eta = 0.5;
    double a = 1.0;
    double lambda = 1.0;        ///< constant diagonal of D
    std::vector<Eigen::Index> d_grid{50, 200, 800};
    int reps = 20;
    Eigen::Index n = 3;
    Eigen::Index labeled_per_class = 1;
    int n_sim = 1000;

    void validate() const;
};

struct AsymptoticRow {
    Eigen::Index d;
    double mean_p;
    double sd_p;
    std::vector<double> p_values;
};

std::vector<AsymptoticRow> asymptotic_pvalue_study(const AsymptoticStudyConfig& config, std::uint64_t seed,
                                                   int threads = 1);

}  // namespace sigpal::theory

#pragma once

#include "sigpal/dataset.hpp"
#include "sigpal/rng.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace sigpal {

enum class SpectrumSource { sample, hard, soft, known };

std::string_view to_string(SpectrumSource s) noexcept;

/// Nonincreasing covariance eigenvalues in variance units.
struct EigenSpectrum {
    Vector values;
    SpectrumSource source = SpectrumSource::sample;
    std::optional<double> noise_level;  ///< background noise variance, thresholded spectra only
    std::optional<double> tau;          ///< soft-threshold shift
    bool energy_preserved = true;       ///< soft: whether the sum could be matched

    Eigen::Index size() const noexcept { return values.size(); }
    double sum() const { return values.sum(); }
};

/// Wraps user-supplied variances. Sorts them nonincreasing; throws InvalidInput on
/// negative or non-finite entries.
EigenSpectrum known_spectrum(Vector values);

/// Eigen-pairs of a symmetric matrix sorted by descending value, ties by original
/// index, eigenvectors sign-normalized so their first nonzero entry is positive.
struct SortedEigen {
    Vector values;
    Matrix vectors;
};
SortedEigen sorted_symmetric_eigen(const Matrix& symmetric);

/// Spectrum of X'X/(n-1) for column-centered X. Uses the n x n Gram matrix when d > n.
EigenSpectrum sample_eigenvalues(const Matrix& centered_x);

/// (MAD of all entries / Phi^{-1}(0.75))^2, MAD taken about the median entry.
double background_noise(const Matrix& x);

/// Inverse standard-normal CDF at 0.75.
inline constexpr double kMadConsistency = 0.6744897501960817;

EigenSpectrum hard_threshold(const EigenSpectrum& sample, double noise_level);

/// Shifts large eigenvalues down by tau and floors the rest at the noise level, with
/// tau chosen so the total is unchanged. When no tau can preserve the total the
/// floored spectrum is returned with tau = 0 and energy_preserved = false.
EigenSpectrum soft_threshold(const EigenSpectrum& sample, double noise_level);

/// n draws from N(0, diag(values)); column j is sqrt(values[j]) times standard normals
/// drawn column by column from `rng`.
Matrix simulate_null(const EigenSpectrum& spectrum, Eigen::Index n, Rng& rng);

}  // namespace sigpal

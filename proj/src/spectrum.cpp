#include "sigpal/spectrum.hpp"

#include "sigpal/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace sigpal {

std::string_view to_string(SpectrumSource s) noexcept {
    switch (s) {
        case SpectrumSource::sample: return "sample";
        case SpectrumSource::hard: return "hard";
        case SpectrumSource::soft: return "soft";
        case SpectrumSource::known: return "known";
    }
    return "unknown";
}

EigenSpectrum known_spectrum(Vector values) {
    if (values.size() == 0) throw InvalidInput("known spectrum is empty");
    for (double v : values)
        if (!std::isfinite(v) || v < 0.0) throw InvalidInput("known spectrum entries must be finite and >= 0");
    std::sort(values.begin(), values.end(), std::greater<>());
    EigenSpectrum s;
    s.values = std::move(values);
    s.source = SpectrumSource::known;
    return s;
}

SortedEigen sorted_symmetric_eigen(const Matrix& symmetric) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric);
    if (solver.info() != Eigen::Success) throw EngineFailure("symmetric eigen-decomposition failed");
    const Vector& vals = solver.eigenvalues();
    const Matrix& vecs = solver.eigenvectors();
    const auto d = vals.size();

    std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return vals(a) > vals(b); });

    SortedEigen out{Vector(d), Matrix(vecs.rows(), d)};
    for (Eigen::Index k = 0; k < d; ++k) {
        out.values(k) = vals(order[static_cast<std::size_t>(k)]);
        out.vectors.col(k) = vecs.col(order[static_cast<std::size_t>(k)]);
        for (Eigen::Index i = 0; i < out.vectors.rows(); ++i) {
            const double v = out.vectors(i, k);
            if (std::abs(v) > 1e-12) {
                if (v < 0.0) out.vectors.col(k) *= -1.0;
                break;
            }
        }
    }
    return out;
}

EigenSpectrum sample_eigenvalues(const Matrix& centered_x) {
    const auto n = centered_x.rows();
    const auto d = centered_x.cols();
    if (n < 2) throw InvalidInput("sample_eigenvalues: need at least 2 rows");
    const double scale = std::max(1.0, centered_x.cwiseAbs().maxCoeff());
    if (centered_x.colwise().mean().cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw InvalidInput("sample_eigenvalues: input is not column-centered");

    const double denom = static_cast<double>(n - 1);
    Vector values = Vector::Zero(d);
    if (d > n) {
        Matrix gram = (centered_x * centered_x.transpose()) / denom;
        Eigen::SelfAdjointEigenSolver<Matrix> solver(gram, Eigen::EigenvaluesOnly);
        if (solver.info() != Eigen::Success) throw EngineFailure("Gram eigen-decomposition failed");
        values.head(n) = solver.eigenvalues().reverse();
    } else {
        Matrix cov = (centered_x.transpose() * centered_x) / denom;
        Eigen::SelfAdjointEigenSolver<Matrix> solver(cov, Eigen::EigenvaluesOnly);
        if (solver.info() != Eigen::Success) throw EngineFailure("covariance eigen-decomposition failed");
        values = solver.eigenvalues().reverse();
    }
    values = values.cwiseMax(0.0);
    std::sort(values.begin(), values.end(), std::greater<>());

    EigenSpectrum s;
    s.values = std::move(values);
    s.source = SpectrumSource::sample;
    return s;
}

namespace {

double median_in_place(std::vector<double>& v) {
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return (lower + upper) / 2.0;
}

void require_thresholdable(const EigenSpectrum& sample, double noise_level) {
    if (!(noise_level > 0.0) || !std::isfinite(noise_level))
        throw InvalidInput("noise level must be positive and finite");
    if (sample.values.size() == 0) throw InvalidInput("spectrum is empty");
}

}  // namespace

double background_noise(const Matrix& x) {
    if (x.size() < 2) throw InvalidInput("background_noise: need at least 2 entries");
    std::vector<double> entries(x.data(), x.data() + x.size());
    const double med = median_in_place(entries);
    for (double& e : entries) e = std::abs(e - med);
    const double mad = median_in_place(entries);
    if (!(mad > 0.0))
        throw DegenerateData("background_noise: median absolute deviation is zero; thresholding undefined");
    const double sigma = mad / kMadConsistency;
    return sigma * sigma;
}

EigenSpectrum hard_threshold(const EigenSpectrum& sample, double noise_level) {
    require_thresholdable(sample, noise_level);
    EigenSpectrum out;
    out.values = sample.values.cwiseMax(noise_level);
    out.source = SpectrumSource::hard;
    out.noise_level = noise_level;
    return out;
}

EigenSpectrum soft_threshold(const EigenSpectrum& sample, double noise_level) {
    require_thresholdable(sample, noise_level);
    const Vector& lam = sample.values;
    const auto d = lam.size();
    const double total = lam.sum();
    const double top = lam.maxCoeff();

    auto mapped_sum = [&](double tau) { return (lam.array() - tau).max(noise_level).sum(); };

    EigenSpectrum out;
    out.source = SpectrumSource::soft;
    out.noise_level = noise_level;

    if (static_cast<double>(d) * noise_level > total) {
        out.values = lam.cwiseMax(noise_level);
        out.tau = 0.0;
        out.energy_preserved = false;
        return out;
    }

    double tau = 0.0;
    if (mapped_sum(0.0) > total) {
        // mapped_sum is continuous and nonincreasing, > total at 0 and d*noise <= total at top.
        double lo = 0.0;
        double hi = top;
        const double tol = 1e-12 * top;
        for (int it = 0; it < 200 && hi - lo > tol; ++it) {
            const double mid = 0.5 * (lo + hi);
            (mapped_sum(mid) > total ? lo : hi) = mid;
        }
        tau = 0.5 * (lo + hi);
        // Solve exactly on the linear piece containing the bracket.
        Eigen::Index active = 0;
        double active_sum = 0.0;
        for (Eigen::Index j = 0; j < d; ++j) {
            if (lam(j) - tau > noise_level) {
                ++active;
                active_sum += lam(j);
            }
        }
        if (active > 0) {
            const double exact =
                (active_sum + static_cast<double>(d - active) * noise_level - total) / static_cast<double>(active);
            if (exact >= lo - tol && exact <= hi + tol) tau = std::max(0.0, exact);
        }
    }

    out.values = (lam.array() - tau).max(noise_level).matrix();
    std::sort(out.values.begin(), out.values.end(), std::greater<>());
    out.tau = tau;
    out.energy_preserved = true;
    return out;
}

Matrix simulate_null(const EigenSpectrum& spectrum, Eigen::Index n, Rng& rng) {
    const auto d = spectrum.values.size();
    Matrix out(n, d);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index j = 0; j < d; ++j) {
        const double sd = std::sqrt(std::max(0.0, spectrum.values(j)));
        for (Eigen::Index i = 0; i < n; ++i) out(i, j) = sd * normal(rng);
    }
    return out;
}

}  // namespace sigpal

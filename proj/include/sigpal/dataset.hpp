#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace sigpal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Label : std::int8_t { Neg = -1, Unlabeled = 0, Pos = 1 };

/// n x d covariates with one ternary label per row. Immutable once built.
class PartiallyLabeledDataset {
public:
    /// Throws InvalidInput when n < 2, d < 1, a cell is non-finite, or the label
    /// vector length does not match the row count.
    PartiallyLabeledDataset(Matrix x, std::vector<Label> labels);

    /// All rows unlabeled.
    static PartiallyLabeledDataset unlabeled(Matrix x);

    const Matrix& x() const noexcept { return x_; }
    const std::vector<Label>& labels() const noexcept { return labels_; }

    Eigen::Index n() const noexcept { return x_.rows(); }
    Eigen::Index d() const noexcept { return x_.cols(); }
    Eigen::Index n_labeled() const noexcept { return n_pos_ + n_neg_; }
    Eigen::Index n_unlabeled() const noexcept { return n() - n_labeled(); }
    Eigen::Index n_pos() const noexcept { return n_pos_; }
    Eigen::Index n_neg() const noexcept { return n_neg_; }
    double theta() const noexcept { return static_cast<double>(n_labeled()) / static_cast<double>(n()); }
    bool fully_labeled() const noexcept { return n_unlabeled() == 0; }

    /// Same labels, new covariates (row count must match).
    PartiallyLabeledDataset with_x(Matrix x) const { return {std::move(x), labels_}; }

private:
    Matrix x_;
    std::vector<Label> labels_;
    Eigen::Index n_pos_ = 0;
    Eigen::Index n_neg_ = 0;
};

/// Label column selected by header name or by zero-based column index.
using LabelColumn = std::variant<std::string, std::size_t>;

/// Reads a comma-separated file. A header row is detected when any cell of the first
/// row other than the label cell is non-numeric. Label cells: "+1"/"1", "-1", "NA" or
/// empty. Errors name the offending 1-based line and column.
PartiallyLabeledDataset load_csv(const std::filesystem::path& path,
                                 const LabelColumn& label_column = std::string("label"));

/// Writes header `label,x1,...,xd` and shortest round-trip decimal values.
void write_csv(const std::filesystem::path& path, const PartiallyLabeledDataset& data);

struct Centered {
    PartiallyLabeledDataset data;
    Vector mean;
};

Centered center(const PartiallyLabeledDataset& data);

/// Column-centers a matrix in place and returns the subtracted mean.
Vector center_columns(Matrix& x);

struct RotationResult {
    PartiallyLabeledDataset rotated;
    Matrix rotation;  ///< d x d orthogonal; rotated = (X - 1 center') * rotation
    Vector center;
};

/// Rotates centered data onto the eigenbasis of its sample covariance. Columns are
/// ordered by nonincreasing variance and each has its first nonzero entry >= 0.
RotationResult rotate_to_diagonal(const PartiallyLabeledDataset& data);

}  // namespace sigpal

#include "sigpal/dataset.hpp"

#include "sigpal/error.hpp"
#include "sigpal/spectrum.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

namespace sigpal {

PartiallyLabeledDataset::PartiallyLabeledDataset(Matrix x, std::vector<Label> labels)
    : x_(std::move(x)), labels_(std::move(labels)) {
    if (x_.rows() < 2) throw InvalidInput("dataset needs at least 2 rows");
    if (x_.cols() < 1) throw InvalidInput("dataset needs at least 1 column");
    if (static_cast<Eigen::Index>(labels_.size()) != x_.rows())
        throw InvalidInput("label vector length " + std::to_string(labels_.size()) +
                           " does not match row count " + std::to_string(x_.rows()));
    if (!x_.allFinite()) throw InvalidInput("dataset contains non-finite values");
    for (Label l : labels_) {
        if (l == Label::Pos) ++n_pos_;
        else if (l == Label::Neg) ++n_neg_;
    }
}

PartiallyLabeledDataset PartiallyLabeledDataset::unlabeled(Matrix x) {
    std::vector<Label> labels(static_cast<std::size_t>(x.rows()), Label::Unlabeled);
    return {std::move(x), std::move(labels)};
}

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cells;
}

std::optional<double> parse_number(const std::string& cell) {
    if (cell.empty()) return std::nullopt;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (*first == '+') ++first;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, value, std::chars_format::general);
    if (ec != std::errc() || ptr != last || !std::isfinite(value)) return std::nullopt;
    return value;
}

std::optional<Label> parse_label(const std::string& cell) {
    if (cell.empty() || cell == "NA" || cell == "na" || cell == "NaN") return Label::Unlabeled;
    if (cell == "1" || cell == "+1") return Label::Pos;
    if (cell == "-1") return Label::Neg;
    return std::nullopt;
}

}  // namespace

PartiallyLabeledDataset load_csv(const std::filesystem::path& path, const LabelColumn& label_column) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open CSV file: " + path.string());

    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
        if (trim(line).empty()) continue;
        rows.push_back(split_row(line));
        line_numbers.push_back(line_no);
    }
    if (rows.empty()) throw InvalidInput("CSV file is empty: " + path.string());

    const std::size_t width = rows.front().size();
    const bool has_header = std::any_of(rows.front().begin(), rows.front().end(), [](const std::string& c) {
        return !parse_number(c) && !parse_label(c);
    });
    std::size_t label_idx = 0;
    if (const auto* name = std::get_if<std::string>(&label_column)) {
        if (!has_header)
            throw InvalidInput("CSV has no header row; select the label column by index");
        auto it = std::find(rows.front().begin(), rows.front().end(), *name);
        if (it == rows.front().end())
            throw InvalidInput("label column '" + *name + "' not found in header of " + path.string());
        label_idx = static_cast<std::size_t>(it - rows.front().begin());
    } else {
        label_idx = std::get<std::size_t>(label_column);
        if (label_idx >= width)
            throw InvalidInput("label column index " + std::to_string(label_idx) + " out of range");
    }

    const std::size_t first = has_header ? 1 : 0;
    const std::size_t n = rows.size() - first;
    if (n < 2) throw InvalidInput("CSV needs at least 2 data rows, found " + std::to_string(n));
    if (width < 2) throw InvalidInput("CSV needs a label column and at least one covariate");

    Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width - 1));
    std::vector<Label> labels(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto& cells = rows[first + r];
        const auto ln = std::to_string(line_numbers[first + r]);
        if (cells.size() != width)
            throw InvalidInput("line " + ln + ": expected " + std::to_string(width) + " cells, found " +
                               std::to_string(cells.size()));
        Eigen::Index col = 0;
        for (std::size_t c = 0; c < width; ++c) {
            if (c == label_idx) {
                auto l = parse_label(cells[c]);
                if (!l)
                    throw InvalidInput("line " + ln + ": invalid label '" + cells[c] +
                                       "' (expected +1, 1, -1, NA or empty)");
                labels[r] = *l;
                continue;
            }
            auto v = parse_number(cells[c]);
            if (!v)
                throw InvalidInput("line " + ln + ", column " + std::to_string(c + 1) +
                                   ": non-numeric covariate '" + cells[c] + "'");
            x(static_cast<Eigen::Index>(r), col++) = *v;
        }
    }
    return {std::move(x), std::move(labels)};
}

void write_csv(const std::filesystem::path& path, const PartiallyLabeledDataset& data) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write CSV file: " + path.string());
    out << "label";
    for (Eigen::Index j = 0; j < data.d(); ++j) out << ",x" << (j + 1);
    out << '\n';
    char buf[64];
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        switch (data.labels()[static_cast<std::size_t>(i)]) {
            case Label::Pos: out << "1"; break;
            case Label::Neg: out << "-1"; break;
            case Label::Unlabeled: out << "NA"; break;
        }
        for (Eigen::Index j = 0; j < data.d(); ++j) {
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, data.x()(i, j));
            out << ',' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
        }
        out << '\n';
    }
}

Vector center_columns(Matrix& x) {
    Vector mean = x.colwise().mean().transpose();
    x.rowwise() -= mean.transpose();
    return mean;
}

Centered center(const PartiallyLabeledDataset& data) {
    Matrix x = data.x();
    Vector mean = center_columns(x);
    return {data.with_x(std::move(x)), std::move(mean)};
}

RotationResult rotate_to_diagonal(const PartiallyLabeledDataset& data) {
    auto [centered, mean] = center(data);
    const Matrix& xc = centered.x();
    if (xc.squaredNorm() <= 0.0) throw DegenerateData("rotate_to_diagonal: all rows are identical");
    Matrix cov = (xc.transpose() * xc) / static_cast<double>(data.n() - 1);
    SortedEigen eig = sorted_symmetric_eigen(cov);
    Matrix rotated = xc * eig.vectors;
    return {centered.with_x(std::move(rotated)), std::move(eig.vectors), std::move(mean)};
}

}  // namespace sigpal

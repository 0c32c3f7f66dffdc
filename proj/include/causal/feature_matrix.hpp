#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace causal {

enum class ColumnKind { binary, continuous };

std::string_view to_string(ColumnKind kind);
ColumnKind column_kind_from_string(std::string_view s);

struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::continuous;
    std::vector<double> values;
    bool operator==(const Column&) const = default;
};

// Column-typed sample table. Immutable after construction: binary columns hold
// only 0/1, every value is finite, and the treatment/outcome columns (when
// named) exist and are binary.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    explicit FeatureMatrix(std::vector<Column> columns, std::string treatment_col = {},
                           std::string outcome_col = {});

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return columns_.size(); }

    const Column& column(std::size_t j) const { return columns_.at(j); }
    const Column& column(std::string_view name) const;
    const std::vector<Column>& columns() const { return columns_; }
    std::vector<std::string> names() const;

    std::optional<std::size_t> find(std::string_view name) const;
    // Throws ValidationError naming the missing column.
    std::size_t index_of(std::string_view name) const;

    double at(std::size_t row, std::size_t col) const { return columns_[col].values[row]; }

    const std::string& treatment_col() const { return treatment_; }
    const std::string& outcome_col() const { return outcome_; }

    FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
    FeatureMatrix select_columns(std::span<const std::string> names) const;
    FeatureMatrix with_roles(std::string treatment, std::string outcome) const;

    // n x p dense copy, columns in order.
    Eigen::MatrixXd to_eigen() const;
    Eigen::MatrixXd to_eigen(std::span<const std::size_t> cols) const;

    bool operator==(const FeatureMatrix&) const = default;

private:
    std::vector<Column> columns_;
    std::string treatment_;
    std::string outcome_;
    std::size_t rows_ = 0;
};

// CSV with a header row plus a JSON sidecar holding
// {columns, kinds, treatment_col, outcome_col}.
void write_feature_matrix(const FeatureMatrix& fm, const std::filesystem::path& csv_path);
FeatureMatrix read_feature_matrix(const std::filesystem::path& csv_path);
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace causal

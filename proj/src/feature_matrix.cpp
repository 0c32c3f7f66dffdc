#include "causal/feature_matrix.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "causal/error.hpp"
#include "csv.hpp"

namespace causal {

std::string_view to_string(ColumnKind kind) {
    return kind == ColumnKind::binary ? "binary" : "continuous";
}

ColumnKind column_kind_from_string(std::string_view s) {
    if (s == "binary") return ColumnKind::binary;
    if (s == "continuous") return ColumnKind::continuous;
    throw ValidationError("unknown column kind '" + std::string(s) + "'");
}

FeatureMatrix::FeatureMatrix(std::vector<Column> columns, std::string treatment_col,
                             std::string outcome_col)
    : columns_(std::move(columns)), treatment_(std::move(treatment_col)),
      outcome_(std::move(outcome_col)) {
    rows_ = columns_.empty() ? 0 : columns_.front().values.size();
    std::unordered_set<std::string> seen;
    for (const auto& c : columns_) {
        if (c.name.empty()) throw ValidationError("column with empty name");
        if (!seen.insert(c.name).second) throw ValidationError("duplicate column '" + c.name + "'");
        if (c.values.size() != rows_)
            throw ValidationError("column '" + c.name + "' has " + std::to_string(c.values.size()) +
                                  " values, expected " + std::to_string(rows_));
        for (double v : c.values) {
            if (!std::isfinite(v)) throw ValidationError("column '" + c.name + "' has a non-finite value");
            if (c.kind == ColumnKind::binary && v != 0.0 && v != 1.0)
                throw ValidationError("binary column '" + c.name + "' holds value " + format_double(v));
        }
    }
    for (const std::string* role : {&treatment_, &outcome_}) {
        if (role->empty()) continue;
        const auto& c = column(*role);
        if (c.kind != ColumnKind::binary)
            throw ValidationError("treatment/outcome column '" + *role + "' must be binary");
    }
}

const Column& FeatureMatrix::column(std::string_view name) const {
    return columns_[index_of(name)];
}

std::vector<std::string> FeatureMatrix::names() const {
    std::vector<std::string> out;
    out.reserve(columns_.size());
    for (const auto& c : columns_) out.push_back(c.name);
    return out;
}

std::optional<std::size_t> FeatureMatrix::find(std::string_view name) const {
    for (std::size_t j = 0; j < columns_.size(); ++j)
        if (columns_[j].name == name) return j;
    return std::nullopt;
}

std::size_t FeatureMatrix::index_of(std::string_view name) const {
    if (auto j = find(name)) return *j;
    throw ValidationError("no column named '" + std::string(name) + "'");
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
    std::vector<Column> cols;
    cols.reserve(columns_.size());
    for (const auto& c : columns_) {
        Column out{c.name, c.kind, {}};
        out.values.reserve(rows.size());
        for (std::size_t r : rows) out.values.push_back(c.values.at(r));
        cols.push_back(std::move(out));
    }
    FeatureMatrix fm;
    fm.columns_ = std::move(cols);
    fm.treatment_ = treatment_;
    fm.outcome_ = outcome_;
    fm.rows_ = rows.size();
    return fm;
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::string> names) const {
    std::vector<Column> cols;
    for (const auto& n : names) cols.push_back(column(n));
    auto keep = [&](const std::string& role) {
        for (const auto& n : names)
            if (n == role) return role;
        return std::string{};
    };
    return FeatureMatrix(std::move(cols), keep(treatment_), keep(outcome_));
}

FeatureMatrix FeatureMatrix::with_roles(std::string treatment, std::string outcome) const {
    return FeatureMatrix(columns_, std::move(treatment), std::move(outcome));
}

Eigen::MatrixXd FeatureMatrix::to_eigen() const {
    Eigen::MatrixXd m(rows_, columns_.size());
    for (std::size_t j = 0; j < columns_.size(); ++j)
        m.col(j) = Eigen::Map<const Eigen::VectorXd>(columns_[j].values.data(), rows_);
    return m;
}

Eigen::MatrixXd FeatureMatrix::to_eigen(std::span<const std::size_t> cols) const {
    Eigen::MatrixXd m(rows_, cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j)
        m.col(j) = Eigen::Map<const Eigen::VectorXd>(columns_.at(cols[j]).values.data(), rows_);
    return m;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
    auto p = csv_path;
    p.replace_extension(".json");
    return p;
}

void write_feature_matrix(const FeatureMatrix& fm, const std::filesystem::path& csv_path) {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw RuntimeError("cannot write " + csv_path.string());
    const auto names = fm.names();
    for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
    out << '\n';
    for (std::size_t i = 0; i < fm.rows(); ++i) {
        for (std::size_t j = 0; j < fm.cols(); ++j) out << (j ? "," : "") << format_double(fm.at(i, j));
        out << '\n';
    }

    nlohmann::json meta;
    meta["columns"] = names;
    std::vector<std::string> kinds;
    for (const auto& c : fm.columns()) kinds.emplace_back(to_string(c.kind));
    meta["kinds"] = kinds;
    meta["treatment_col"] = fm.treatment_col();
    meta["outcome_col"] = fm.outcome_col();
    std::ofstream side(sidecar_path(csv_path), std::ios::binary);
    side << meta.dump(2) << '\n';
}

FeatureMatrix read_feature_matrix(const std::filesystem::path& csv_path) {
    std::ifstream side(sidecar_path(csv_path));
    if (!side) throw ValidationError("missing metadata sidecar " + sidecar_path(csv_path).string());
    nlohmann::json meta;
    try {
        side >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("bad metadata sidecar: " + std::string(e.what()));
    }
    const auto names = meta.at("columns").get<std::vector<std::string>>();
    const auto kinds = meta.at("kinds").get<std::vector<std::string>>();
    if (names.size() != kinds.size()) throw ValidationError("sidecar columns/kinds length mismatch");

    std::ifstream in(csv_path);
    if (!in) throw ValidationError("cannot open " + csv_path.string());
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(csv_path.string() + " is empty");
    const auto header = detail::split_csv_line(line);
    if (header != names) throw ValidationError("CSV header does not match sidecar columns in " + csv_path.string());

    std::vector<Column> cols;
    for (std::size_t j = 0; j < names.size(); ++j) cols.push_back({names[j], column_kind_from_string(kinds[j]), {}});
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != cols.size())
            throw ValidationError(csv_path.string() + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(cols.size()) + " fields");
        for (std::size_t j = 0; j < cells.size(); ++j) {
            auto v = detail::parse_double(cells[j]);
            if (!v)
                throw ValidationError(csv_path.string() + ":" + std::to_string(line_no) + ": bad number '" +
                                      cells[j] + "'");
            cols[j].values.push_back(*v);
        }
    }
    return FeatureMatrix(std::move(cols), meta.value("treatment_col", ""), meta.value("outcome_col", ""));
}

}  // namespace causal

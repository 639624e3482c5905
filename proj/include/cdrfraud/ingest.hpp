#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "cdrfraud/types.hpp"

namespace cdrfraud {

enum class ColumnKind { numeric, categorical, identifier, label };

std::string_view to_string(ColumnKind kind);
ColumnKind parse_column_kind(std::string_view text);

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;

    friend bool operator==(const ColumnSpec&, const ColumnSpec&) = default;
};

struct Missing {
    friend bool operator==(Missing, Missing) { return true; }
};

/// A raw CDR value: absent, a parsed number, or text.
using Cell = std::variant<Missing, double, std::string>;

bool is_missing(const Cell& cell);

/// Empty, "NA" and "NaN" (any case) are missing.
bool is_missing_marker(std::string_view field);

/// Column kind overrides keyed by column name. Columns not listed are inferred.
using SchemaOverrides = std::map<std::string, ColumnKind, std::less<>>;

/// Parses `column_name = kind` lines. Blank lines and lines starting with '#' are ignored.
SchemaOverrides parse_schema(std::istream& in);
SchemaOverrides load_schema(const std::filesystem::path& path);

struct CdrTable {
    std::vector<ColumnSpec> columns;
    std::vector<std::vector<Cell>> rows;

    Index row_count() const { return static_cast<Index>(rows.size()); }
    Index column_count() const { return static_cast<Index>(columns.size()); }
    std::optional<Index> find_column(std::string_view name) const;
    Index label_column() const;
};

/// Splits one CSV record. Double quotes enclose fields that contain commas;
/// a doubled quote inside a quoted field is a literal quote.
std::vector<std::string> split_csv_record(std::string_view line, std::size_t line_number = 0);

/// Reads a header row plus data rows. The label column is required unless
/// `require_label` is false (scoring inputs may omit it).
CdrTable read_csv(std::istream& in, const SchemaOverrides& schema = {}, bool require_label = true);
CdrTable load_csv(const std::filesystem::path& path, const SchemaOverrides& schema = {},
                  bool require_label = true);

/// Removes every row holding a missing value in a non-identifier column.
/// Throws if no row survives.
std::pair<CdrTable, Index> drop_missing(const CdrTable& table);

/// How one source column became one numeric feature.
struct FeatureEncoding {
    enum class Kind { passthrough, binary, ordinal };

    std::string column;
    Kind kind = Kind::passthrough;
    /// Category text in code order: categories[c] encodes as c.
    std::vector<std::string> categories;

    double code(std::string_view category) const;  // throws on unseen category

    friend bool operator==(const FeatureEncoding&, const FeatureEncoding&) = default;
};

/// Category→code mappings fitted by encode(); applied verbatim at inference.
struct Encoding {
    std::string label_column;
    std::string positive_label;
    std::string negative_label;
    std::vector<FeatureEncoding> features;

    std::vector<std::string> feature_names() const;

    /// Column kinds to force when reading a file this encoding will be
    /// applied to, so that category codes such as "415" stay text.
    SchemaOverrides schema() const;

    /// Encodes the feature columns of `table`, which must contain every
    /// encoded column (by name, any order). Extra columns are ignored.
    FeatureMatrix encode_features(const CdrTable& table) const;
    /// Maps label cells through the fitted fraud/non-fraud categories.
    LabelVector encode_labels(const CdrTable& table) const;

    friend bool operator==(const Encoding&, const Encoding&) = default;
};

struct Dataset {
    FeatureMatrix features;
    LabelVector labels;
    std::vector<std::string> feature_names;
    Encoding encoding;

    Index rows() const { return features.rows(); }
    Index cols() const { return features.cols(); }
    Index count(int label) const { return (labels.array() == label).count(); }

    /// Throws if the Dataset invariants (shape agreement, finite entries,
    /// binary labels) do not hold.
    void validate() const;

    /// Rows at `indices`, in that order; encoding and names are shared.
    Dataset subset(std::span<const Index> indices) const;
};

/// Fits the category mappings on `table` and encodes it.
Dataset encode(const CdrTable& table);

/// Applies a previously fitted encoding, e.g. to an evaluation file.
Dataset encode_with(const CdrTable& table, const Encoding& encoding);

}  // namespace cdrfraud

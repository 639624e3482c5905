#include "cdrfraud/ingest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cdrfraud/error.hpp"

namespace cdrfraud {
namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::optional<double> parse_real(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty() || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

std::vector<std::string> name_tokens(std::string_view name) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

bool looks_like_identifier(std::string_view name) {
    const auto tokens = name_tokens(name);
    if (tokens.empty()) return false;
    for (const auto& t : tokens) {
        if (t == "phone" || t == "phonenumber" || t == "msisdn" || t == "imsi") return true;
    }
    return tokens.back() == "id";
}

bool looks_like_label(std::string_view name) { return lower(trim(name)) == "fraud"; }

// Canonical text for a cell, used when a category arrives as a parsed number.
std::string cell_text(const Cell& cell) {
    if (const auto* s = std::get_if<std::string>(&cell)) return *s;
    if (const auto* d = std::get_if<double>(&cell)) {
        std::array<char, 32> buf{};
        const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), *d);
        return std::string(buf.data(), ptr);
    }
    return {};
}

int truthiness(std::string_view text) {
    static constexpr std::array<std::string_view, 7> kTrue{"1", "true", "yes", "y", "t",
                                                          "fraud", "fraudulent"};
    static constexpr std::array<std::string_view, 8> kFalse{"0", "false", "no", "n", "f",
                                                           "ok", "legit", "non-fraud"};
    const std::string t = lower(trim(text));
    if (auto d = parse_real(t)) {
        if (*d == 1.0) return 1;
        if (*d == 0.0) return 0;
        return -1;
    }
    if (std::find(kTrue.begin(), kTrue.end(), t) != kTrue.end()) return 1;
    if (std::find(kFalse.begin(), kFalse.end(), t) != kFalse.end()) return 0;
    return -1;
}

Cell make_cell(std::string_view field, ColumnKind kind, std::size_t line, const std::string& column) {
    if (is_missing_marker(field)) return Missing{};
    const auto text = trim(field);
    if (kind == ColumnKind::numeric) {
        if (auto d = parse_real(text)) return *d;
        throw ParseError("line " + std::to_string(line) + ": column '" + column +
                             "' is numeric but holds '" + std::string(text) + "'",
                         line);
    }
    return std::string(text);
}

}  // namespace

std::string_view to_string(ColumnKind kind) {
    switch (kind) {
        case ColumnKind::numeric: return "numeric";
        case ColumnKind::categorical: return "categorical";
        case ColumnKind::identifier: return "identifier";
        case ColumnKind::label: return "label";
    }
    return "numeric";
}

ColumnKind parse_column_kind(std::string_view text) {
    const std::string t = lower(trim(text));
    if (t == "numeric") return ColumnKind::numeric;
    if (t == "categorical") return ColumnKind::categorical;
    if (t == "identifier") return ColumnKind::identifier;
    if (t == "label") return ColumnKind::label;
    throw SchemaError("unknown column kind '" + std::string(text) + "'");
}

bool is_missing(const Cell& cell) { return std::holds_alternative<Missing>(cell); }

bool is_missing_marker(std::string_view field) {
    const std::string t = lower(trim(field));
    return t.empty() || t == "na" || t == "nan";
}

SchemaOverrides parse_schema(std::istream& in) {
    SchemaOverrides out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError("schema line " + std::to_string(number) + ": expected 'column = kind'",
                             number);
        }
        const auto name = trim(body.substr(0, eq));
        if (name.empty()) {
            throw ParseError("schema line " + std::to_string(number) + ": empty column name", number);
        }
        out[std::string(name)] = parse_column_kind(body.substr(eq + 1));
    }
    return out;
}

SchemaOverrides load_schema(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read schema file " + path.string());
    return parse_schema(in);
}

std::optional<Index> CdrTable::find_column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].name == name) return static_cast<Index>(i);
    }
    return std::nullopt;
}

Index CdrTable::label_column() const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].kind == ColumnKind::label) return static_cast<Index>(i);
    }
    throw SchemaError("table has no label column");
}

std::vector<std::string> split_csv_record(std::string_view line, std::size_t line_number) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    if (quoted) {
        throw ParseError("line " + std::to_string(line_number) + ": unterminated quoted field",
                         line_number);
    }
    fields.push_back(std::move(field));
    return fields;
}

CdrTable read_csv(std::istream& in, const SchemaOverrides& schema, bool require_label) {
    std::string line;
    std::size_t line_number = 0;
    auto next_line = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };

    if (!next_line()) throw ParseError("missing header row", 1);
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    CdrTable table;
    for (auto& name : split_csv_record(line, line_number)) {
        const std::string trimmed(trim(name));
        if (trimmed.empty()) throw ParseError("header has an empty column name", 1);
        if (table.find_column(trimmed)) {
            throw ParseError("duplicate column name '" + trimmed + "'", 1);
        }
        table.columns.push_back({trimmed, ColumnKind::numeric});
    }
    for (const auto& [name, kind] : schema) {
        if (!table.find_column(name) && kind == ColumnKind::label && require_label) {
            throw SchemaError("schema names label column '" + name + "' absent from header");
        }
    }

    std::vector<std::vector<std::string>> raw;
    std::vector<std::size_t> raw_lines;
    const std::size_t width = table.columns.size();
    while (next_line()) {
        if (trim(line).empty()) continue;
        auto fields = split_csv_record(line, line_number);
        if (fields.size() != width) {
            throw ParseError("row " + std::to_string(raw.size() + 1) + " (line " +
                                 std::to_string(line_number) + ") has " +
                                 std::to_string(fields.size()) + " fields, header has " +
                                 std::to_string(width),
                             line_number);
        }
        raw.push_back(std::move(fields));
        raw_lines.push_back(line_number);
    }
    if (raw.empty() && require_label) throw ParseError("file has no data rows", line_number);

    // Resolve kinds: explicit schema first, then name conventions, then content.
    for (std::size_t c = 0; c < width; ++c) {
        auto& col = table.columns[c];
        if (auto it = schema.find(col.name); it != schema.end()) {
            col.kind = it->second;
        } else if (looks_like_label(col.name) &&
                   std::none_of(schema.begin(), schema.end(),
                                [](const auto& kv) { return kv.second == ColumnKind::label; })) {
            col.kind = ColumnKind::label;
        } else if (looks_like_identifier(col.name)) {
            col.kind = ColumnKind::identifier;
        } else {
            const bool numeric = std::all_of(raw.begin(), raw.end(), [&](const auto& row) {
                return is_missing_marker(row[c]) || parse_real(row[c]).has_value();
            });
            col.kind = numeric ? ColumnKind::numeric : ColumnKind::categorical;
        }
    }
    const auto labels = std::count_if(table.columns.begin(), table.columns.end(),
                                      [](const auto& c) { return c.kind == ColumnKind::label; });
    if (labels > 1) throw SchemaError("more than one label column");
    if (labels == 0 && require_label) {
        throw SchemaError("no label column: name one 'fraud' or mark it in the schema");
    }

    table.rows.reserve(raw.size());
    for (std::size_t r = 0; r < raw.size(); ++r) {
        std::vector<Cell> row;
        row.reserve(width);
        for (std::size_t c = 0; c < width; ++c) {
            row.push_back(make_cell(raw[r][c], table.columns[c].kind, raw_lines[r],
                                    table.columns[c].name));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

CdrTable load_csv(const std::filesystem::path& path, const SchemaOverrides& schema,
                  bool require_label) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    return read_csv(in, schema, require_label);
}

std::pair<CdrTable, Index> drop_missing(const CdrTable& table) {
    CdrTable out;
    out.columns = table.columns;
    for (const auto& row : table.rows) {
        bool keep = true;
        for (std::size_t c = 0; c < row.size() && keep; ++c) {
            keep = table.columns[c].kind == ColumnKind::identifier || !is_missing(row[c]);
        }
        if (keep) out.rows.push_back(row);
    }
    if (out.rows.empty()) throw Error("every row has a missing value; nothing left to train on");
    const Index dropped = table.row_count() - out.row_count();
    return {std::move(out), dropped};
}

double FeatureEncoding::code(std::string_view category) const {
    const auto it = std::find(categories.begin(), categories.end(), category);
    if (it == categories.end()) {
        throw SchemaError("column '" + column + "': unseen category '" + std::string(category) + "'");
    }
    return static_cast<double>(it - categories.begin());
}

std::vector<std::string> Encoding::feature_names() const {
    std::vector<std::string> names;
    names.reserve(features.size());
    for (const auto& f : features) names.push_back(f.column);
    return names;
}

SchemaOverrides Encoding::schema() const {
    SchemaOverrides out;
    for (const auto& f : features) {
        out[f.column] = f.kind == FeatureEncoding::Kind::passthrough ? ColumnKind::numeric
                                                                     : ColumnKind::categorical;
    }
    if (!label_column.empty()) out[label_column] = ColumnKind::label;
    return out;
}

FeatureMatrix Encoding::encode_features(const CdrTable& table) const {
    std::vector<Index> source;
    source.reserve(features.size());
    for (const auto& f : features) {
        const auto col = table.find_column(f.column);
        if (!col) throw SchemaError("input is missing feature column '" + f.column + "'");
        source.push_back(*col);
    }

    FeatureMatrix x(table.row_count(), static_cast<Index>(features.size()));
    for (Index r = 0; r < table.row_count(); ++r) {
        const auto& row = table.rows[static_cast<std::size_t>(r)];
        for (std::size_t j = 0; j < features.size(); ++j) {
            const auto& f = features[j];
            const Cell& cell = row[static_cast<std::size_t>(source[j])];
            const auto where = [&] { return "row " + std::to_string(r + 1) + ": "; };
            if (is_missing(cell)) {
                throw SchemaError(where() + "missing value in column '" + f.column + "'");
            }
            if (f.kind == FeatureEncoding::Kind::passthrough) {
                const auto* d = std::get_if<double>(&cell);
                if (!d) {
                    throw SchemaError(where() + "column '" + f.column + "' expects a number, got '" +
                                      cell_text(cell) + "'");
                }
                x(r, static_cast<Index>(j)) = *d;
            } else {
                try {
                    x(r, static_cast<Index>(j)) = f.code(cell_text(cell));
                } catch (const SchemaError& e) {
                    throw SchemaError(where() + e.what());
                }
            }
        }
    }
    return x;
}

LabelVector Encoding::encode_labels(const CdrTable& table) const {
    const auto col = table.find_column(label_column);
    if (!col) throw SchemaError("input is missing label column '" + label_column + "'");
    LabelVector y(table.row_count());
    for (Index r = 0; r < table.row_count(); ++r) {
        const std::string text = cell_text(table.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(*col)]);
        if (text == positive_label) {
            y(r) = kPositive;
        } else if (text == negative_label) {
            y(r) = kNegative;
        } else {
            throw SchemaError("row " + std::to_string(r + 1) + ": label '" + text +
                              "' is neither '" + positive_label + "' nor '" + negative_label + "'");
        }
    }
    return y;
}

void Dataset::validate() const {
    if (features.rows() != labels.size()) {
        throw DimensionError("feature rows (" + std::to_string(features.rows()) +
                             ") differ from label count (" + std::to_string(labels.size()) + ")");
    }
    if (static_cast<Index>(feature_names.size()) != features.cols()) {
        throw DimensionError("feature name count differs from feature columns");
    }
    if (!features.allFinite()) throw Error("dataset holds non-finite feature values");
    if (((labels.array() != kNegative) && (labels.array() != kPositive)).any()) {
        throw Error("labels must be 0 or 1");
    }
}

Dataset Dataset::subset(std::span<const Index> indices) const {
    Dataset out;
    out.features.resize(static_cast<Index>(indices.size()), features.cols());
    out.labels.resize(static_cast<Index>(indices.size()));
    for (std::size_t i = 0; i < indices.size(); ++i) {
        out.features.row(static_cast<Index>(i)) = features.row(indices[i]);
        out.labels(static_cast<Index>(i)) = labels(indices[i]);
    }
    out.feature_names = feature_names;
    out.encoding = encoding;
    return out;
}

Dataset encode(const CdrTable& table) {
    const Index label_col = table.label_column();

    Encoding enc;
    enc.label_column = table.columns[static_cast<std::size_t>(label_col)].name;
    std::vector<std::string> label_values;
    for (const auto& row : table.rows) {
        const auto& cell = row[static_cast<std::size_t>(label_col)];
        if (is_missing(cell)) throw SchemaError("label column has missing values; drop them first");
        auto text = cell_text(cell);
        if (std::find(label_values.begin(), label_values.end(), text) == label_values.end()) {
            label_values.push_back(std::move(text));
        }
    }
    if (label_values.size() != 2) {
        throw SchemaError("label column '" + enc.label_column + "' must hold exactly 2 distinct values, found " +
                          std::to_string(label_values.size()));
    }
    const int t0 = truthiness(label_values[0]);
    const int t1 = truthiness(label_values[1]);
    if (t0 == 1 && t1 != 1) {
        enc.positive_label = label_values[0];
        enc.negative_label = label_values[1];
    } else if (t1 == 1 && t0 != 1) {
        enc.positive_label = label_values[1];
        enc.negative_label = label_values[0];
    } else {
        throw SchemaError("cannot tell which label value means fraud: '" + label_values[0] +
                          "' / '" + label_values[1] + "'");
    }

    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        const auto& col = table.columns[c];
        if (col.kind == ColumnKind::identifier || col.kind == ColumnKind::label) continue;
        FeatureEncoding f;
        f.column = col.name;
        if (col.kind == ColumnKind::categorical) {
            for (const auto& row : table.rows) {
                if (is_missing(row[c])) continue;
                auto text = cell_text(row[c]);
                if (std::find(f.categories.begin(), f.categories.end(), text) == f.categories.end()) {
                    f.categories.push_back(std::move(text));
                }
            }
            if (f.categories.size() == 2) {
                f.kind = FeatureEncoding::Kind::binary;
                // yes/no style columns encode yes as 1 regardless of appearance order.
                if (truthiness(f.categories[0]) == 1 && truthiness(f.categories[1]) == 0) {
                    std::swap(f.categories[0], f.categories[1]);
                }
            } else {
                f.kind = FeatureEncoding::Kind::ordinal;
            }
        }
        enc.features.push_back(std::move(f));
    }
    return encode_with(table, enc);
}

Dataset encode_with(const CdrTable& table, const Encoding& encoding) {
    Dataset out;
    out.features = encoding.encode_features(table);
    out.labels = encoding.encode_labels(table);
    out.feature_names = encoding.feature_names();
    out.encoding = encoding;
    out.validate();
    return out;
}

}  // namespace cdrfraud

#include <gtest/gtest.h>

#include <sstream>

#include "cdrfraud/error.hpp"
#include "cdrfraud/ingest.hpp"
#include "support/synthetic.hpp"

namespace cdrfraud {
namespace {

CdrTable parse(const std::string& text, const SchemaOverrides& schema = {}) {
    std::istringstream in(text);
    return read_csv(in, schema);
}

TEST(LoadCsv, InfersKindsFromMinimalFile) {
    const auto t = parse("a,b,label\n1,x,1\n2,y,0\n3,x,0\n", {{"label", ColumnKind::label}});
    ASSERT_EQ(t.row_count(), 3);
    EXPECT_EQ(t.columns[0], (ColumnSpec{"a", ColumnKind::numeric}));
    EXPECT_EQ(t.columns[1], (ColumnSpec{"b", ColumnKind::categorical}));
    EXPECT_EQ(t.columns[2], (ColumnSpec{"label", ColumnKind::label}));
    EXPECT_EQ(std::get<double>(t.rows[1][0]), 2.0);
    EXPECT_EQ(std::get<std::string>(t.rows[1][1]), "y");
}

TEST(LoadCsv, DetectsFraudLabelAndPhoneIdentifierByName) {
    const auto t = parse("Phone Number,day_minutes,Fraud\n555-1234,10.5,1\n555-9876,3,0\n");
    EXPECT_EQ(t.columns[0].kind, ColumnKind::identifier);
    EXPECT_EQ(t.columns[1].kind, ColumnKind::numeric);
    EXPECT_EQ(t.columns[2].kind, ColumnKind::label);
}

TEST(LoadCsv, ArityErrorNamesTheRow) {
    // 17-field header, second data row carries 16 fields.
    std::string header;
    std::string full;
    std::string short_row;
    for (int i = 0; i < 17; ++i) {
        header += (i ? "," : "") + std::string(i == 16 ? "fraud" : "c" + std::to_string(i));
        full += (i ? "," : "") + std::string(i == 16 ? "1" : "0");
        if (i < 16) short_row += (i ? "," : "") + std::string("0");
    }
    try {
        parse(header + "\n" + full + "\n" + short_row + "\n");
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(LoadCsv, RejectsHeaderOnlyFile) { EXPECT_THROW(parse("a,fraud\n"), ParseError); }

TEST(LoadCsv, UnreadableFileFails) {
    EXPECT_THROW(load_csv("/nonexistent/cdr.csv"), Error);
}

TEST(LoadCsv, QuotedFieldsMayContainCommas) {
    const auto t = parse("city,n,fraud\n\"Austin, TX\",1,1\n\"say \"\"hi\"\"\",2,0\n");
    EXPECT_EQ(std::get<std::string>(t.rows[0][0]), "Austin, TX");
    EXPECT_EQ(std::get<std::string>(t.rows[1][0]), "say \"hi\"");
}

TEST(LoadCsv, MissingMarkersAndCrLf) {
    const auto t = parse("a,b,fraud\r\n1,NA,1\r\nnan,x,0\r\n,y,1\r\n");
    EXPECT_EQ(t.columns[0].kind, ColumnKind::numeric);
    EXPECT_TRUE(is_missing(t.rows[0][1]));
    EXPECT_TRUE(is_missing(t.rows[1][0]));
    EXPECT_TRUE(is_missing(t.rows[2][0]));
}

TEST(Schema, ParsesKindsAndOverridesInference) {
    std::istringstream schema_text("# overrides\nphone number = categorical\n\nstatus = label\n");
    const auto schema = parse_schema(schema_text);
    EXPECT_EQ(schema.at("phone number"), ColumnKind::categorical);
    const auto t = parse("phone number,status\n1,yes\n2,no\n", schema);
    EXPECT_EQ(t.columns[0].kind, ColumnKind::categorical);
    EXPECT_EQ(t.columns[1].kind, ColumnKind::label);
}

TEST(Schema, RejectsUnknownKind) {
    std::istringstream schema_text("a = vector\n");
    EXPECT_THROW(parse_schema(schema_text), SchemaError);
}

TEST(DropMissing, IdentityWithoutMissingValues) {
    const auto t = parse("a,b,fraud\n1,x,1\n2,y,0\n");
    const auto [out, dropped] = drop_missing(t);
    EXPECT_EQ(dropped, 0);
    EXPECT_EQ(out.rows, t.rows);
}

TEST(DropMissing, RemovesIncompleteRowsKeepingOrder) {
    const auto t = parse("a,b,fraud\n1,x,1\n2,,0\n3,y,0\nNA,z,1\n5,w,0\n");
    const auto [out, dropped] = drop_missing(t);
    EXPECT_EQ(dropped, 2);
    ASSERT_EQ(out.row_count(), 3);
    EXPECT_EQ(std::get<double>(out.rows[0][0]), 1.0);
    EXPECT_EQ(std::get<double>(out.rows[1][0]), 3.0);
    EXPECT_EQ(std::get<double>(out.rows[2][0]), 5.0);
}

TEST(DropMissing, IgnoresMissingIdentifiers) {
    const auto t = parse("phone,a,fraud\n,1,1\n555,2,0\n");
    EXPECT_EQ(drop_missing(t).second, 0);
}

TEST(DropMissing, AllRowsMissingIsAnError) {
    const auto t = parse("a,fraud\nNA,1\n,0\n");
    EXPECT_THROW(drop_missing(t), Error);
}

TEST(Encode, BinaryColumnEncodesYesAsOne) {
    const auto t = parse("plan,fraud\nyes,fraud\nno,ok\n");
    const auto d = encode(t);
    ASSERT_EQ(d.cols(), 1);
    EXPECT_EQ(d.features(0, 0), 1.0);
    EXPECT_EQ(d.features(1, 0), 0.0);
    EXPECT_EQ(d.labels(0), 1);
    EXPECT_EQ(d.labels(1), 0);
}

TEST(Encode, IdentifierColumnIsExcluded) {
    const auto d = encode(parse("phone number,a,fraud\n555,1,1\n556,2,0\n"));
    EXPECT_EQ(d.feature_names, std::vector<std::string>{"a"});
}

TEST(Encode, MultiCategoryUsesFirstAppearanceOrder) {
    const auto d = encode(parse("state,fraud\nTX,1\nNY,0\nTX,0\nCA,1\n"));
    EXPECT_EQ(d.features(0, 0), 0.0);  // TX
    EXPECT_EQ(d.features(1, 0), 1.0);  // NY
    EXPECT_EQ(d.features(2, 0), 0.0);
    EXPECT_EQ(d.features(3, 0), 2.0);  // CA
    EXPECT_EQ(d.encoding.features[0].kind, FeatureEncoding::Kind::ordinal);
}

TEST(Encode, LabelMustHaveTwoValues) {
    EXPECT_THROW(encode(parse("a,fraud\n1,1\n2,1\n")), SchemaError);
    EXPECT_THROW(encode(parse("a,fraud\n1,1\n2,0\n3,2\n")), SchemaError);
}

TEST(Encode, UnseenCategoryAtInferenceNamesTheRow) {
    const auto d = encode(parse("state,fraud\nTX,1\nNY,0\nCA,0\n"));
    const auto later = parse("state,fraud\nTX,1\nWA,0\n");
    try {
        encode_with(later, d.encoding);
        FAIL() << "expected unseen-category error";
    } catch (const SchemaError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("row 2"), std::string::npos) << what;
        EXPECT_NE(what.find("WA"), std::string::npos) << what;
    }
}

TEST(Encode, InferenceTableMayReorderColumns) {
    const auto d = encode(parse("a,state,fraud\n1,TX,1\n2,NY,0\n3,CA,0\n"));
    std::istringstream in("state,a\nCA,7\n");
    const auto later = read_csv(in, d.encoding.schema(), false);
    const auto x = d.encoding.encode_features(later);
    EXPECT_EQ(x(0, 0), 7.0);
    EXPECT_EQ(x(0, 1), 2.0);
}

TEST(Encode, MissingFeatureColumnIsNamed) {
    const auto d = encode(parse("a,b,fraud\n1,2,1\n3,4,0\n"));
    std::istringstream in("a\n5\n");
    const auto later = read_csv(in, {}, false);
    try {
        d.encoding.encode_features(later);
        FAIL();
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
    }
}

// Every well-formed table encodes to a valid Dataset: rows conserved, fraud
// count conserved, identical input giving identical output.
TEST(EncodeProperty, SyntheticTablesRoundTrip) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        // Blank the state field on every 37th line so drop_missing has work to do.
        std::istringstream src(testing::synthetic_cdr_csv({400, 0.1, seed}));
        std::string csv;
        std::string line;
        for (int i = 0; std::getline(src, line); ++i) {
            if (i > 0 && i % 37 == 0) {
                const auto a = line.find(',');
                const auto b = line.find(',', a + 1);
                line = line.substr(0, a + 1) + "NA" + line.substr(b);
            }
            csv += line + "\n";
        }
        std::istringstream in(csv);
        const auto table = read_csv(in);
        const auto [complete, dropped] = drop_missing(table);
        EXPECT_LE(complete.row_count(), table.row_count());
        const auto data = encode(complete);
        EXPECT_NO_THROW(data.validate());
        EXPECT_EQ(data.rows(), complete.row_count());

        Index fraud_rows = 0;
        const auto label = complete.label_column();
        for (const auto& row : complete.rows) fraud_rows += std::get<std::string>(row[static_cast<std::size_t>(label)]) == "1";
        EXPECT_EQ(data.count(kPositive), fraud_rows);

        std::istringstream again(csv);
        const auto data2 = encode(drop_missing(read_csv(again)).first);
        EXPECT_EQ(data.features, data2.features);
        EXPECT_EQ(data.labels, data2.labels);
        EXPECT_EQ(data.encoding, data2.encoding);
    }
}

}  // namespace
}  // namespace cdrfraud

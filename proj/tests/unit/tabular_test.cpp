#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "valsweep/error.hpp"
#include "valsweep/tabular.hpp"

using namespace valsweep;

namespace {

Dataset parse(const std::string& text, const std::string& target = "y") {
  std::istringstream in(text);
  return parse_csv(in, target);
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no valsweep::Error thrown";
  return ErrorKind::kInvalidArgument;
}

}  // namespace

TEST(Tabular, InfersNumericAndCategoricalColumns) {
  const auto d = parse("a,b,y\n1,x,0\n2,z,1\n");
  const auto kinds = d.kinds();
  EXPECT_EQ(kinds.numeric, std::vector<std::string>{"a"});
  EXPECT_EQ(kinds.categorical, std::vector<std::string>{"b"});
  EXPECT_EQ(std::vector<std::uint8_t>(d.target().begin(), d.target().end()),
            (std::vector<std::uint8_t>{0, 1}));
  EXPECT_EQ(d.feature_names(), (std::vector<std::string>{"a", "b"}));
}

TEST(Tabular, MissingCellsAndNaTokens) {
  const auto d = parse("a,b,y\n,NA,0\n 3 ,q,1\nNA,,1\n");
  ASSERT_EQ(d.column(0).kind, ColumnKind::kNumeric);
  EXPECT_TRUE(d.column(0).is_missing(0));
  EXPECT_DOUBLE_EQ(d.column(0).numeric[1], 3.0);
  EXPECT_TRUE(d.column(0).is_missing(2));
  ASSERT_EQ(d.column(1).kind, ColumnKind::kCategorical);
  EXPECT_TRUE(d.column(1).is_missing(0));
  EXPECT_EQ(*d.column(1).categorical[1], "q");
  EXPECT_TRUE(d.column(1).is_missing(2));
}

TEST(Tabular, TargetErrors) {
  EXPECT_EQ(kind_of([] { parse("a,y\n1,0\n2,2\n"); }), ErrorKind::kNonBinaryTarget);
  EXPECT_EQ(kind_of([] { parse("a,y\n1,0\n2,0\n"); }), ErrorKind::kSingleClassTarget);
  EXPECT_EQ(kind_of([] { parse("a,b\n1,0\n2,1\n"); }), ErrorKind::kMissingTargetColumn);
  EXPECT_EQ(kind_of([] { load_csv("/nonexistent/file.csv", "y"); }), ErrorKind::kFileUnreadable);
}

TEST(Tabular, TargetAcceptsRealSpellings) {
  const auto d = parse("a,y\n1,0.0\n2,1.0\n3,1\n");
  EXPECT_EQ(class_counts(d), (std::pair<std::size_t, std::size_t>{1, 2}));
}

TEST(Tabular, QuotedFieldsAndCrlf) {
  const auto d = parse("\xEF\xBB\xBF\"name, with comma\",y\r\n\"say \"\"hi\"\"\",1\r\n\r\nplain,0\r\n");
  ASSERT_EQ(d.row_count(), 2u);
  EXPECT_EQ(d.feature_names().front(), "name, with comma");
  EXPECT_EQ(*d.column(0).categorical[0], "say \"hi\"");
}

TEST(Tabular, MalformedCsv) {
  EXPECT_EQ(kind_of([] { parse("a,y\n\"open,1\n"); }), ErrorKind::kMalformedCsv);
  EXPECT_EQ(kind_of([] { parse("a,y\n1,0,7\n"); }), ErrorKind::kMalformedCsv);
  EXPECT_EQ(kind_of([] { parse(""); }), ErrorKind::kMalformedCsv);
}

TEST(Tabular, Prevalence) {
  EXPECT_DOUBLE_EQ(prevalence(parse("a,y\n1,0\n1,1\n")), 0.5);
  EXPECT_DOUBLE_EQ(prevalence(parse("a,y\n1,1\n1,1\n1,1\n1,0\n")), 0.75);
  const auto d = parse("a,y\n0,0\n0,0\n0,0\n0,0\n0,0\n0,0\n0,0\n0,1\n0,1\n0,1\n");
  EXPECT_DOUBLE_EQ(prevalence(d), 0.3);
  const auto [neg, pos] = class_counts(d);
  EXPECT_EQ(neg + pos, d.row_count());
  EXPECT_EQ(prevalence(d), static_cast<double>(pos) / static_cast<double>(d.row_count()));
}

TEST(Tabular, ClassCounts) {
  EXPECT_EQ(class_counts(parse("a,y\n1,0\n2,1\n3,1\n")), (std::pair<std::size_t, std::size_t>{1, 2}));
}

TEST(Tabular, CsvRoundTrip) {
  const auto d = parse("num,cat,y\n0.1,\"a,b\",0\n,NA,1\n1e-300,c,1\n-2.5,,0\n");
  std::stringstream buffer;
  write_csv(d, buffer);
  const auto back = parse_csv(buffer, "y");
  EXPECT_EQ(back, d);
  EXPECT_EQ(back.kinds().numeric, d.kinds().numeric);
}

TEST(Tabular, KindInferenceIgnoresRowOrder) {
  const auto a = parse("a,b,y\n1,x,0\n2,3,1\nNA,4,0\n");
  const auto b = parse("a,b,y\nNA,4,0\n2,3,1\n1,x,0\n");
  EXPECT_EQ(a.kinds().numeric, b.kinds().numeric);
  EXPECT_EQ(a.kinds().categorical, b.kinds().categorical);
}

TEST(Tabular, DatasetInvariants) {
  Column c{"x", ColumnKind::kNumeric, {1.0, 2.0}, {}};
  EXPECT_THROW(Dataset("y", {c}, {0, 1, 1}), Error);
  EXPECT_THROW(Dataset("x", {c}, {0, 1}), Error);
  EXPECT_THROW(Dataset("y", {c, c}, {0, 1}), Error);
  const Dataset ok("y", {c}, {0, 1});
  EXPECT_EQ(ok.subset(std::vector<std::size_t>{1, 0}).column(0).numeric,
            (std::vector<double>{2.0, 1.0}));
}

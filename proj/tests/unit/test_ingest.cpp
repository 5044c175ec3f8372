#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "chartloom/ingest/dataset.hpp"
#include "chartloom/ingest/profile.hpp"
#include "chartloom/util/strings.hpp"
#include "support.hpp"

using namespace chartloom;
using namespace chartloom::ingest;
using testsupport::TempDir;

namespace {

const ColumnProfile& col(const TableProfile& p, const std::string& name) {
  auto it = std::find_if(p.columns.begin(), p.columns.end(), [&](const ColumnProfile& c) { return c.name == name; });
  REQUIRE(it != p.columns.end());
  return *it;
}

}  // namespace

TEST_SUITE("ingest") {
  TEST_CASE("header plus three rows") {
    auto t = parse_table("t", "Year,Value\n2000,1\n2005,2\n2022,3\n");
    REQUIRE(t.columns.size() == 2);
    CHECK(t.columns[0].name == "Year");
    CHECK(t.columns[1].name == "Value");
    CHECK(t.row_count() == 3);
    for (const auto& c : t.columns) CHECK(c.kind == ColumnKind::text);
  }

  TEST_CASE("header only loads with zero rows") {
    auto t = parse_table("t", "Year,Value\n");
    CHECK(t.row_count() == 0);
    CHECK(t.columns.size() == 2);
  }

  TEST_CASE("ragged row names the row") {
    try {
      parse_table("t", "a,b\n1,2\n3\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
  }

  TEST_CASE("header problems") {
    CHECK_THROWS_AS(parse_table("t", ""), ParseError);
    CHECK_THROWS_AS(parse_table("t", "a,a\n1,2\n"), ParseError);
    CHECK_THROWS_AS(parse_table("t", "a,\n1,2\n"), ParseError);
    CHECK_THROWS_AS(parse_table("t", "a,b\n\"open,2\n"), ParseError);
  }

  TEST_CASE("missing file") {
    CHECK_THROWS_AS(load_table("/nonexistent/x.csv"), ParseError);
  }

  TEST_CASE("quoted fields, BOM and CRLF") {
    auto t = parse_table("t", "\xEF\xBB\xBFname,note\r\n\"Ortiz, Ana\",\"said \"\"hi\"\"\"\r\nLee,\"two\nlines\"\r\n");
    REQUIRE(t.row_count() == 2);
    CHECK(t.columns[0].name == "name");
    CHECK(t.rows[0][0] == "Ortiz, Ana");
    CHECK(t.rows[0][1] == "said \"hi\"");
    CHECK(t.rows[1][1] == "two\nlines");
  }

  TEST_CASE("serialize round trip keeps cell values") {
    const std::string csv = "name,note,n\n\"Ortiz, Ana\",\"said \"\"hi\"\"\",1\nLee,,2\n";
    auto a = parse_table("t", csv);
    auto b = parse_table("t", serialize_csv(a));
    CHECK(a.rows == b.rows);
    CHECK(serialize_csv(b) == serialize_csv(a));
  }

  TEST_CASE("null cells") {
    for (auto s : {"", "NA", "n/a", "NULL", "  "}) CHECK(is_null(s));
    for (auto s : {"0", "none", "nan"}) CHECK_FALSE(is_null(s));
  }

  TEST_CASE("number and date parsing") {
    CHECK(parse_number("34.322533").value() == doctest::Approx(34.322533));
    CHECK(parse_number("+5").value() == 5);
    CHECK(parse_number("-1e3").value() == -1000);
    CHECK_FALSE(parse_number("12abc"));
    CHECK_FALSE(parse_number(""));
    CHECK(parse_date("2024-01-05"));
    CHECK(parse_date("2024-01"));
    CHECK(parse_date("2024/01/05"));
    CHECK(parse_date("01/05/2024"));
    CHECK(parse_date("2024-01-05 10:30:00"));
    CHECK_FALSE(parse_date("2024-13-01"));
    CHECK_FALSE(parse_date("yesterday"));
    CHECK(*parse_date("2023-12-31") < *parse_date("2024-01-01"));
    CHECK(*parse_date("12/31/2023") < *parse_date("2024-01"));
  }

  TEST_CASE("years are numeric unless the column name says otherwise") {
    auto t = infer_column_types(parse_table("t", "Year,Count\n2000,1\n2005,2\n2022,3\n"));
    CHECK(t.columns[0].kind == ColumnKind::temporal);  // name contains "year"
    CHECK(t.columns[1].kind == ColumnKind::numeric);
    auto u = infer_column_types(parse_table("t", "Period\n2000\n2005\n2022\n"));
    CHECK(u.columns[0].kind == ColumnKind::numeric);
  }

  TEST_CASE("three distinct strings over 100 rows are categorical") {
    std::string csv = "region\n";
    for (int i = 0; i < 100; ++i) csv += std::string(i % 3 == 0 ? "North" : i % 3 == 1 ? "South" : "West") + "\n";
    auto t = infer_column_types(parse_table("t", csv));
    CHECK(t.columns[0].kind == ColumnKind::categorical);
  }

  TEST_CASE("free sentences are text") {
    std::string csv = "note\n";
    for (int i = 0; i < 30; ++i) csv += "\"Sentence number " + std::to_string(i) + ", with words.\"\n";
    auto t = infer_column_types(parse_table("t", csv));
    CHECK(t.columns[0].kind == ColumnKind::text);
  }

  TEST_CASE("95 percent threshold and nulls") {
    std::string csv = "v\n";
    for (int i = 0; i < 19; ++i) csv += std::to_string(i * 1.5) + "\n";
    csv += "oops\nNA\n";  // 19 of 20 non-null numeric: exactly 95%
    auto t = infer_column_types(parse_table("t", csv));
    CHECK(t.columns[0].kind == ColumnKind::numeric);
    CHECK(t.rows[19][0] == "oops");  // original text preserved
  }

  TEST_CASE("dates become temporal; an all-null column is text") {
    auto t = infer_column_types(parse_table("t", "opened,x\n2015-03-01,\n2017-06-15,NA\n"));
    CHECK(t.columns[0].kind == ColumnKind::temporal);
    CHECK(t.columns[1].kind == ColumnKind::text);
  }

  TEST_CASE("profile basics") {
    auto t = infer_column_types(parse_table("t", "value,cat\n1,a\n2,b\n3,a\nNA,\n,b\n"));
    auto p = profile_table(t);
    CHECK(p.row_count == 5);
    const auto& v = col(p, "value");
    CHECK(v.kind == ColumnKind::numeric);
    CHECK(*v.min == 1);
    CHECK(*v.max == 3);
    CHECK(*v.mean == 2);
    CHECK(v.null_count == 2);
    const auto& c = col(p, "cat");
    CHECK(c.kind == ColumnKind::categorical);
    REQUIRE(c.top_values.size() == 2);
    CHECK(c.top_values[0] == std::pair<std::string, std::size_t>{"a", 2});
    CHECK(c.top_values[1] == std::pair<std::string, std::size_t>{"b", 2});
    CHECK(c.null_count == 1);
  }

  TEST_CASE("temporal extremes keep the original text") {
    auto t = infer_column_types(parse_table("t", "date\n06/15/2017\n2015-03-01\n2021-09-30\n"));
    auto p = profile_table(t);
    CHECK(*p.columns[0].earliest == "2015-03-01");
    CHECK(*p.columns[0].latest == "2021-09-30");
  }

  TEST_CASE("profile agrees with brute force on random tables") {
    std::mt19937_64 rng(11);
    for (int round = 0; round < 40; ++round) {
      const int rows = std::uniform_int_distribution<int>(0, 1000)(rng);
      std::string csv = "num,cat\n";
      std::vector<std::optional<double>> nums;
      std::vector<std::string> cats;
      for (int r = 0; r < rows; ++r) {
        const bool null_num = std::uniform_int_distribution<int>(0, 9)(rng) == 0;
        const int v = std::uniform_int_distribution<int>(-500, 500)(rng);
        const std::string cat = "c" + std::to_string(std::uniform_int_distribution<int>(0, 7)(rng));
        nums.push_back(null_num ? std::nullopt : std::optional<double>(v / 4.0));
        cats.push_back(cat);
        csv += (null_num ? std::string("NA") : chartloom::util::format_number(v / 4.0)) + "," + cat + "\n";
      }
      auto p = profile_table(infer_column_types(parse_table("t", csv)));
      const auto& n = col(p, "num");
      std::size_t nulls = 0;
      std::set<double> distinct;
      double sum = 0, mn = 1e300, mx = -1e300;
      for (const auto& x : nums) {
        if (!x) {
          ++nulls;
          continue;
        }
        distinct.insert(*x);
        sum += *x;
        mn = std::min(mn, *x);
        mx = std::max(mx, *x);
      }
      CHECK(n.null_count == nulls);
      CHECK(n.cardinality == distinct.size());
      CHECK(n.cardinality <= p.row_count);
      if (rows > static_cast<int>(nulls)) {
        CHECK(*n.min == mn);
        CHECK(*n.max == mx);
        CHECK(*n.mean == doctest::Approx(sum / static_cast<double>(rows - nulls)).epsilon(1e-12));
        CHECK(*n.min <= *n.mean);
        CHECK(*n.mean <= *n.max);
      }

      const auto& c = col(p, "cat");
      std::map<std::string, std::size_t> freq;
      for (const auto& s : cats) ++freq[s];
      std::vector<std::pair<std::string, std::size_t>> expected(freq.begin(), freq.end());
      std::stable_sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
      if (expected.size() > kTopValues) expected.resize(kTopValues);
      if (rows > 0) {
        CHECK(c.cardinality == freq.size());
        CHECK(c.top_values == expected);
      }
    }
  }

  TEST_CASE("sample_rows clamps and is deterministic") {
    auto t = parse_table("t", "a,b\n1,x\n2,\"y,z\"\n3,w\n");
    CHECK(sample_rows(t, 2) == "a,b\n1,x\n2,\"y,z\"\n");
    CHECK(sample_rows(t, 10) == "a,b\n1,x\n2,\"y,z\"\n3,w\n");
    CHECK(sample_rows(t, 10) == sample_rows(t, 10));
    CHECK(chartloom::util::split_lines(sample_rows(t, 1)).size() == 2);
  }

  TEST_CASE("load the fixture dataset") {
    auto d = load_dataset(testsupport::fixture("dataset_two_tables"));
    REQUIRE(d.tables.size() == 2);
    CHECK(d.tables[0].name == "sales");
    CHECK(d.tables[1].name == "stores");
    CHECK(d.source_id == "retail-h1-2024");
    CHECK(d.request.rfind("How did revenue", 0) == 0);
    CHECK(d.find_table("stores")->rows[0][1] == "Ortiz, Ana");
    CHECK(d.find_table("sales")->columns[2].kind == ColumnKind::numeric);
    CHECK(d.find_table("sales")->columns[1].kind == ColumnKind::categorical);
    CHECK(d.find_table("missing") == nullptr);
    CHECK_NOTHROW(validate_dataset(d));
  }

  TEST_CASE("dataset directory errors") {
    TempDir tmp;
    CHECK_THROWS_AS(load_dataset(tmp / "absent"), ConfigError);
    CHECK_THROWS_AS(load_dataset(tmp.path()), ConfigError);  // no tables/
    std::filesystem::create_directories(tmp / "tables");
    auto d = load_dataset(tmp.path());
    CHECK(d.source_id == tmp.path().filename().string());
    CHECK_THROWS_AS(validate_dataset(d), PreconditionError);
  }

  TEST_CASE("a 113-table source family loads every table") {
    TempDir tmp;
    std::filesystem::create_directories(tmp / "tables");
    for (int i = 0; i < 113; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "t%03d.csv", i);
      chartloom::util::write_file((tmp / "tables" / name).string(), "Year,Value\n2000," + std::to_string(i) + "\n");
    }
    chartloom::util::write_file((tmp / "request.txt").string(), "Summarize.\n");
    auto d = load_dataset(tmp.path());
    CHECK(d.tables.size() == 113);
    CHECK(d.tables.front().name == "t000");
    CHECK(d.tables.back().name == "t112");
    CHECK_NOTHROW(validate_dataset(d));
  }
}

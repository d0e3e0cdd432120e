#include "mida/dataio.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "test_util.hpp"

using namespace mida;

namespace {

DatasetTable parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in, "test.csv");
}

std::filesystem::path fresh_dir(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Small table with awkward floats to exercise the 17-digit round trip.
DatasetTable sample_table() {
  DatasetTable t;
  t.feature_names = {"f1", "f2"};
  t.features.resize(2, 3);
  t.features << 1.0 / 3.0, -2.5, 1e-17, M_PI, 0.1, -0.0;
  t.meta.resize(3);
  t.meta[0].label = "1";
  t.meta[0].device = 2;
  t.meta[0].time = 0.25;
  t.meta[0].batch = 3;
  t.meta[0].role = Role::source_labeled;
  t.meta[1].role = Role::target_test;
  t.meta[2].label = "0";
  return t;
}

}  // namespace

TEST_CASE("csv parsing on a minimal labeled file") {
  DatasetTable t = parse_string("f1,f2,label\n1,2,7\n3,4,9\n");
  REQUIRE(t.n_samples() == 2);
  REQUIRE(t.n_features() == 2);
  CHECK(t.features(0, 0) == 1.0);
  CHECK(t.features(1, 1) == 4.0);
  CHECK(*t.meta[0].label == "7");
  CHECK(*t.meta[1].label == "9");
  // defaults materialized
  CHECK(t.meta[0].device == 1);
  CHECK(t.meta[0].batch == 1);
  CHECK(t.meta[0].time == 0.0);
  CHECK(t.meta[0].role == Role::unlabeled);
}

TEST_CASE("csv role aliases map onto the canonical roles") {
  DatasetTable t = parse_string("f1,role\n1,train\n2,test\n3,unlabeled\n4,source-labeled\n");
  CHECK(t.meta[0].role == Role::source_labeled);
  CHECK(t.meta[1].role == Role::target_test);
  CHECK(t.meta[2].role == Role::unlabeled);
  CHECK(t.meta[3].role == Role::source_labeled);
}

TEST_CASE("csv save/load round trip is byte identical") {
  const DatasetTable t = sample_table();
  const std::string once = to_csv(t);
  std::istringstream in(once);
  const std::string twice = to_csv(parse_csv(in, "mem"));
  CHECK(once == twice);

  const std::filesystem::path dir = fresh_dir("mida_csv_roundtrip");
  save_csv(t, dir / "t.csv");
  DatasetTable back = load_csv(dir / "t.csv");
  save_csv(back, dir / "t2.csv");
  std::ifstream a(dir / "t.csv", std::ios::binary), b(dir / "t2.csv", std::ios::binary);
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
  std::filesystem::remove_all(dir);
}

TEST_CASE("csv parse errors carry the file position") {
  SUBCASE("ragged row") {
    try {
      parse_string("f1,f2\n1,2\n3\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.row() == 3);
      CHECK(std::string(e.what()).find("test.csv:3") != std::string::npos);
    }
  }
  SUBCASE("non-numeric feature cell") {
    try {
      parse_string("f1,f2\n1,oops\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.row() == 2);
      CHECK(e.column() == 2);
    }
  }
  SUBCASE("empty file") { CHECK_THROWS_AS(parse_string(""), ParseError); }
  SUBCASE("duplicate column") {
    CHECK_THROWS_AS(parse_string("f1,f1\n1,2\n"), ParseError);
  }
  SUBCASE("bad role value") {
    CHECK_THROWS_AS(parse_string("f1,role\n1,nope\n"), ParseError);
  }
}

TEST_CASE("zscore standardizes each batch with the sample standard deviation") {
  DatasetTable t;
  t.feature_names = {"f1"};
  t.features.resize(1, 2);
  t.features << 1.0, 3.0;
  t.meta.resize(2);
  DatasetTable z = zscore_per_batch(t);
  // mean 2, sample std sqrt(2): (1-2)/sqrt(2), (3-2)/sqrt(2)
  CHECK(z.features(0, 0) == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(z.features(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("zscore guards degenerate variance") {
  DatasetTable t;
  t.feature_names = {"f1", "f2"};
  t.features.resize(2, 3);
  t.features << 5, 5, 5, 1, 2, 3;
  t.meta.resize(3);
  DatasetTable z = zscore_per_batch(t);
  CHECK(z.features.row(0).cwiseAbs().maxCoeff() == 0.0);  // constant feature
  CHECK(std::abs(z.features.row(1).mean()) <= 1e-9);

  // singleton batch maps to zero as well
  DatasetTable s;
  s.feature_names = {"f1"};
  s.features.resize(1, 1);
  s.features << 42.0;
  s.meta.resize(1);
  CHECK(zscore_per_batch(s).features(0, 0) == 0.0);
}

TEST_CASE("zscore works per batch and is idempotent") {
  std::mt19937_64 rng(107);
  DatasetTable t;
  t.feature_names = {"f1", "f2", "f3"};
  t.features = testutil::random_matrix(3, 24, rng);
  t.features.array() += 2.0;
  t.meta.resize(24);
  for (int j = 0; j < 24; ++j) t.meta[static_cast<std::size_t>(j)].batch = 1 + j / 8;

  DatasetTable z = zscore_per_batch(t);
  for (int b = 1; b <= 3; ++b) {
    for (int r = 0; r < 3; ++r) {
      double mean = 0.0, ss = 0.0;
      for (int j = 0; j < 8; ++j) mean += z.features(r, (b - 1) * 8 + j);
      mean /= 8.0;
      for (int j = 0; j < 8; ++j) {
        const double d = z.features(r, (b - 1) * 8 + j) - mean;
        ss += d * d;
      }
      CHECK(std::abs(mean) <= 1e-9);
      CHECK(ss / 7.0 == doctest::Approx(1.0).epsilon(1e-6));
    }
  }

  DatasetTable zz = zscore_per_batch(z);
  CHECK((zz.features - z.features).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("subsample keeps sources and caps the rest deterministically") {
  DatasetTable t;
  t.feature_names = {"f1"};
  t.features.resize(1, 30);
  for (int j = 0; j < 30; ++j) t.features(0, j) = j;
  t.meta.resize(30);
  for (int j = 0; j < 10; ++j) t.meta[static_cast<std::size_t>(j)].role = Role::source_labeled;

  SUBCASE("cap smaller than the pool") {
    DatasetTable s = subsample_target(t, 5, 99);
    CHECK(s.n_samples() == 15);
    int sources = 0;
    for (const SampleMeta& m : s.meta) sources += m.role == Role::source_labeled;
    CHECK(sources == 10);
    // original column order survives
    for (Eigen::Index j = 1; j < s.n_samples(); ++j)
      CHECK(s.features(0, j) > s.features(0, j - 1));

    DatasetTable again = subsample_target(t, 5, 99);
    CHECK((s.features - again.features).cwiseAbs().maxCoeff() == 0.0);
    DatasetTable other = subsample_target(t, 5, 100);
    CHECK((s.features - other.features).cwiseAbs().maxCoeff() != 0.0);
  }
  SUBCASE("cap at least the pool size changes nothing") {
    DatasetTable s = subsample_target(t, 20, 7);
    CHECK(s.n_samples() == 30);
    CHECK((s.features - t.features).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("synthetic data converts to a table and back through csv") {
  SynthScenario scenario;
  scenario.kind = ScenarioKind::two_domain_shift;
  scenario.n_per_class_per_domain = 12;
  DatasetTable t = to_table(generate(scenario));
  CHECK(t.n_samples() == 48);
  CHECK(t.feature_names == std::vector<std::string>{"x1", "x2"});

  const std::string text = to_csv(t);
  std::istringstream in(text);
  DatasetTable back = parse_csv(in, "mem");
  CHECK(to_csv(back) == text);
  CHECK(back.indices_with_role(Role::source_labeled).size() == 24);
  CHECK(back.indices_with_role(Role::target_test).size() == 24);

  const auto classes = back.labels_as_class();
  REQUIRE(classes.size() == 48);
  for (const auto& c : classes) {
    REQUIRE(c.has_value());
    CHECK((*c == 0 || *c == 1));
  }
}

TEST_CASE("gas importer parses the sparse line format") {
  std::istringstream in("1;10.5 1:0.5 3:2.0\n6 2:1.0 128:4.0\n\n");
  DatasetTable t = import_gas_file(in, 3, "batch3.dat");
  REQUIRE(t.n_samples() == 2);
  REQUIRE(t.n_features() == 128);
  CHECK(*t.meta[0].label == "1");
  CHECK(*t.meta[1].label == "6");
  CHECK(t.features(0, 0) == 0.5);
  CHECK(t.features(2, 0) == 2.0);
  CHECK(t.features(1, 0) == 0.0);
  CHECK(t.features(1, 1) == 1.0);
  CHECK(t.features(127, 1) == 4.0);
  CHECK(t.meta[0].batch == 3);
  CHECK(t.meta[0].time == 3.0);
  CHECK(t.meta[0].device == 1);
  CHECK(t.meta[0].role == Role::unlabeled);
}

TEST_CASE("gas importer rejects malformed lines") {
  std::istringstream bad_gas("7 1:0.5\n");
  CHECK_THROWS_AS(import_gas_file(bad_gas, 1, "f"), ParseError);
  std::istringstream bad_index("1 129:0.5\n");
  CHECK_THROWS_AS(import_gas_file(bad_index, 1, "f"), ParseError);
  std::istringstream dup("1 5:0.5 5:0.7\n");
  CHECK_THROWS_AS(import_gas_file(dup, 1, "f"), ParseError);
  std::istringstream no_colon("1 5\n");
  CHECK_THROWS_AS(import_gas_file(no_colon, 1, "f"), ParseError);
}

TEST_CASE("gas batch directory import validates the distributed layout") {
  const std::filesystem::path dir = fresh_dir("mida_gas_import");

  SUBCASE("missing batch file") {
    std::ofstream(dir / "batch1.dat") << "1 1:0.5\n";
    try {
      import_gas_batches(dir);
      FAIL("expected an error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("batch2.dat") != std::string::npos);
    }
  }
  SUBCASE("wrong total count") {
    for (int b = 1; b <= 10; ++b)
      std::ofstream(dir / ("batch" + std::to_string(b) + ".dat")) << "1 1:0.5\n";
    try {
      import_gas_batches(dir);
      FAIL("expected an error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("13910") != std::string::npos);
    }
  }
  SUBCASE("accepts the expected total") {
    for (int b = 1; b <= 10; ++b) {
      std::ofstream out(dir / ("batch" + std::to_string(b) + ".dat"));
      for (int i = 0; i < 1391; ++i)
        out << ((i % 6) + 1) << " 1:" << (0.1 * b) << " 2:" << (0.01 * i) << "\n";
    }
    DatasetTable t = import_gas_batches(dir);
    CHECK(t.n_samples() == 13910);
    CHECK(t.n_features() == 128);
    CHECK(t.meta.front().batch == 1);
    CHECK(t.meta.back().batch == 10);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("corn importer assembles devices, roles, and targets") {
  const std::filesystem::path dir = fresh_dir("mida_corn_import");
  // synthetic spectra: value encodes (device, sample, wavelength)
  for (int d = 0; d < 3; ++d) {
    const char* names[3] = {"m5spec", "mp5spec", "mp6spec"};
    std::ofstream out(dir / (std::string(names[d]) + ".csv"));
    for (int i = 0; i < 80; ++i) {
      for (int w = 0; w < 700; ++w) out << (w ? "," : "") << (d + 1) * 1000 + i + w * 0.001;
      out << "\n";
    }
  }
  {
    std::ofstream out(dir / "propvals.csv");
    for (int i = 0; i < 80; ++i)
      out << 10.0 + i << "," << 3.0 + 0.5 * i << "," << 8.0 + 0.25 * i << "," << 60.0 - i
          << "\n";
  }

  DatasetTable t = import_corn(dir, "oil");
  REQUIRE(t.n_samples() == 240);
  REQUIRE(t.n_features() == 700);
  CHECK(t.features(0, 0) == doctest::Approx(1000.0));
  CHECK(t.features(0, 80) == doctest::Approx(2000.0));

  // roles: m5 = source except its held-out rows; targets test on every 4th row
  CHECK(t.meta[0].role == Role::source_labeled);
  CHECK(t.meta[3].role == Role::unlabeled);    // m5 sample 4
  CHECK(t.meta[80].role == Role::unlabeled);   // mp5 sample 1
  CHECK(t.meta[83].role == Role::target_test); // mp5 sample 4
  CHECK(t.meta[160 + 79].role == Role::target_test);  // mp6 sample 80
  CHECK(t.meta[80].device == 2);
  CHECK(t.meta[170].device == 3);

  const auto values = t.labels_as_value();
  REQUIRE(values[0].has_value());
  CHECK(*values[0] == doctest::Approx(3.0));    // oil column
  CHECK(*values[81] == doctest::Approx(3.5));   // second sample, any device

  int test_rows = 0;
  for (const SampleMeta& m : t.meta) test_rows += m.role == Role::target_test;
  CHECK(test_rows == 40);  // 20 per target device

  CHECK_THROWS_AS(import_corn(dir, "sugar"), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("reserved and malformed columns are rejected on write") {
  DatasetTable t = sample_table();
  t.feature_names[0] = "label";
  CHECK_THROWS_AS(to_csv(t), std::invalid_argument);
  t.feature_names[0] = "has,comma";
  CHECK_THROWS_AS(to_csv(t), std::invalid_argument);
  t = sample_table();
  t.meta[0].label = "with,comma";
  CHECK_THROWS_AS(to_csv(t), std::invalid_argument);
}

TEST_CASE("table selection and role queries") {
  DatasetTable t = sample_table();
  const auto idx = t.indices_with_role(Role::source_labeled);
  REQUIRE(idx.size() == 1);
  CHECK(idx[0] == 0);
  DatasetTable sel = t.select({2, 0});
  REQUIRE(sel.n_samples() == 2);
  CHECK(sel.features(0, 0) == t.features(0, 2));
  CHECK(sel.features(0, 1) == t.features(0, 0));
  CHECK(*sel.meta[1].label == "1");
  CHECK_THROWS_AS(t.select({5}), std::out_of_range);
}

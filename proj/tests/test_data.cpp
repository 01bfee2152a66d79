#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "a3t/data.hpp"
#include "a3t/training.hpp"
#include "doctest.h"

using namespace a3t;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
  const auto dir = std::filesystem::temp_directory_path() / "a3t_test_data";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path, std::ios::binary) << contents;
  return path;
}

Dataset labelled(std::vector<std::size_t> labels, std::size_t classes) {
  Dataset ds;
  ds.class_count = classes;
  ds.features = Matrix(labels.size(), 1);
  for (std::size_t i = 0; i < labels.size(); ++i) ds.features(i, 0) = static_cast<double>(i);
  ds.labels = std::move(labels);
  return ds;
}

}  // namespace

TEST_CASE("gen_moons") {
  SUBCASE("balanced classes") {
    const auto ds = gen_moons(1016, 0.3, 1);
    CHECK(ds.size() == 1016);
    CHECK(ds.class_counts() == std::vector<std::size_t>{508, 508});
    CHECK(ds.dim() == 2);
  }
  SUBCASE("noiseless points lie on the two arcs") {
    const auto ds = gen_moons(200, 0.0, 1);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const double x = ds.features(i, 0);
      const double y = ds.features(i, 1);
      const double r = ds.labels[i] == 0 ? std::hypot(x, y) : std::hypot(x - 1.0, y - 0.5);
      CHECK(std::abs(r - 1.0) < 1e-12);
      if (ds.labels[i] == 0) CHECK(y >= -1e-15);
      if (ds.labels[i] == 1) CHECK(y <= 0.5 + 1e-15);
    }
  }
  SUBCASE("centroid offset matches the arc parameterization") {
    // sum_{i=0}^{m} sin(i pi / m) = cot(pi / (2 m))
    const std::size_t per_class = 101;
    const double m = per_class - 1;
    const double mean_sin = 1.0 / std::tan(std::numbers::pi / (2.0 * m)) / per_class;
    const auto ds = gen_moons(2 * per_class, 0.0, 3);
    double y0 = 0.0, y1 = 0.0, x0 = 0.0, x1 = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      (ds.labels[i] == 0 ? y0 : y1) += ds.features(i, 1);
      (ds.labels[i] == 0 ? x0 : x1) += ds.features(i, 0);
    }
    y0 /= per_class;
    y1 /= per_class;
    CHECK(std::abs((y0 - y1) - (2.0 * mean_sin - 0.5)) < 1e-12);
    CHECK(std::abs(x1 / per_class - x0 / per_class - 1.0) < 1e-12);
  }
  SUBCASE("pure function of the seed") {
    CHECK(gen_moons(64, 0.2, 9) == gen_moons(64, 0.2, 9));
    CHECK_FALSE(gen_moons(64, 0.2, 9) == gen_moons(64, 0.2, 10));
  }
  CHECK_THROWS(gen_moons(7, 0.1, 0));
  CHECK_THROWS(gen_moons(0, 0.1, 0));
}

TEST_CASE("projection") {
  const auto moons = gen_moons(100, 0.1, 2);
  SUBCASE("identity map leaves the dataset unchanged") {
    CHECK(project_highdim(moons, ProjectionMap::identity(2)) == moons);
  }
  SUBCASE("orthogonal rows scale all distances by the same factor") {
    const double scale = 10.0;
    const auto map = ProjectionMap::random(2, 100, 5, scale);
    CHECK(map.full_row_rank());
    const auto hi = project_highdim(moons, map);
    CHECK(hi.features.rows() == 100);
    CHECK(hi.dim() == 100);
    CHECK(hi.labels == moons.labels);
    for (std::size_t a = 0; a < 20; ++a) {
      for (std::size_t b = a + 1; b < 20; ++b) {
        double lo2 = 0.0, hi2 = 0.0;
        for (std::size_t k = 0; k < 2; ++k) lo2 += std::pow(moons.features(a, k) - moons.features(b, k), 2);
        for (std::size_t k = 0; k < 100; ++k) hi2 += std::pow(hi.features(a, k) - hi.features(b, k), 2);
        CHECK(std::abs(std::sqrt(hi2) - scale * std::sqrt(lo2)) < 1e-9);
      }
    }
    const auto back = map.lower(hi.row(7));
    CHECK(std::abs(back[0] - moons.features(7, 0)) < 1e-12);
    CHECK(std::abs(back[1] - moons.features(7, 1)) < 1e-12);
  }
  SUBCASE("the full moons set lifts to N x 100") {
    const auto hi = project_highdim(gen_moons(1016, 0.3, 1), ProjectionMap::random(2, 100, 1, 10.0));
    CHECK(hi.features.rows() == 1016);
    CHECK(hi.features.cols() == 100);
  }
  SUBCASE("rank check spots dependent rows") {
    ProjectionMap p;
    p.map = Matrix(2, 3, {1.0, 2.0, 3.0, 2.0, 4.0, 6.0});
    CHECK_FALSE(p.full_row_rank());
  }
  CHECK_THROWS_AS(project_highdim(moons, ProjectionMap::identity(3)), DimensionError);
  CHECK_THROWS(ProjectionMap::random(5, 3, 0));
}

TEST_CASE("split_per_class") {
  const auto ds = gen_moons(1016, 0.3, 4);
  SUBCASE("16 per class") {
    const auto s = split_per_class(ds, 16, 8);
    CHECK(s.train.size() == 32);
    CHECK(s.train.class_counts() == std::vector<std::size_t>{16, 16});
    CHECK(s.test.size() == 1016 - 32);
  }
  SUBCASE("taking whole classes leaves an empty test side") {
    const auto s = split_per_class(ds, 508, 8);
    CHECK(s.test.size() == 0);
    CHECK(s.train.size() == 1016);
  }
  SUBCASE("disjoint and exhaustive") {
    const auto s = split_per_class(ds, 40, 3);
    std::vector<std::size_t> all = s.train_rows;
    all.insert(all.end(), s.test_rows.begin(), s.test_rows.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expected(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) expected[i] = i;
    CHECK(all == expected);
    // Row contents survive as a multiset.
    std::vector<std::vector<double>> rows_split, rows_orig;
    for (std::size_t i = 0; i < s.train.size(); ++i) rows_split.emplace_back(s.train.row(i).begin(), s.train.row(i).end());
    for (std::size_t i = 0; i < s.test.size(); ++i) rows_split.emplace_back(s.test.row(i).begin(), s.test.row(i).end());
    for (std::size_t i = 0; i < ds.size(); ++i) rows_orig.emplace_back(ds.row(i).begin(), ds.row(i).end());
    std::sort(rows_split.begin(), rows_split.end());
    std::sort(rows_orig.begin(), rows_orig.end());
    CHECK(rows_split == rows_orig);
  }
  SUBCASE("deterministic") {
    CHECK(split_per_class(ds, 16, 5).train_rows == split_per_class(ds, 16, 5).train_rows);
  }
  CHECK_THROWS(split_per_class(ds, 509, 0));
}

TEST_CASE("downsample_class") {
  std::vector<std::size_t> labels(12000, 0);
  labels.insert(labels.end(), 492, 1);
  const auto ds = labelled(labels, 2);
  const auto small = downsample_class(ds, 0, 10000, 7);
  CHECK(small.class_counts() == std::vector<std::size_t>{10000, 492});
  CHECK(downsample_class(ds, 1, 492, 7) == ds);
  CHECK(downsample_class(ds, 0, 10000, 7) == small);
  CHECK_THROWS(downsample_class(ds, 1, 493, 7));
}

TEST_CASE("gen_linear_toy") {
  SUBCASE("flipped rows sit on the wrong side of the generating line") {
    const auto toy = gen_linear_toy(200, 0.2, 0.1, 3);
    CHECK(toy.flipped.size() == 20);
    for (std::size_t i : toy.flipped) {
      const double f = toy.theta[0] * toy.data.features(i, 0) +
                       toy.theta[1] * toy.data.features(i, 1) + toy.b;
      CHECK((toy.data.labels[i] == 1 ? f : -f) < 0.0);
    }
  }
  SUBCASE("two flipped points") {
    const auto toy = gen_linear_toy(40, 0.5, 0.05, 1);
    CHECK(toy.flipped.size() == 2);
  }
  SUBCASE("separable data is fit perfectly by a linear model") {
    const auto toy = gen_linear_toy(80, 0.5, 0.0, 2);
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.warmup_epochs = 0;
    cfg.lr = 0.1;
    cfg.track_robust = false;
    const auto run = train(toy.data, NetworkSpec{{2, 2}, Activation::ReLU}, cfg);
    CHECK(run.epochs.back().natural_acc == 1.0);
  }
  CHECK_THROWS(gen_linear_toy(10, 0.1, 1.0, 0));
}

TEST_CASE("CSV parsing") {
  SUBCASE("quoted fields") {
    const auto t = parse_csv("a,b,c\r\n\"x, y\",\"say \"\"hi\"\"\",\"line\nbreak\"\r\n1,,3\n");
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0] == std::vector<std::string>{"x, y", "say \"hi\"", "line\nbreak"});
    CHECK(t.rows[1] == std::vector<std::string>{"1", "", "3"});
  }
  SUBCASE("format then parse is the identity") {
    CsvTable t{{"name", "note"}, {{"a,b", "\"q\""}, {"plain", "x\ny"}}};
    const auto back = parse_csv(format_csv(t));
    CHECK(back.header == t.header);
    CHECK(back.rows == t.rows);
  }
  CHECK_THROWS(parse_csv("a,b\n\"open,1\n"));
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("load_csv") {
  SUBCASE("one categorical and one numeric column") {
    const auto path = temp_file("small.csv", "color,size,label\nred,1.5,0\nblue,2,1\nred,-3,1\n");
    const auto r = load_csv(path, {"label", {}});
    CHECK(r.dataset.dim() == 3);
    CHECK(r.dataset.size() == 3);
    CHECK(r.dataset.feature_names == std::vector<std::string>{"color=blue", "color=red", "size"});
    CHECK(r.dataset.features(0, 1) == 1.0);
    CHECK(r.dataset.features(0, 2) == 1.5);
    CHECK(r.dataset.labels == std::vector<std::size_t>{0, 1, 1});
    CHECK(r.rejected.empty());
  }
  SUBCASE("rows with bad cells are rejected and reported") {
    const std::vector<ColumnSpec> schema{{"a", ColumnKind::Numeric}, {"b", ColumnKind::Categorical}};
    const auto t = parse_csv("a,b,y\n1,u,0\noops,v,1\n2,w\n3,u,\nnan,u,1\n4,v,1\n");
    const auto r = load_csv(t, {"y", schema});
    CHECK(r.dataset.size() == 2);
    std::vector<std::size_t> lines;
    for (const auto& rej : r.rejected) lines.push_back(rej.line);
    CHECK(lines == std::vector<std::size_t>{2, 3, 4, 5});
    CHECK(r.source_rows == std::vector<std::size_t>{0, 5});
  }
  SUBCASE("string labels map through sorted values") {
    const auto t = parse_csv("x,income\n1,>50K\n2,<=50K\n");
    const auto r = load_csv(t, {"income", {}});
    CHECK(r.dataset.class_names == std::vector<std::string>{"<=50K", ">50K"});
    CHECK(r.dataset.labels == std::vector<std::size_t>{1, 0});
  }
  SUBCASE("adult-shaped table") {
    CsvTable t;
    t.header = {"age", "workclass", "education", "marital", "occupation",
                "race", "sex", "hours", "country", "income"};
    Rng rng(1);
    std::uniform_int_distribution<int> pick(0, 3);
    for (int i = 0; i < 32000; ++i) {
      t.rows.push_back({std::to_string(18 + i % 60), "w" + std::to_string(pick(rng)),
                        "e" + std::to_string(pick(rng)), "m" + std::to_string(pick(rng)),
                        "o" + std::to_string(pick(rng)), "r" + std::to_string(pick(rng)),
                        i % 3 ? "Male" : "Female", std::to_string(20 + i % 40),
                        "c" + std::to_string(pick(rng)), i % 4 ? "<=50K" : ">50K"});
    }
    const auto r = load_csv(t, {"income", {}});
    CHECK(r.dataset.size() == 32000);
    CHECK(r.dataset.class_count == 2);
    CHECK(r.dataset.dim() == 2 + 6 * 4 + 2);
    // Exactly one indicator per categorical source column.
    for (std::size_t i = 0; i < 200; ++i) {
      double active = 0.0;
      for (std::size_t j = 0; j < r.dataset.dim(); ++j) {
        if (r.dataset.feature_names[j].find('=') != std::string::npos) active += r.dataset.features(i, j);
      }
      CHECK(active == 7.0);
    }
  }
  SUBCASE("save and reload gives the same dataset") {
    const auto t = parse_csv("a,kind,b,y\n0.1,p,1e-7,yes\n-2.5,q,3,no\n1e300,p,-0,yes\n");
    const auto first = load_csv(t, {"y", {}}).dataset;
    const auto second = load_csv(parse_csv(format_csv(dataset_to_csv(first, "y"))), {"y", {}}).dataset;
    CHECK(second == first);
  }
  SUBCASE("errors") {
    CHECK_THROWS(load_csv(std::filesystem::path("/nonexistent/file.csv"), {"y", {}}));
    const auto t = parse_csv("a,b,y\n1,2,0\n");
    CHECK_THROWS(load_csv(t, {"label", {}}));
    CHECK_THROWS(load_csv(t, {"y", {{"a", ColumnKind::Numeric}}}));
    CHECK_THROWS(load_csv(t, {"y", {{"a", ColumnKind::Numeric}, {"c", ColumnKind::Numeric}}}));
    CHECK_THROWS(load_csv(parse_csv("a,y\nx,\n"), {"y", {}}));
    CHECK_THROWS(load_csv(parse_csv("a,y\n"), {"y", {}}));
  }
}

TEST_CASE("tabular stand-in") {
  TabularStandInConfig cfg;
  cfg.rows = 50;
  const auto t = gen_tabular_standin(cfg, 3);
  CHECK(t.rows.size() == 50);
  CHECK(format_csv(t) == format_csv(gen_tabular_standin(cfg, 3)));
  const auto r = load_csv(t, {"outcome", {}});
  CHECK(r.dataset.class_count == 2);
  CHECK(r.dataset.dim() == cfg.informative + cfg.noise_columns + cfg.categorical_levels);
}

TEST_CASE("tabular stand-in with years") {
  TabularStandInConfig cfg;
  cfg.rows = 4000;
  cfg.years = 5;
  cfg.label_noise = 0.0;
  const auto t = gen_tabular_standin(cfg, 8);
  REQUIRE(t.header[t.header.size() - 2] == "year");
  std::vector<double> pos(5), total(5);
  for (const auto& row : t.rows) {
    const int y = std::stoi(row[row.size() - 2]) - cfg.first_year;
    REQUIRE(y >= 0);
    REQUIRE(y < 5);
    total[y] += 1;
    pos[y] += row.back() == "yes";
  }
  CHECK(pos[0] / total[0] == doctest::Approx(0.3).epsilon(0.25));
  CHECK(pos[4] / total[4] == doctest::Approx(0.7).epsilon(0.12));
  const auto r = load_csv(t, {"outcome", {}});
  CHECK(r.rejected.empty());
  CHECK(r.dataset.dim() == cfg.informative + cfg.noise_columns + cfg.categorical_levels + 1);
}

TEST_CASE("FeatureScaler") {
  Dataset ds;
  ds.features = Matrix(4, 2, {1.0, 5.0, 3.0, 5.0, 5.0, 5.0, 7.0, 5.0});
  ds.labels = {0, 1, 0, 1};
  ds.class_count = 2;
  const auto s = FeatureScaler::fit(ds);
  CHECK(s.mean == std::vector<double>{4.0, 5.0});
  CHECK(s.scale[0] == doctest::Approx(std::sqrt(5.0)));
  CHECK(s.scale[1] == 1.0);
  Dataset copy = ds;
  s.apply(copy);
  CHECK(copy.features(0, 0) == doctest::Approx(-3.0 / std::sqrt(5.0)));
  CHECK(copy.features(2, 1) == 0.0);
  const auto again = FeatureScaler::fit(copy);
  CHECK(again.mean[0] == doctest::Approx(0.0));
  CHECK(again.scale[0] == doctest::Approx(1.0));
  Dataset narrow;
  narrow.features = Matrix(1, 3);
  narrow.labels = {0};
  narrow.class_count = 1;
  CHECK_THROWS_AS(s.apply(narrow), DimensionError);
}

TEST_CASE("split_fraction") {
  const auto toy = gen_linear_toy(101, 0.2, 0.0, 3);
  const auto counts = toy.data.class_counts();
  const auto s = split_fraction(toy.data, 0.3, 5);
  CHECK(s.train.size() + s.test.size() == toy.data.size());
  const auto tc = s.test.class_counts();
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(tc[c] == static_cast<std::size_t>(std::lround(0.3 * counts[c])));
  }
  CHECK(std::is_sorted(s.test_rows.begin(), s.test_rows.end()));
  CHECK(s.test_rows == split_fraction(toy.data, 0.3, 5).test_rows);
  CHECK_FALSE(s.test_rows == split_fraction(toy.data, 0.3, 6).test_rows);
  CHECK_THROWS(split_fraction(toy.data, 0.0, 1));
  CHECK_THROWS(split_fraction(toy.data, 1.0, 1));
}

TEST_CASE("load_csv treats blank numeric cells as missing") {
  const auto t = parse_csv("a,b,y\n1,x,0\n,y,1\n3,,0\n4,x,1\n");
  const auto r = load_csv(t, {"y", {}});
  REQUIRE(r.rejected.size() == 1);
  CHECK(r.rejected[0].line == 2);
  CHECK(r.rejected[0].reason.find("missing") != std::string::npos);
  // A blank categorical cell is its own level.
  CHECK(r.dataset.feature_names == std::vector<std::string>{"a", "b=", "b=x"});
  CHECK(r.source_rows == std::vector<std::size_t>{0, 2, 3});
}

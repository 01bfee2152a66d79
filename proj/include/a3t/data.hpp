#pragma once

// Datasets: synthetic generators, projection, splitting and CSV I/O.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "a3t/numcore.hpp"

namespace a3t {

enum class ColumnKind { Numeric, Categorical };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
};

struct Dataset {
  Matrix features;  // N x d
  std::vector<std::size_t> labels;
  std::size_t class_count = 0;
  // Names of the (expanded) feature columns; empty for generated data.
  std::vector<std::string> feature_names;
  // Label text per class index when labels came from a CSV.
  std::vector<std::string> class_names;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }
  std::span<const double> row(std::size_t i) const { return features.row(i); }

  void validate() const;
  Dataset subset(std::span<const std::size_t> rows) const;
  std::vector<std::size_t> class_counts() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct MoonsGeometry {
  double radius = 1.0;
  double x_offset = 1.0;  // horizontal shift of the second moon
  double y_offset = 0.5;  // the second moon sits at (x_offset, y_offset) - arc
};

// Two interleaving half circles; class 0 is the upper arc. Arc positions
// are evenly spaced, coordinate noise is Gaussian.
Dataset gen_moons(std::size_t n_total, double noise_sigma, std::uint64_t seed,
                  const MoonsGeometry& geometry = {});

struct ProjectionMap {
  Matrix map;  // d_lo x d_hi, rows orthogonal with norm `scale`
  double scale = 1.0;
  std::uint64_t seed = 0;

  std::size_t low_dim() const { return map.rows(); }
  std::size_t high_dim() const { return map.cols(); }

  // Gaussian rows orthonormalized by modified Gram-Schmidt, then scaled.
  static ProjectionMap random(std::size_t d_lo, std::size_t d_hi, std::uint64_t seed,
                              double scale = 1.0);
  static ProjectionMap identity(std::size_t d);

  std::vector<double> lift(std::span<const double> low) const;
  // Least-squares inverse of lift (exact for orthogonal rows).
  std::vector<double> lower(std::span<const double> high) const;
  // Smallest singular value of map / scale, computed from the Gram matrix.
  bool full_row_rank(double tol = 1e-9) const;
};

Dataset project_highdim(const Dataset& ds, const ProjectionMap& map);

struct Split {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_rows;  // indices into the source dataset
  std::vector<std::size_t> test_rows;
};

// Exactly `per_class` rows of every class go to train, the rest to test.
// Both sides keep source order.
Split split_per_class(const Dataset& ds, std::size_t per_class, std::uint64_t seed);

// Stratified holdout: round(test_fraction * n_c) rows of each class go to
// test. Both sides keep source order.
Split split_fraction(const Dataset& ds, double test_fraction, std::uint64_t seed);

Dataset downsample_class(const Dataset& ds, std::size_t cls, std::size_t n,
                         std::uint64_t seed);

struct LinearToy {
  Dataset data;
  std::vector<double> theta;  // generating boundary theta.x + b = 0
  double b = 0.0;
  std::vector<std::size_t> flipped;  // rows whose label was flipped
};

// Two Gaussian blobs on either side of x1 + x2 = 1, truncated to keep a
// gap of `margin` around the line; class 1 lies on the positive side.
// round(flip_fraction * n) labels are then flipped.
LinearToy gen_linear_toy(std::size_t n, double margin, double flip_fraction,
                         std::uint64_t seed);

// Per-column z-scoring with statistics from one dataset (usually the
// training split). Constant columns keep scale 1.
struct FeatureScaler {
  std::vector<double> mean;
  std::vector<double> scale;

  static FeatureScaler fit(const Dataset& ds);
  void apply(Dataset& ds) const;
};

// ---- CSV (RFC 4180, ',' delimiter, header row) ----

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);
std::string format_csv(const CsvTable& table);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

struct RejectedRow {
  std::size_t line = 0;  // 1-based data row number (header excluded)
  std::string reason;
};

struct CsvLoadOptions {
  std::string label_column;
  // Columns other than the label, in header order. Empty: infer (numeric
  // when every non-blank cell parses as a number, categorical otherwise).
  // Rows with a blank numeric cell are rejected as missing values.
  std::vector<ColumnSpec> schema;
};

struct CsvLoadResult {
  Dataset dataset;
  std::vector<RejectedRow> rejected;
  std::vector<std::size_t> source_rows;  // 0-based data row of each accepted row
};

CsvLoadResult load_csv(const CsvTable& table, const CsvLoadOptions& opts);
CsvLoadResult load_csv(const std::filesystem::path& path, const CsvLoadOptions& opts);

struct TabularStandInConfig {
  std::size_t rows = 600;
  std::size_t informative = 2;   // numeric columns carrying the class signal
  std::size_t noise_columns = 12;
  std::size_t categorical_levels = 3;
  double class_gap = 1.5;        // distance between class means along the signal
  double label_noise = 0.02;
  // Class-dependent mean shift (+/-) of every noise column: weak signal
  // that a small perturbation can erase.
  double aux_shift = 0.0;
  // When > 0, adds an integer `year` column (first_year, first_year+1, ...)
  // and makes the positive rate drift from 0.3 to 0.7 across the years.
  std::size_t years = 0;
  int first_year = 2001;
};

// Binary tabular data with numeric and one categorical column, shaped like
// the income/fraud tables the tabular experiment targets. Written out as a
// CSV table so it goes through the same ingestion path as user data.
CsvTable gen_tabular_standin(const TabularStandInConfig& cfg, std::uint64_t seed);

// Feature columns as numeric columns plus a trailing `label` column.
CsvTable dataset_to_csv(const Dataset& ds, const std::string& label_column = "label");

}  // namespace a3t

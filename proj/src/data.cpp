#include "a3t/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace a3t {

void Dataset::validate() const {
  if (features.rows() != labels.size()) {
    throw DimensionError("feature rows (" + std::to_string(features.rows()) +
                         ") and label count (" + std::to_string(labels.size()) +
                         ") differ");
  }
  for (std::size_t y : labels) {
    if (y >= class_count) {
      throw std::invalid_argument("label " + std::to_string(y) + " outside [0, " +
                                  std::to_string(class_count) + ")");
    }
  }
  if (!features.all_finite()) throw std::invalid_argument("non-finite feature value");
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.class_count = class_count;
  out.feature_names = feature_names;
  out.class_names = class_names;
  out.features = Matrix(rows.size(), dim());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = row(rows[i]);
    std::copy(src.begin(), src.end(), out.features.row(i).begin());
    out.labels.push_back(labels[rows[i]]);
  }
  return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(class_count, 0);
  for (std::size_t y : labels) ++counts[y];
  return counts;
}

Dataset gen_moons(std::size_t n_total, double noise_sigma, std::uint64_t seed,
                  const MoonsGeometry& g) {
  if (n_total < 2 || n_total % 2 != 0) {
    throw std::invalid_argument("moons need an even sample count >= 2");
  }
  const std::size_t per_class = n_total / 2;
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);
  Dataset ds;
  ds.class_count = 2;
  ds.features = Matrix(n_total, 2);
  ds.labels.resize(n_total);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      const double t = per_class == 1 ? 0.0
                                      : std::numbers::pi * static_cast<double>(i) /
                                            static_cast<double>(per_class - 1);
      double x = g.radius * std::cos(t);
      double y = g.radius * std::sin(t);
      if (c == 1) {
        x = g.x_offset - x;
        y = g.y_offset - y;
      }
      const std::size_t r = c * per_class + i;
      ds.features(r, 0) = x;
      ds.features(r, 1) = y;
      ds.labels[r] = c;
    }
  }
  if (noise_sigma > 0.0) {
    for (double& v : ds.features.values()) v += noise(rng);
  }
  return ds;
}

ProjectionMap ProjectionMap::random(std::size_t d_lo, std::size_t d_hi,
                                    std::uint64_t seed, double scale) {
  if (d_lo == 0 || d_lo > d_hi) {
    throw std::invalid_argument("projection needs 0 < d_lo <= d_hi");
  }
  if (!(scale > 0.0)) throw std::invalid_argument("projection scale must be > 0");
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(d_lo, d_hi);
  for (double& v : m.values()) v = gauss(rng);
  // Two passes of modified Gram-Schmidt.
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t r = 0; r < d_lo; ++r) {
      auto row = m.row(r);
      for (std::size_t q = 0; q < r; ++q) {
        const auto prev = m.row(q);
        double proj = 0.0;
        for (std::size_t i = 0; i < d_hi; ++i) proj += row[i] * prev[i];
        for (std::size_t i = 0; i < d_hi; ++i) row[i] -= proj * prev[i];
      }
      double norm = 0.0;
      for (double v : row) norm += v * v;
      norm = std::sqrt(norm);
      if (norm < 1e-12) throw std::runtime_error("degenerate projection draw");
      for (double& v : row) v /= norm;
    }
  }
  for (double& v : m.values()) v *= scale;
  ProjectionMap p;
  p.map = std::move(m);
  p.scale = scale;
  p.seed = seed;
  if (!p.full_row_rank()) throw std::runtime_error("projection is rank deficient");
  return p;
}

ProjectionMap ProjectionMap::identity(std::size_t d) {
  ProjectionMap p;
  p.map = Matrix(d, d);
  for (std::size_t i = 0; i < d; ++i) p.map(i, i) = 1.0;
  return p;
}

std::vector<double> ProjectionMap::lift(std::span<const double> low) const {
  if (low.size() != low_dim()) throw DimensionError("projection input dimension");
  std::vector<double> out(high_dim(), 0.0);
  for (std::size_t r = 0; r < low_dim(); ++r) {
    const auto row = map.row(r);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += low[r] * row[i];
  }
  return out;
}

std::vector<double> ProjectionMap::lower(std::span<const double> high) const {
  if (high.size() != high_dim()) throw DimensionError("projection output dimension");
  std::vector<double> out(low_dim(), 0.0);
  const double s2 = scale * scale;
  for (std::size_t r = 0; r < low_dim(); ++r) {
    const auto row = map.row(r);
    double acc = 0.0;
    for (std::size_t i = 0; i < high.size(); ++i) acc += row[i] * high[i];
    out[r] = acc / s2;
  }
  return out;
}

bool ProjectionMap::full_row_rank(double tol) const {
  // Cholesky of the normalized Gram matrix; a tiny pivot means dependence.
  const std::size_t n = low_dim();
  const double s2 = scale * scale;
  Matrix g(n, n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      double acc = 0.0;
      const auto ra = map.row(a);
      const auto rb = map.row(b);
      for (std::size_t i = 0; i < high_dim(); ++i) acc += ra[i] * rb[i];
      g(a, b) = g(b, a) = acc / s2;
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    double d = g(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= g(j, k) * g(j, k);
    if (d <= tol) return false;
    d = std::sqrt(d);
    g(j, j) = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = g(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= g(i, k) * g(j, k);
      g(i, j) = v / d;
    }
  }
  return true;
}

Dataset project_highdim(const Dataset& ds, const ProjectionMap& map) {
  if (map.low_dim() != ds.dim()) {
    throw DimensionError("projection expects " + std::to_string(map.low_dim()) +
                         "-d features, dataset has " + std::to_string(ds.dim()));
  }
  Dataset out;
  out.labels = ds.labels;
  out.class_count = ds.class_count;
  out.class_names = ds.class_names;
  out.features = Matrix(ds.size(), map.high_dim());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto lifted = map.lift(ds.row(i));
    std::copy(lifted.begin(), lifted.end(), out.features.row(i).begin());
  }
  return out;
}

Split split_per_class(const Dataset& ds, std::size_t per_class, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> by_class(ds.class_count);
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);
  std::vector<bool> in_train(ds.size(), false);
  for (std::size_t c = 0; c < ds.class_count; ++c) {
    auto& rows = by_class[c];
    if (rows.size() < per_class) {
      throw std::invalid_argument("class " + std::to_string(c) + " has only " +
                                  std::to_string(rows.size()) + " rows, need " +
                                  std::to_string(per_class));
    }
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t k = 0; k < per_class; ++k) in_train[rows[k]] = true;
  }
  Split s;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (in_train[i] ? s.train_rows : s.test_rows).push_back(i);
  }
  s.train = ds.subset(s.train_rows);
  s.test = ds.subset(s.test_rows);
  return s;
}

Split split_fraction(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("test fraction must lie in (0, 1)");
  }
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> by_class(ds.class_count);
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);
  std::vector<bool> in_test(ds.size(), false);
  for (auto& rows : by_class) {
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto n = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(rows.size())));
    for (std::size_t k = 0; k < n; ++k) in_test[rows[k]] = true;
  }
  Split s;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (in_test[i] ? s.test_rows : s.train_rows).push_back(i);
  }
  if (s.train_rows.empty() || s.test_rows.empty()) {
    throw std::invalid_argument("holdout split leaves one side empty");
  }
  s.train = ds.subset(s.train_rows);
  s.test = ds.subset(s.test_rows);
  return s;
}

Dataset downsample_class(const Dataset& ds, std::size_t cls, std::size_t n,
                         std::uint64_t seed) {
  if (cls >= ds.class_count) throw std::invalid_argument("class index out of range");
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.labels[i] == cls) members.push_back(i);
  }
  if (n > members.size()) {
    throw std::invalid_argument("cannot keep " + std::to_string(n) + " rows of class " +
                                std::to_string(cls) + ": only " +
                                std::to_string(members.size()) + " present");
  }
  Rng rng(seed);
  std::shuffle(members.begin(), members.end(), rng);
  std::vector<bool> keep(ds.size(), true);
  for (std::size_t k = n; k < members.size(); ++k) keep[members[k]] = false;
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (keep[i]) rows.push_back(i);
  }
  return ds.subset(rows);
}

LinearToy gen_linear_toy(std::size_t n, double margin, double flip_fraction,
                         std::uint64_t seed) {
  if (!(flip_fraction >= 0.0 && flip_fraction < 1.0)) {
    throw std::invalid_argument("flip fraction must be in [0, 1)");
  }
  if (!(margin >= 0.0)) throw std::invalid_argument("margin must be >= 0");
  LinearToy toy;
  toy.theta = {1.0, 1.0};
  toy.b = -1.0;
  const double inv_norm = 1.0 / std::sqrt(2.0);
  const double shift = margin / 2.0 + 1.0;
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 0.5);
  Dataset& ds = toy.data;
  ds.class_count = 2;
  ds.features = Matrix(n, 2);
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % 2;
    const double side = c == 1 ? 1.0 : -1.0;
    const double cx = 0.5 + side * shift * inv_norm;
    const double cy = 0.5 + side * shift * inv_norm;
    double x = 0.0;
    double y = 0.0;
    do {
      x = cx + gauss(rng);
      y = cy + gauss(rng);
    } while (side * (x + y - 1.0) * inv_norm < margin / 2.0);
    ds.features(i, 0) = x;
    ds.features(i, 1) = y;
    ds.labels[i] = c;
  }
  const auto flips =
      static_cast<std::size_t>(std::llround(flip_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  toy.flipped.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(flips));
  std::sort(toy.flipped.begin(), toy.flipped.end());
  for (std::size_t i : toy.flipped) ds.labels[i] = 1 - ds.labels[i];
  return toy;
}

// ---- CSV ----

CsvTable parse_csv(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    const bool blank = record.size() == 1 && record[0].empty() && !field_started;
    if (!blank) records.push_back(std::move(record));
    record.clear();
    field_started = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (in_quotes) throw std::invalid_argument("unterminated quoted field");
  if (field_started || !field.empty() || !record.empty()) end_record();

  CsvTable table;
  if (records.empty()) throw std::invalid_argument("CSV has no header row");
  table.header = std::move(records.front());
  table.rows.assign(std::make_move_iterator(records.begin() + 1),
                    std::make_move_iterator(records.end()));
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

namespace {

std::string quote_field(const std::string& f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

// Empty optional when the cell is not a number at all.
std::optional<double> parse_number(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
  return v;
}

}  // namespace

std::string format_csv(const CsvTable& table) {
  std::string out;
  auto emit = [&out](const std::vector<std::string>& rec) {
    for (std::size_t i = 0; i < rec.size(); ++i) {
      if (i) out.push_back(',');
      out += quote_field(rec[i]);
    }
    out.push_back('\n');
  };
  emit(table.header);
  for (const auto& r : table.rows) emit(r);
  return out;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << format_csv(table);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

CsvLoadResult load_csv(const CsvTable& table, const CsvLoadOptions& opts) {
  const auto& header = table.header;
  const auto label_it = std::find(header.begin(), header.end(), opts.label_column);
  if (label_it == header.end()) {
    throw std::invalid_argument("label column '" + opts.label_column +
                                "' not in CSV header");
  }
  const auto label_col = static_cast<std::size_t>(label_it - header.begin());
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_col) feature_cols.push_back(c);
  }

  // Schema: given or inferred.
  std::vector<ColumnSpec> schema = opts.schema;
  if (schema.empty()) {
    for (std::size_t c : feature_cols) {
      // Blank cells are missing values and do not decide the kind.
      bool numeric = true;
      bool any = false;
      for (const auto& row : table.rows) {
        if (row.size() != header.size() || trim(row[c]).empty()) continue;
        any = true;
        if (!parse_number(row[c])) {
          numeric = false;
          break;
        }
      }
      numeric = numeric && any;
      schema.push_back({header[c], numeric ? ColumnKind::Numeric : ColumnKind::Categorical});
    }
  } else {
    if (schema.size() != feature_cols.size()) {
      throw std::invalid_argument("schema lists " + std::to_string(schema.size()) +
                                  " columns, CSV has " +
                                  std::to_string(feature_cols.size()) +
                                  " non-label columns");
    }
    for (std::size_t k = 0; k < schema.size(); ++k) {
      if (schema[k].name != header[feature_cols[k]]) {
        throw std::invalid_argument("schema column '" + schema[k].name +
                                    "' does not match header column '" +
                                    header[feature_cols[k]] + "'");
      }
    }
  }

  CsvLoadResult result;
  std::vector<std::size_t> accepted;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = r + 1;
    if (row.size() != header.size()) {
      result.rejected.push_back({line, "expected " + std::to_string(header.size()) +
                                           " fields, found " + std::to_string(row.size())});
      continue;
    }
    if (trim(row[label_col]).empty()) {
      result.rejected.push_back({line, "empty label"});
      continue;
    }
    std::string reason;
    for (std::size_t k = 0; k < schema.size() && reason.empty(); ++k) {
      if (schema[k].kind != ColumnKind::Numeric) continue;
      const auto v = parse_number(row[feature_cols[k]]);
      if (trim(row[feature_cols[k]]).empty()) {
        reason = "column '" + schema[k].name + "': missing value";
      } else if (!v) {
        reason = "column '" + schema[k].name + "': not a number";
      } else if (!std::isfinite(*v)) {
        reason = "column '" + schema[k].name + "': non-finite value";
      }
    }
    if (!reason.empty()) {
      result.rejected.push_back({line, reason});
      continue;
    }
    accepted.push_back(r);
  }
  if (accepted.empty()) throw std::invalid_argument("CSV yields an empty dataset");

  // Categorical levels from accepted rows, in sorted order.
  std::vector<std::vector<std::string>> levels(schema.size());
  std::size_t dim = 0;
  std::vector<std::string> names;
  for (std::size_t k = 0; k < schema.size(); ++k) {
    if (schema[k].kind == ColumnKind::Numeric) {
      ++dim;
      names.push_back(schema[k].name);
      continue;
    }
    std::set<std::string> seen;
    for (std::size_t r : accepted) seen.insert(std::string(trim(table.rows[r][feature_cols[k]])));
    levels[k].assign(seen.begin(), seen.end());
    dim += levels[k].size();
    for (const auto& lv : levels[k]) names.push_back(schema[k].name + "=" + lv);
  }

  // Labels: non-negative integers are used as class indices, anything else
  // is mapped through sorted distinct values.
  bool integer_labels = true;
  std::size_t max_label = 0;
  for (std::size_t r : accepted) {
    const auto cell = trim(table.rows[r][label_col]);
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
      integer_labels = false;
      break;
    }
    max_label = std::max(max_label, v);
  }
  std::map<std::string, std::size_t> label_index;
  Dataset& ds = result.dataset;
  if (integer_labels) {
    ds.class_count = max_label + 1;
  } else {
    std::set<std::string> seen;
    for (std::size_t r : accepted) seen.insert(std::string(trim(table.rows[r][label_col])));
    for (const auto& s : seen) {
      label_index.emplace(s, ds.class_names.size());
      ds.class_names.push_back(s);
    }
    ds.class_count = ds.class_names.size();
  }

  ds.features = Matrix(accepted.size(), dim);
  ds.labels.reserve(accepted.size());
  ds.feature_names = std::move(names);
  for (std::size_t i = 0; i < accepted.size(); ++i) {
    const auto& row = table.rows[accepted[i]];
    auto out = ds.features.row(i);
    std::size_t col = 0;
    for (std::size_t k = 0; k < schema.size(); ++k) {
      const auto cell = trim(row[feature_cols[k]]);
      if (schema[k].kind == ColumnKind::Numeric) {
        out[col++] = *parse_number(cell);
      } else {
        const auto& lv = levels[k];
        const auto pos = std::lower_bound(lv.begin(), lv.end(), cell) - lv.begin();
        out[col + static_cast<std::size_t>(pos)] = 1.0;
        col += lv.size();
      }
    }
    const auto lcell = trim(row[label_col]);
    if (integer_labels) {
      std::size_t v = 0;
      std::from_chars(lcell.data(), lcell.data() + lcell.size(), v);
      ds.labels.push_back(v);
    } else {
      ds.labels.push_back(label_index.at(std::string(lcell)));
    }
    result.source_rows.push_back(accepted[i]);
  }
  ds.validate();
  return result;
}

CsvLoadResult load_csv(const std::filesystem::path& path, const CsvLoadOptions& opts) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("CSV file not found: " + path.string());
  }
  return load_csv(read_csv(path), opts);
}

CsvTable dataset_to_csv(const Dataset& ds, const std::string& label_column) {
  CsvTable t;
  for (std::size_t j = 0; j < ds.dim(); ++j) {
    t.header.push_back(j < ds.feature_names.size() ? ds.feature_names[j]
                                                   : "x" + std::to_string(j));
  }
  t.header.push_back(label_column);
  t.rows.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::vector<std::string> rec;
    rec.reserve(ds.dim() + 1);
    for (double v : ds.row(i)) rec.push_back(format_double(v));
    rec.push_back(ds.class_names.empty() ? std::to_string(ds.labels[i])
                                         : ds.class_names[ds.labels[i]]);
    t.rows.push_back(std::move(rec));
  }
  return t;
}

FeatureScaler FeatureScaler::fit(const Dataset& ds) {
  if (ds.size() == 0) throw std::invalid_argument("cannot fit a scaler on an empty dataset");
  FeatureScaler s;
  const std::size_t d = ds.dim();
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 0.0);
  const double n = static_cast<double>(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += ds.features(i, j);
  }
  for (double& m : s.mean) m /= n;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = ds.features(i, j) - s.mean[j];
      s.scale[j] += c * c;
    }
  }
  for (double& v : s.scale) {
    v = std::sqrt(v / n);
    if (v < 1e-12) v = 1.0;
  }
  return s;
}

void FeatureScaler::apply(Dataset& ds) const {
  if (mean.size() != ds.dim() || scale.size() != ds.dim()) {
    throw DimensionError("scaler width does not match the dataset");
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < ds.dim(); ++j) {
      ds.features(i, j) = (ds.features(i, j) - mean[j]) / scale[j];
    }
  }
}

CsvTable gen_tabular_standin(const TabularStandInConfig& cfg, std::uint64_t seed) {
  if (cfg.informative == 0 || cfg.rows < 2 || cfg.categorical_levels == 0) {
    throw std::invalid_argument("tabular stand-in needs rows >= 2 and informative >= 1");
  }
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> level(0, cfg.categorical_levels - 1);
  CsvTable t;
  for (std::size_t j = 0; j < cfg.informative; ++j) t.header.push_back("signal" + std::to_string(j));
  for (std::size_t j = 0; j < cfg.noise_columns; ++j) t.header.push_back("aux" + std::to_string(j));
  t.header.push_back("segment");
  if (cfg.years > 0) t.header.push_back("year");
  t.header.push_back("outcome");
  std::uniform_int_distribution<std::size_t> year(0, cfg.years > 0 ? cfg.years - 1 : 0);
  const double along = cfg.class_gap / 2.0 / std::sqrt(static_cast<double>(cfg.informative));
  for (std::size_t i = 0; i < cfg.rows; ++i) {
    bool positive = i % 2 == 1;
    std::size_t y = 0;
    if (cfg.years > 0) {
      y = year(rng);
      const double drift = cfg.years > 1 ? static_cast<double>(y) / static_cast<double>(cfg.years - 1) : 0.5;
      positive = unit(rng) < 0.3 + 0.4 * drift;
    }
    std::vector<std::string> rec;
    for (std::size_t j = 0; j < cfg.informative; ++j) {
      rec.push_back(format_double((positive ? along : -along) + 0.5 * gauss(rng)));
    }
    for (std::size_t j = 0; j < cfg.noise_columns; ++j) {
      rec.push_back(format_double((positive ? cfg.aux_shift : -cfg.aux_shift) + gauss(rng)));
    }
    rec.push_back(std::string(1, static_cast<char>('a' + level(rng))));
    if (cfg.years > 0) rec.push_back(std::to_string(cfg.first_year + static_cast<int>(y)));
    const bool flip = unit(rng) < cfg.label_noise;
    rec.push_back((positive != flip) ? "yes" : "no");
    t.rows.push_back(std::move(rec));
  }
  return t;
}

}  // namespace a3t

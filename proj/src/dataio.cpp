#include "mida/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mida/rng.hpp"

namespace mida {

namespace {

const std::vector<std::string> kReservedColumns = {"label", "device", "time", "batch", "role"};

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& token, const std::string& path, long row, long col) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw ParseError(path, row, col, "expected a number, got \"" + token + "\"");
  return value;
}

long parse_long(const std::string& token, const std::string& path, long row, long col) {
  long value = 0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw ParseError(path, row, col, "expected an integer, got \"" + token + "\"");
  return value;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

std::vector<BackgroundRecord> DatasetTable::backgrounds() const {
  std::vector<BackgroundRecord> out;
  out.reserve(meta.size());
  for (const SampleMeta& m : meta) out.push_back({m.device, m.time, m.batch, m.role});
  return out;
}

DatasetTable DatasetTable::select(const std::vector<Eigen::Index>& indices) const {
  DatasetTable out;
  out.feature_names = feature_names;
  out.features.resize(features.rows(), static_cast<Eigen::Index>(indices.size()));
  out.meta.reserve(indices.size());
  Eigen::Index j = 0;
  for (Eigen::Index idx : indices) {
    if (idx < 0 || idx >= n_samples())
      throw std::out_of_range("select: index " + std::to_string(idx) + " outside 0.." +
                              std::to_string(n_samples() - 1));
    out.features.col(j++) = features.col(idx);
    out.meta.push_back(meta[static_cast<std::size_t>(idx)]);
  }
  return out;
}

std::vector<Eigen::Index> DatasetTable::indices_with_role(Role role) const {
  std::vector<Eigen::Index> out;
  for (Eigen::Index j = 0; j < n_samples(); ++j)
    if (meta[static_cast<std::size_t>(j)].role == role) out.push_back(j);
  return out;
}

std::vector<std::optional<int>> DatasetTable::labels_as_class() const {
  std::vector<std::optional<int>> out;
  out.reserve(meta.size());
  for (const SampleMeta& m : meta) {
    if (!m.label) {
      out.push_back(std::nullopt);
      continue;
    }
    out.push_back(static_cast<int>(parse_long(*m.label, "<labels>", 0, 0)));
  }
  return out;
}

std::vector<std::optional<double>> DatasetTable::labels_as_value() const {
  std::vector<std::optional<double>> out;
  out.reserve(meta.size());
  for (const SampleMeta& m : meta) {
    if (!m.label) {
      out.push_back(std::nullopt);
      continue;
    }
    out.push_back(parse_double(*m.label, "<labels>", 0, 0));
  }
  return out;
}

DatasetTable to_table(const SynthData& data) {
  DatasetTable table;
  table.features = data.X;
  for (Eigen::Index r = 0; r < data.X.rows(); ++r)
    table.feature_names.push_back("x" + std::to_string(r + 1));
  table.meta.reserve(data.backgrounds.size());
  for (std::size_t j = 0; j < data.backgrounds.size(); ++j) {
    const BackgroundRecord& rec = data.backgrounds[j];
    SampleMeta m;
    m.label = std::to_string(data.labels[j]);
    m.device = rec.device;
    m.time = rec.time;
    m.batch = rec.batch;
    m.role = rec.role;
    table.meta.push_back(std::move(m));
  }
  return table;
}

std::string to_csv(const DatasetTable& table) {
  if (static_cast<Eigen::Index>(table.feature_names.size()) != table.n_features())
    throw DimensionError("to_csv: feature_names size does not match feature rows");
  if (static_cast<Eigen::Index>(table.meta.size()) != table.n_samples())
    throw DimensionError("to_csv: meta size does not match sample count");
  const std::set<std::string> reserved(kReservedColumns.begin(), kReservedColumns.end());
  for (const std::string& name : table.feature_names) {
    if (reserved.count(name))
      throw std::invalid_argument("to_csv: feature name \"" + name + "\" is reserved");
    if (name.find_first_of(",\n\r") != std::string::npos || name.empty())
      throw std::invalid_argument("to_csv: invalid feature name \"" + name + "\"");
  }

  std::string out;
  for (const std::string& name : table.feature_names) {
    out += name;
    out += ',';
  }
  out += "label,device,time,batch,role\n";

  for (Eigen::Index j = 0; j < table.n_samples(); ++j) {
    const SampleMeta& m = table.meta[static_cast<std::size_t>(j)];
    for (Eigen::Index r = 0; r < table.n_features(); ++r) {
      out += format_double(table.features(r, j));
      out += ',';
    }
    if (m.label) {
      if (m.label->find_first_of(",\n\r") != std::string::npos)
        throw std::invalid_argument("to_csv: label contains a separator: \"" + *m.label + "\"");
      out += *m.label;
    }
    out += ',';
    out += std::to_string(m.device);
    out += ',';
    out += format_double(m.time);
    out += ',';
    out += std::to_string(m.batch);
    out += ',';
    out += to_string(m.role);
    out += '\n';
  }
  return out;
}

DatasetTable parse_csv(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path, 1, 1, "empty file");
  line = strip_cr(line);
  const std::vector<std::string> header = split(line, ',');

  std::map<std::string, std::size_t> reserved_at;
  std::vector<std::size_t> feature_cols;
  std::vector<std::string> feature_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& name = header[c];
    if (std::find(kReservedColumns.begin(), kReservedColumns.end(), name) !=
        kReservedColumns.end()) {
      if (reserved_at.count(name))
        throw ParseError(path, 1, static_cast<long>(c + 1), "duplicate column \"" + name + "\"");
      reserved_at[name] = c;
    } else {
      if (name.empty())
        throw ParseError(path, 1, static_cast<long>(c + 1), "empty column name");
      if (std::find(feature_names.begin(), feature_names.end(), name) != feature_names.end())
        throw ParseError(path, 1, static_cast<long>(c + 1), "duplicate column \"" + name + "\"");
      feature_cols.push_back(c);
      feature_names.push_back(name);
    }
  }

  std::vector<std::vector<std::string>> rows;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> cells = split(line, ',');
    if (cells.size() != header.size())
      throw ParseError(path, lineno, 1,
                       "expected " + std::to_string(header.size()) + " cells, got " +
                           std::to_string(cells.size()));
    rows.push_back(std::move(cells));
  }

  DatasetTable table;
  table.feature_names = feature_names;
  table.features.resize(static_cast<Eigen::Index>(feature_cols.size()),
                        static_cast<Eigen::Index>(rows.size()));
  table.meta.resize(rows.size());

  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::vector<std::string>& cells = rows[r];
    const long err_row = static_cast<long>(r + 2);
    for (std::size_t k = 0; k < feature_cols.size(); ++k)
      table.features(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(r)) =
          parse_double(cells[feature_cols[k]], path, err_row,
                       static_cast<long>(feature_cols[k] + 1));
    SampleMeta& m = table.meta[r];
    if (auto it = reserved_at.find("label"); it != reserved_at.end()) {
      const std::string& cell = cells[it->second];
      if (!cell.empty()) m.label = cell;
    }
    if (auto it = reserved_at.find("device"); it != reserved_at.end())
      m.device = static_cast<int>(
          parse_long(cells[it->second], path, err_row, static_cast<long>(it->second + 1)));
    if (auto it = reserved_at.find("time"); it != reserved_at.end())
      m.time = parse_double(cells[it->second], path, err_row, static_cast<long>(it->second + 1));
    if (auto it = reserved_at.find("batch"); it != reserved_at.end())
      m.batch = static_cast<int>(
          parse_long(cells[it->second], path, err_row, static_cast<long>(it->second + 1)));
    if (auto it = reserved_at.find("role"); it != reserved_at.end()) {
      try {
        m.role = role_from_string(cells[it->second]);
      } catch (const std::invalid_argument& e) {
        throw ParseError(path, err_row, static_cast<long>(it->second + 1), e.what());
      }
    }
  }
  return table;
}

DatasetTable load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  return parse_csv(in, path.string());
}

void save_csv(const DatasetTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << to_csv(table);
  if (!out) throw ConfigError("write failed: " + path.string());
}

DatasetTable zscore_per_batch(const DatasetTable& table) {
  DatasetTable out = table;
  std::map<int, std::vector<Eigen::Index>> groups;
  for (Eigen::Index j = 0; j < table.n_samples(); ++j)
    groups[table.meta[static_cast<std::size_t>(j)].batch].push_back(j);

  for (const auto& [batch, idx] : groups) {
    const double n = static_cast<double>(idx.size());
    for (Eigen::Index r = 0; r < table.n_features(); ++r) {
      double mean = 0.0;
      for (Eigen::Index j : idx) mean += table.features(r, j);
      mean /= n;
      double ss = 0.0;
      for (Eigen::Index j : idx) {
        const double d = table.features(r, j) - mean;
        ss += d * d;
      }
      const double sd = idx.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
      for (Eigen::Index j : idx)
        out.features(r, j) = sd > 0.0 ? (table.features(r, j) - mean) / sd : 0.0;
    }
  }
  return out;
}

DatasetTable subsample_target(const DatasetTable& table, Eigen::Index n_t, std::uint64_t seed) {
  if (n_t < 0) throw std::invalid_argument("subsample_target: n_t must be >= 0");
  std::vector<Eigen::Index> kept;
  std::vector<Eigen::Index> pool;
  for (Eigen::Index j = 0; j < table.n_samples(); ++j) {
    if (table.meta[static_cast<std::size_t>(j)].role == Role::source_labeled)
      kept.push_back(j);
    else
      pool.push_back(j);
  }
  if (static_cast<Eigen::Index>(pool.size()) > n_t) {
    // Partial Fisher-Yates: the first n_t slots end up a uniform sample.
    Rng rng(seed);
    for (Eigen::Index i = 0; i < n_t; ++i) {
      const std::size_t j = static_cast<std::size_t>(i) +
                            static_cast<std::size_t>(rng.integer_below(pool.size() - i));
      std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(n_t));
  }
  kept.insert(kept.end(), pool.begin(), pool.end());
  std::sort(kept.begin(), kept.end());
  return table.select(kept);
}

DatasetTable import_gas_file(std::istream& in, int batch_index,
                             const std::string& path) {
  constexpr int kFeatures = 128;
  std::vector<Eigen::VectorXd> columns;
  std::vector<SampleMeta> metas;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    std::istringstream tokens(line);
    std::string head;
    tokens >> head;
    // Some distributions append the analyte concentration to the label.
    const std::size_t semi = head.find(';');
    const std::string label_token = semi == std::string::npos ? head : head.substr(0, semi);
    const long gas = parse_long(label_token, path, lineno, 1);
    if (gas < 1 || gas > 6)
      throw ParseError(path, lineno, 1, "gas label " + std::to_string(gas) + " outside 1..6");

    Eigen::VectorXd col = Eigen::VectorXd::Zero(kFeatures);
    std::vector<bool> seen(kFeatures, false);
    std::string pair;
    long field = 1;
    while (tokens >> pair) {
      ++field;
      const std::size_t colon = pair.find(':');
      if (colon == std::string::npos)
        throw ParseError(path, lineno, field, "expected index:value, got \"" + pair + "\"");
      const long idx = parse_long(pair.substr(0, colon), path, lineno, field);
      if (idx < 1 || idx > kFeatures)
        throw ParseError(path, lineno, field,
                         "feature index " + std::to_string(idx) + " outside 1..128");
      if (seen[static_cast<std::size_t>(idx - 1)])
        throw ParseError(path, lineno, field, "duplicate feature index " + std::to_string(idx));
      seen[static_cast<std::size_t>(idx - 1)] = true;
      col(idx - 1) = parse_double(pair.substr(colon + 1), path, lineno, field);
    }

    SampleMeta m;
    m.label = std::to_string(gas);
    m.device = 1;
    m.time = batch_index;
    m.batch = batch_index;
    m.role = Role::unlabeled;
    columns.push_back(std::move(col));
    metas.push_back(std::move(m));
  }

  DatasetTable table;
  for (int r = 1; r <= kFeatures; ++r) table.feature_names.push_back("f" + std::to_string(r));
  table.features.resize(kFeatures, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j)
    table.features.col(static_cast<Eigen::Index>(j)) = columns[j];
  table.meta = std::move(metas);
  return table;
}

DatasetTable import_gas_batches(const std::filesystem::path& dir) {
  constexpr int kBatches = 10;
  constexpr Eigen::Index kTotal = 13910;
  std::vector<DatasetTable> parts;
  Eigen::Index total = 0;
  for (int b = 1; b <= kBatches; ++b) {
    const std::filesystem::path file = dir / ("batch" + std::to_string(b) + ".dat");
    std::ifstream in(file);
    if (!in)
      throw ConfigError("missing " + file.string() +
                        "; expected batch1.dat .. batch10.dat from the gas sensor array drift "
                        "distribution");
    parts.push_back(import_gas_file(in, b, file.string()));
    total += parts.back().n_samples();
  }
  if (total != kTotal)
    throw ConfigError("gas sensor import found " + std::to_string(total) +
                      " samples, expected " + std::to_string(kTotal));

  DatasetTable table;
  table.feature_names = parts.front().feature_names;
  table.features.resize(parts.front().n_features(), total);
  table.meta.reserve(static_cast<std::size_t>(total));
  Eigen::Index at = 0;
  for (const DatasetTable& part : parts) {
    table.features.middleCols(at, part.n_samples()) = part.features;
    table.meta.insert(table.meta.end(), part.meta.begin(), part.meta.end());
    at += part.n_samples();
  }
  return table;
}

namespace {

// Whitespace- or comma-separated numeric matrix.
Eigen::MatrixXd load_matrix(const std::filesystem::path& path, Eigen::Index rows,
                            Eigen::Index cols) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::vector<std::vector<double>> data;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream tokens(line);
    std::vector<double> row;
    std::string tok;
    while (tokens >> tok)
      row.push_back(parse_double(tok, path.string(), lineno, static_cast<long>(row.size() + 1)));
    if (row.empty()) continue;
    data.push_back(std::move(row));
  }
  if (static_cast<Eigen::Index>(data.size()) != rows)
    throw ConfigError(path.string() + ": expected " + std::to_string(rows) + " rows, found " +
                      std::to_string(data.size()));
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(data[static_cast<std::size_t>(r)].size()) != cols)
      throw ConfigError(path.string() + ": row " + std::to_string(r + 1) + " has " +
                        std::to_string(data[static_cast<std::size_t>(r)].size()) +
                        " values, expected " + std::to_string(cols));
    for (Eigen::Index c = 0; c < cols; ++c)
      M(r, c) = data[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  return M;
}

}  // namespace

const std::vector<std::string>& corn_properties() {
  static const std::vector<std::string> props = {"moisture", "oil", "protein", "starch"};
  return props;
}

DatasetTable import_corn(const std::filesystem::path& dir, const std::string& property) {
  const auto& props = corn_properties();
  const auto it = std::find(props.begin(), props.end(), property);
  if (it == props.end())
    throw ConfigError("unknown corn property \"" + property +
                      "\"; expected moisture, oil, protein or starch");
  const Eigen::Index prop_col = it - props.begin();

  constexpr Eigen::Index kSamples = 80;
  constexpr Eigen::Index kWavelengths = 700;
  const char* devices[3] = {"m5spec", "mp5spec", "mp6spec"};
  const Eigen::MatrixXd props_matrix = load_matrix(dir / "propvals.csv", kSamples, 4);

  DatasetTable table;
  for (int r = 1; r <= kWavelengths; ++r) table.feature_names.push_back("w" + std::to_string(r));
  table.features.resize(kWavelengths, 3 * kSamples);
  table.meta.resize(static_cast<std::size_t>(3 * kSamples));

  for (int d = 0; d < 3; ++d) {
    const Eigen::MatrixXd spec =
        load_matrix(dir / (std::string(devices[d]) + ".csv"), kSamples, kWavelengths);
    for (Eigen::Index i = 0; i < kSamples; ++i) {
      const Eigen::Index j = d * kSamples + i;
      table.features.col(j) = spec.row(i).transpose();
      SampleMeta& m = table.meta[static_cast<std::size_t>(j)];
      m.label = format_double(props_matrix(i, prop_col));
      m.device = d + 1;
      m.time = 0.0;
      m.batch = d + 1;
      // Every fourth sample is the benchmark's test split.
      const bool test = (i + 1) % 4 == 0;
      if (d == 0)
        m.role = test ? Role::unlabeled : Role::source_labeled;
      else
        m.role = test ? Role::target_test : Role::unlabeled;
    }
  }
  return table;
}

}  // namespace mida

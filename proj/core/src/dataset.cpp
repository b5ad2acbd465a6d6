#include "floc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "floc/random.hpp"

namespace floc::dataset {

namespace {

constexpr std::array<std::string_view, 5> kColumns{"temp", "do", "ph", "tds", "floc"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(',', start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view to_string(ErrorKind k) noexcept {
  switch (k) {
    case ErrorKind::Io: return "Io";
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::RowParse: return "RowParse";
    case ErrorKind::EmptyFile: return "EmptyFile";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::ConstantFeature: return "ConstantFeature";
    case ErrorKind::DegenerateSplit: return "DegenerateSplit";
  }
  return "Unknown";
}

std::vector<FeatureVector> LabeledDataset::feature_matrix() const {
  std::vector<FeatureVector> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.features());
  return out;
}

void LabeledDataset::push_back(const WaterSample& s, const BinEdges& edges) {
  if (!s.do_mg_l)
    throw DatasetError(ErrorKind::InvariantViolation, "labeled sample without do_mg_l");
  labels.push_back(bin_do(*s.do_mg_l, edges));
  samples.push_back(s);
}

LabeledDataset LabeledDataset::subset(const std::vector<std::size_t>& indices) const {
  LabeledDataset out;
  out.samples.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (auto i : indices) {
    out.samples.push_back(samples.at(i));
    out.labels.push_back(labels.at(i));
  }
  return out;
}

DoClass bin_do(double do_mg_l, const BinEdges& edges) {
  if (!std::isfinite(do_mg_l))
    throw DatasetError(ErrorKind::NonFinite, "bin_do: dissolved oxygen is not finite");
  if (do_mg_l < edges[0]) return DoClass::Shallow;
  if (do_mg_l < edges[1]) return DoClass::Low;
  if (do_mg_l < edges[2]) return DoClass::Average;
  return DoClass::High;
}

LabeledDataset parse_csv(std::string_view text, bool header_expected, const BinEdges& edges) {
  LabeledDataset out;
  bool header_pending = header_expected;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (trim(raw).empty()) continue;

    const auto fields = split_commas(raw);
    if (header_pending) {
      header_pending = false;
      for (std::size_t i = 0; i < kColumns.size(); ++i) {
        if (i >= fields.size() || lower(fields[i]) != kColumns[i])
          throw DatasetError(ErrorKind::MissingColumn,
                             "missing column '" + std::string(kColumns[i]) + "' at position " +
                                 std::to_string(i + 1) + " of the header",
                             line_no, std::string(kColumns[i]));
      }
      if (fields.size() != kColumns.size())
        throw DatasetError(ErrorKind::MissingColumn, "header has unexpected extra columns",
                           line_no);
      continue;
    }

    std::array<double, 5> values{};
    for (std::size_t i = 0; i < kColumns.size(); ++i) {
      const std::string col(kColumns[i]);
      if (i >= fields.size())
        throw DatasetError(ErrorKind::RowParse,
                           "line " + std::to_string(line_no) + ": missing field '" + col + "'",
                           line_no, col);
      const auto f = fields[i];
      double v = 0.0;
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc{} || p != f.data() + f.size() || !std::isfinite(v))
        throw DatasetError(ErrorKind::RowParse,
                           "line " + std::to_string(line_no) + ": cannot parse field '" + col +
                               "' from '" + std::string(f) + "'",
                           line_no, col);
      values[i] = v;
    }
    if (fields.size() > kColumns.size())
      throw DatasetError(ErrorKind::RowParse,
                         "line " + std::to_string(line_no) + ": too many fields", line_no);

    WaterSample s{values[0], values[2], values[3], values[4], values[1]};
    if (auto err = validate(s))
      throw DatasetError(ErrorKind::InvariantViolation,
                         "line " + std::to_string(line_no) + ": " + *err, line_no);
    out.push_back(s, edges);
  }
  if (out.empty()) throw DatasetError(ErrorKind::EmptyFile, "no data rows");
  return out;
}

LabeledDataset load_csv(const std::filesystem::path& path, bool header_expected,
                        const BinEdges& edges) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_csv(buf.str(), header_expected, edges);
  } catch (const DatasetError& e) {
    throw DatasetError(e.kind(), path.string() + ": " + e.what(), e.line(), e.field());
  }
}

void write_csv(const std::filesystem::path& path, const LabeledDataset& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError(ErrorKind::Io, "cannot write " + path.string());
  out << kCsvHeader << '\n';
  char buf[256];
  for (const auto& s : data.samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", s.temp,
                  s.do_mg_l.value_or(0.0), s.ph, s.tds, s.floc);
    out << buf;
  }
  if (!out) throw DatasetError(ErrorKind::Io, "write failed for " + path.string());
}

NormStats fit_norm(const LabeledDataset& data) {
  if (data.empty()) throw DatasetError(ErrorKind::EmptyFile, "fit_norm: empty dataset");
  NormStats stats;
  const auto n = static_cast<double>(data.size());
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    double sum = 0.0;
    for (const auto& s : data.samples) sum += s.features()[f];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& s : data.samples) {
      const double d = s.features()[f] - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / n);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean))))
      throw DatasetError(ErrorKind::ConstantFeature,
                         "feature '" + std::string(kFeatureNames[f]) + "' is constant",
                         0, std::string(kFeatureNames[f]));
    stats.mean[f] = mean;
    stats.std[f] = sd;
  }
  return stats;
}

FeatureVector apply_norm(const NormStats& stats, const FeatureVector& x) {
  FeatureVector out{};
  for (std::size_t f = 0; f < kNumFeatures; ++f) out[f] = (x[f] - stats.mean[f]) / stats.std[f];
  return out;
}

Split split(const LabeledDataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw DatasetError(ErrorKind::DegenerateSplit, "train fraction must lie in (0, 1)");
  const auto n = data.size();
  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));
  if (n < 2 || n_train == 0 || n_train >= n)
    throw DatasetError(ErrorKind::DegenerateSplit,
                       "split of " + std::to_string(n) + " rows leaves one side empty");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  Split out;
  out.train_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.test_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  out.train = data.subset(out.train_indices);
  out.test = data.subset(out.test_indices);
  return out;
}

std::string fingerprint(const LabeledDataset& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](std::string_view bytes) {
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  char buf[256];
  for (const auto& s : data.samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", s.temp,
                  s.do_mg_l.value_or(-1.0), s.ph, s.tds, s.floc);
    mix(buf);
  }
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace floc::dataset

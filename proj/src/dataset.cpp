#include "f2sa/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "f2sa/error.hpp"
#include "f2sa/rng.hpp"

namespace f2sa {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::vector<unsigned char> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_u32(const std::vector<unsigned char>& b, std::size_t offset, const std::string& path) {
  if (offset + 4 > b.size()) throw ParseError("'" + path + "' is truncated in its header", b.size());
  return (std::uint32_t{b[offset]} << 24) | (std::uint32_t{b[offset + 1]} << 16) |
         (std::uint32_t{b[offset + 2]} << 8) | std::uint32_t{b[offset + 3]};
}

void put_u32(std::ofstream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                         static_cast<char>(v)};
  out.write(bytes, 4);
}

void check_labels(const std::vector<int>& labels, int num_classes, const std::string& origin) {
  if (num_classes < 2) throw InvalidArgument("num_classes must be at least 2");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw DataError(origin + ": label " + std::to_string(labels[i]) + " of example " + std::to_string(i) +
                      " is outside [0, " + std::to_string(num_classes) + ")");
    }
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

}  // namespace

DatasetFormat dataset_format_from_string(const std::string& s) {
  if (s == "idx") return DatasetFormat::Idx;
  if (s == "csv") return DatasetFormat::Csv;
  throw InvalidArgument("unknown dataset format '" + s + "'");
}

Matrix read_idx_images(const std::string& path) {
  const auto b = read_bytes(path);
  const std::uint32_t magic = read_u32(b, 0, path);
  if (magic != kImagesMagic) throw ParseError("'" + path + "' has bad IDX image magic", 0);
  const std::uint32_t n = read_u32(b, 4, path);
  const std::uint32_t rows = read_u32(b, 8, path);
  const std::uint32_t cols = read_u32(b, 12, path);
  const std::uint64_t pixels = std::uint64_t{rows} * cols;
  const std::uint64_t need = 16 + std::uint64_t{n} * pixels;
  if (b.size() < need) {
    throw ParseError("'" + path + "' is truncated: expected " + std::to_string(need) + " bytes", b.size());
  }
  Matrix out(n, pixels);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint64_t j = 0; j < pixels; ++j) out(i, j) = b[16 + i * pixels + j] / 255.0;
  return out;
}

std::vector<int> read_idx_labels(const std::string& path) {
  const auto b = read_bytes(path);
  const std::uint32_t magic = read_u32(b, 0, path);
  if (magic != kLabelsMagic) throw ParseError("'" + path + "' has bad IDX label magic", 0);
  const std::uint32_t n = read_u32(b, 4, path);
  if (b.size() < 8 + std::uint64_t{n}) {
    throw ParseError("'" + path + "' is truncated: expected " + std::to_string(8 + std::uint64_t{n}) + " bytes",
                     b.size());
  }
  return std::vector<int>(b.begin() + 8, b.begin() + 8 + n);
}

void write_idx_images(const std::string& path, const Matrix& features, int rows, int cols) {
  if (static_cast<long>(rows) * cols != features.cols()) throw InvalidArgument("image shape does not match features");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  put_u32(out, kImagesMagic);
  put_u32(out, static_cast<std::uint32_t>(features.rows()));
  put_u32(out, static_cast<std::uint32_t>(rows));
  put_u32(out, static_cast<std::uint32_t>(cols));
  for (long i = 0; i < features.rows(); ++i)
    for (long j = 0; j < features.cols(); ++j) {
      const double v = std::clamp(features(i, j), 0.0, 1.0);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
}

void write_idx_labels(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  put_u32(out, kLabelsMagic);
  put_u32(out, static_cast<std::uint32_t>(labels.size()));
  for (int l : labels) {
    if (l < 0 || l > 255) throw InvalidArgument("IDX labels must fit in one byte");
    out.put(static_cast<char>(static_cast<unsigned char>(l)));
  }
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path, int num_classes) {
  Dataset d;
  d.features = read_idx_images(images_path);
  d.labels = read_idx_labels(labels_path);
  d.num_classes = num_classes;
  if (static_cast<long>(d.labels.size()) != d.features.rows()) {
    throw DataError("'" + images_path + "' has " + std::to_string(d.features.rows()) + " images but '" +
                    labels_path + "' has " + std::to_string(d.labels.size()) + " labels");
  }
  check_labels(d.labels, num_classes, labels_path);
  return d;
}

Dataset load_csv(const std::string& path, int num_classes) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw DataError("'" + path + "' is empty");
  const auto header = split_csv(trim(line));
  const auto it = std::find_if(header.begin(), header.end(), [](const std::string& h) { return trim(h) == "label"; });
  if (it == header.end()) throw DataError("'" + path + "' has no 'label' column");
  const std::size_t label_col = static_cast<std::size_t>(it - header.begin());

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw DataError("'" + path + "' line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " cells, found " + std::to_string(cells.size()));
    }
    std::vector<double> feats;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string cell = trim(cells[c]);
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        throw DataError("'" + path + "' line " + std::to_string(line_no) + ": '" + cell + "' is not a number");
      }
      if (c == label_col) {
        if (v != std::floor(v)) throw DataError("'" + path + "' line " + std::to_string(line_no) + ": non-integer label");
        labels.push_back(static_cast<int>(v));
      } else {
        if (!(v >= 0.0 && v <= 255.0)) {
          throw DataError("'" + path + "' line " + std::to_string(line_no) + ": intensity outside [0, 255]");
        }
        feats.push_back(v / 255.0);
      }
    }
    rows.push_back(std::move(feats));
  }
  if (rows.empty()) throw DataError("'" + path + "' has no data rows");
  Dataset d;
  d.features.resize(static_cast<long>(rows.size()), static_cast<long>(header.size()) - 1);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) d.features(i, j) = rows[i][j];
  d.labels = std::move(labels);
  d.num_classes = num_classes;
  check_labels(d.labels, num_classes, path);
  return d;
}

Dataset load_dataset(const std::string& path, DatasetFormat format, int num_classes, const std::string& labels_path) {
  if (format == DatasetFormat::Csv) return load_csv(path, num_classes);
  if (labels_path.empty()) throw InvalidArgument("IDX datasets need a label file");
  return load_idx(path, labels_path, num_classes);
}

Corruption corrupt_labels(const std::vector<int>& labels, double p, int num_classes, std::uint64_t seed) {
  if (!(p >= 0.0 && p < 1.0)) throw InvalidArgument("corruption probability must lie in [0, 1)");
  if (num_classes < 2) throw InvalidArgument("num_classes must be at least 2");
  Corruption out{labels, std::vector<bool>(labels.size(), false)};
  SplitMix64 engine(hash_combine(seed, 0xc0ffULL));
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> shift(1, num_classes - 1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    // Both draws happen for every example so the mask of one p is a prefix of
    // the mask of any larger p for the same seed.
    const double u = coin(engine);
    const int s = shift(engine);
    if (u < p) {
      out.labels[i] = (labels[i] + s) % num_classes;
      out.mask[i] = true;
    }
  }
  return out;
}

Dataset make_blobs(long n, int d, int num_classes, double spread, std::uint64_t center_seed,
                   std::uint64_t sample_seed, double center_width) {
  if (n < 1 || d < 1 || num_classes < 2) throw InvalidArgument("blob sizes must be positive with at least 2 classes");
  if (!(spread >= 0.0)) throw InvalidArgument("spread must be nonnegative");
  if (!(center_width >= 0.0 && center_width <= 1.0)) throw InvalidArgument("center_width must lie in [0, 1]");
  SplitMix64 ce(hash_combine(center_seed, 0xb10bULL));
  std::uniform_real_distribution<double> uc(0.5 - center_width / 2, 0.5 + center_width / 2);
  Matrix centers(num_classes, d);
  for (int c = 0; c < num_classes; ++c)
    for (int j = 0; j < d; ++j) centers(c, j) = uc(ce);

  SplitMix64 se(hash_combine(sample_seed, 0x5a3dULL));
  std::uniform_int_distribution<int> cls(0, num_classes - 1);
  std::normal_distribution<double> normal(0.0, spread);
  Dataset out;
  out.num_classes = num_classes;
  out.features.resize(n, d);
  out.labels.resize(n);
  for (long i = 0; i < n; ++i) {
    const int c = cls(se);
    out.labels[i] = c;
    for (int j = 0; j < d; ++j) out.features(i, j) = std::clamp(centers(c, j) + normal(se), 0.0, 1.0);
  }
  return out;
}

Dataset take_prefix(const Dataset& data, long count) {
  const long k = std::min(count, data.size());
  Dataset out;
  out.num_classes = data.num_classes;
  out.features = data.features.topRows(k);
  out.labels.assign(data.labels.begin(), data.labels.begin() + k);
  return out;
}

}  // namespace f2sa

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "f2sa/types.hpp"

namespace f2sa {

/// Labeled examples; row i of `features` is example i, entries in [0, 1].
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  int num_classes = 0;

  long size() const { return static_cast<long>(labels.size()); }
  int dim() const { return static_cast<int>(features.cols()); }
};

enum class DatasetFormat { Idx, Csv };

DatasetFormat dataset_format_from_string(const std::string& s);

/// IDX image file (magic 0x00000803): bytes scaled by 1/255, one row per image.
/// Throws ParseError with the byte offset on a bad magic or truncation.
Matrix read_idx_images(const std::string& path);
/// IDX label file (magic 0x00000801).
std::vector<int> read_idx_labels(const std::string& path);

void write_idx_images(const std::string& path, const Matrix& features, int rows, int cols);
void write_idx_labels(const std::string& path, const std::vector<int>& labels);

/// Images plus labels; labels outside [0, num_classes) raise DataError.
Dataset load_idx(const std::string& images_path, const std::string& labels_path, int num_classes = 10);

/// CSV with a header row and a column named "label"; every other column is a
/// raw intensity in [0, 255] and is scaled by 1/255. An empty file, a ragged
/// row or a bad value raises DataError.
Dataset load_csv(const std::string& path, int num_classes = 10);

/// `path` is the image file for IDX (the label file is `labels_path`) or the
/// CSV file.
Dataset load_dataset(const std::string& path, DatasetFormat format, int num_classes = 10,
                     const std::string& labels_path = "");

struct Corruption {
  std::vector<int> labels;
  std::vector<bool> mask;  // true where the label was replaced
};

/// Replaces each label, independently with probability p, by a uniformly drawn
/// different class. Throws InvalidArgument unless 0 <= p < 1 and num_classes >= 2.
Corruption corrupt_labels(const std::vector<int>& labels, double p, int num_classes, std::uint64_t seed);

/// Gaussian blobs around class centers drawn uniformly from the cube of side
/// `center_width` centered at 0.5, clipped to [0, 1].
/// The centers depend only on `center_seed`, so train and validation sets
/// drawn with different `sample_seed` share the same classes.
Dataset make_blobs(long n, int d, int num_classes, double spread, std::uint64_t center_seed,
                   std::uint64_t sample_seed, double center_width = 0.5);

/// First `count` examples (all if count exceeds the size).
Dataset take_prefix(const Dataset& data, long count);

}  // namespace f2sa

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace minopt {

/// Bounded continuous box or fixed-length categorical sequence space.
class InputSpace {
 public:
  enum class Kind { kContinuous, kCategorical };

  static InputSpace continuous(std::vector<double> lower,
                               std::vector<double> upper);
  static InputSpace categorical(std::size_t length, std::size_t alphabet);

  Kind kind() const { return kind_; }
  bool is_continuous() const { return kind_ == Kind::kContinuous; }

  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  std::size_t length() const { return length_; }
  std::size_t alphabet() const { return alphabet_; }

  /// Raw x length: continuous dimension, or sequence length.
  std::size_t x_dim() const {
    return is_continuous() ? lower_.size() : length_;
  }

  bool contains(std::span<const double> x) const;
  bool operator==(const InputSpace& o) const = default;

 private:
  InputSpace() = default;
  Kind kind_ = Kind::kContinuous;
  std::vector<double> lower_, upper_;  // continuous
  std::size_t length_ = 0, alphabet_ = 0;  // categorical
};

/// One observation. Categorical x is stored as integer-valued entries; the
/// one-hot expansion happens only at the model boundary.
struct Record {
  std::vector<double> context;  // empty unless the dataset is contextual
  std::vector<double> x;
  double y = 0.0;
};

class Dataset {
 public:
  Dataset(InputSpace space, bool contextual, std::size_t context_dim);

  /// Validates the record against the space before inserting.
  void add(Record r);

  const InputSpace& space() const { return space_; }
  bool contextual() const { return contextual_; }
  std::size_t context_dim() const { return context_dim_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const Record& operator[](std::size_t i) const { return records_[i]; }
  const std::vector<Record>& records() const { return records_; }

  std::vector<double> y_values() const;
  double y_max() const;
  /// Index of a record attaining the maximum y (lowest index on ties).
  std::size_t argmax_y() const;

  void save(const std::filesystem::path& path) const;
  static Dataset load(const std::filesystem::path& path);

 private:
  InputSpace space_;
  bool contextual_ = false;
  std::size_t context_dim_ = 0;
  std::vector<Record> records_;
};

/// Linear-interpolation quantile of an unsorted sample, q in [0,1].
double quantile(std::vector<double> values, double q);

/// Shortest text form of a double that parses back to the same bits.
std::string format_double(double v);

}  // namespace minopt

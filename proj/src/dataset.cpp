#include "minopt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace minopt {

using nlohmann::json;

namespace {
constexpr int kFormatVersion = 1;
}

InputSpace InputSpace::continuous(std::vector<double> lower,
                                  std::vector<double> upper) {
  if (lower.empty() || lower.size() != upper.size())
    throw std::invalid_argument("continuous space: bad bounds");
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (!(lower[i] < upper[i]))
      throw std::invalid_argument("continuous space: lower must be < upper");
  InputSpace s;
  s.kind_ = Kind::kContinuous;
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  return s;
}

InputSpace InputSpace::categorical(std::size_t length, std::size_t alphabet) {
  if (length < 1 || alphabet < 2)
    throw std::invalid_argument("categorical space: need length>=1, alphabet>=2");
  InputSpace s;
  s.kind_ = Kind::kCategorical;
  s.length_ = length;
  s.alphabet_ = alphabet;
  return s;
}

bool InputSpace::contains(std::span<const double> x) const {
  if (x.size() != x_dim()) return false;
  if (is_continuous()) {
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!(x[i] >= lower_[i] && x[i] <= upper_[i])) return false;
    return true;
  }
  for (double v : x) {
    if (v != std::floor(v) || v < 0 || v >= double(alphabet_)) return false;
  }
  return true;
}

Dataset::Dataset(InputSpace space, bool contextual, std::size_t context_dim)
    : space_(std::move(space)),
      contextual_(contextual),
      context_dim_(context_dim) {
  if (contextual_ && context_dim_ == 0)
    throw std::invalid_argument("contextual dataset needs context_dim > 0");
}

void Dataset::add(Record r) {
  if (!space_.contains(r.x))
    throw std::invalid_argument("record x outside the input space");
  if (contextual_ ? r.context.size() != context_dim_ : !r.context.empty())
    throw std::invalid_argument("record context does not match the dataset");
  if (!std::isfinite(r.y)) throw std::invalid_argument("record y not finite");
  records_.push_back(std::move(r));
}

std::vector<double> Dataset::y_values() const {
  std::vector<double> ys(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) ys[i] = records_[i].y;
  return ys;
}

double Dataset::y_max() const { return records_[argmax_y()].y; }

std::size_t Dataset::argmax_y() const {
  if (records_.empty()) throw std::logic_error("y_max of empty dataset");
  std::size_t best = 0;
  for (std::size_t i = 1; i < records_.size(); ++i)
    if (records_[i].y > records_[best].y) best = i;
  return best;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string vector_json(const std::vector<double>& v, bool as_int) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += as_int ? std::to_string(llround(v[i])) : format_double(v[i]);
  }
  return out + "]";
}

json space_json(const InputSpace& s) {
  json j;
  if (s.is_continuous()) {
    j["kind"] = "continuous";
    j["lower"] = s.lower();
    j["upper"] = s.upper();
  } else {
    j["kind"] = "categorical";
    j["length"] = s.length();
    j["alphabet"] = s.alphabet();
  }
  return j;
}

InputSpace space_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "continuous")
    return InputSpace::continuous(j.at("lower").get<std::vector<double>>(),
                                  j.at("upper").get<std::vector<double>>());
  if (kind == "categorical")
    return InputSpace::categorical(j.at("length").get<std::size_t>(),
                                   j.at("alphabet").get<std::size_t>());
  throw std::runtime_error("dataset: unknown space kind " + kind);
}

}  // namespace

void Dataset::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string());

  // Header line. The record count makes truncation detectable on load.
  json header;
  header["format_version"] = kFormatVersion;
  header["contextual"] = contextual_;
  header["context_dim"] = context_dim_;
  header["space"] = space_json(space_);
  header["count"] = records_.size();
  out << header.dump() << "\n";

  const bool as_int = !space_.is_continuous();
  for (const Record& r : records_) {
    out << "{";
    if (contextual_) out << "\"c\":" << vector_json(r.context, false) << ",";
    out << "\"x\":" << vector_json(r.x, as_int)
        << ",\"y\":" << format_double(r.y) << "}\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Dataset Dataset::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("dataset file is empty: " + path.string());

  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed dataset header: " + std::string(e.what()));
  }
  if (header.at("format_version").get<int>() != kFormatVersion)
    throw std::runtime_error("dataset format version mismatch");

  Dataset ds(space_from_json(header.at("space")),
             header.at("contextual").get<bool>(),
             header.value("context_dim", std::size_t{0}));
  const auto count = header.at("count").get<std::size_t>();

  std::size_t seen = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error("malformed dataset record " +
                               std::to_string(seen) + ": " + e.what());
    }
    Record r;
    if (ds.contextual()) r.context = j.at("c").get<std::vector<double>>();
    r.x = j.at("x").get<std::vector<double>>();
    r.y = j.at("y").get<double>();
    ds.add(std::move(r));
    ++seen;
  }
  if (seen != count)
    throw std::runtime_error("dataset truncated: header count " +
                             std::to_string(count) + ", found " +
                             std::to_string(seen));
  return ds;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * double(values.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = pos - double(lo);
  return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

}  // namespace minopt

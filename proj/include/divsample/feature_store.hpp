#pragma once

// Feature tables: one domain's embedding matrix with per-instance ids, class
// labels and selection weights, plus the CSV ingestion/writer.
//
// CSV layout (UTF-8, one instance per row):
//
//   id,domain,label[,weight],f0,f1,...,f{d-1}
//
// The weight column is optional and defaults to 1.0 when absent.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "divsample/error.hpp"
#include "divsample/subset.hpp"

namespace divsample {

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class FeatureTable {
public:
  FeatureTable(std::string domain, FeatureMatrix features, std::vector<std::string> ids,
               std::vector<std::string> labels, std::vector<double> weights)
      : domain_(std::move(domain)),
        features_(std::move(features)),
        ids_(std::move(ids)),
        labels_(std::move(labels)),
        weights_(std::move(weights)) {
    validate();
  }

  /// Table with generated ids ("0", "1", ...), empty labels and unit weights.
  static FeatureTable from_features(FeatureMatrix features, std::string domain = "") {
    const auto n = static_cast<std::size_t>(features.rows());
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = std::to_string(i);
    return FeatureTable(std::move(domain), std::move(features), std::move(ids),
                        std::vector<std::string>(n), std::vector<double>(n, 1.0));
  }

  std::size_t n() const noexcept { return static_cast<std::size_t>(features_.rows()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(features_.cols()); }
  const std::string& domain() const noexcept { return domain_; }
  const FeatureMatrix& features() const noexcept { return features_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  FeatureTable with_weights(std::vector<double> weights) const {
    return FeatureTable(domain_, features_, ids_, labels_, std::move(weights));
  }

  /// Same instances with a new embedding (e.g. a refreshed feature snapshot).
  FeatureTable with_features(FeatureMatrix features) const {
    if (static_cast<std::size_t>(features.rows()) != n())
      throw ValidationError("replacement features must keep the instance count");
    return FeatureTable(domain_, std::move(features), ids_, labels_, weights_);
  }

  /// Rows picked by `subset`, in subset order.
  FeatureTable select(const Subset& subset) const {
    subset.check_bounds(n());
    const auto k = static_cast<Eigen::Index>(subset.size());
    FeatureMatrix rows(k, features_.cols());
    std::vector<std::string> ids, labels;
    std::vector<double> weights;
    ids.reserve(subset.size());
    labels.reserve(subset.size());
    weights.reserve(subset.size());
    Eigen::Index r = 0;
    for (std::size_t i : subset) {
      rows.row(r++) = features_.row(static_cast<Eigen::Index>(i));
      ids.push_back(ids_[i]);
      labels.push_back(labels_[i]);
      weights.push_back(weights_[i]);
    }
    return FeatureTable(domain_, std::move(rows), std::move(ids), std::move(labels),
                        std::move(weights));
  }

  std::size_t positive_weight_count() const {
    return static_cast<std::size_t>(
        std::count_if(weights_.begin(), weights_.end(), [](double w) { return w > 0.0; }));
  }

private:
  void validate() const {
    const std::size_t rows = n();
    if (rows == 0) throw ValidationError("feature table '" + domain_ + "' is empty");
    if (d() == 0) throw ValidationError("feature dimension must be at least 1");
    if (ids_.size() != rows || labels_.size() != rows || weights_.size() != rows)
      throw ValidationError("ids, labels and weights must each have one entry per row");
    if (!features_.allFinite())
      throw ValidationError("feature table '" + domain_ + "' contains non-finite values");
    bool any_positive = false;
    for (double w : weights_) {
      if (!(w >= 0.0) || !std::isfinite(w))
        throw ValidationError("weights must be finite and non-negative");
      any_positive = any_positive || w > 0.0;
    }
    if (!any_positive) throw ValidationError("at least one weight must be positive");
    std::unordered_set<std::string_view> seen;
    seen.reserve(rows);
    for (const auto& id : ids_)
      if (!seen.insert(id).second)
        throw ValidationError("duplicate id '" + id + "' in domain '" + domain_ + "'");
  }

  std::string domain_;
  FeatureMatrix features_;
  std::vector<std::string> ids_;
  std::vector<std::string> labels_;
  std::vector<double> weights_;
};

/// Ordered set of per-domain tables sharing one feature dimension.
class DomainCollection {
public:
  DomainCollection() = default;

  explicit DomainCollection(std::vector<FeatureTable> tables) : tables_(std::move(tables)) {
    for (std::size_t i = 0; i < tables_.size(); ++i) {
      if (tables_[i].d() != tables_.front().d())
        throw ValidationError("domain '" + tables_[i].domain() +
                              "' has a different feature dimension");
      for (std::size_t j = 0; j < i; ++j)
        if (tables_[j].domain() == tables_[i].domain())
          throw ValidationError("duplicate domain tag '" + tables_[i].domain() + "'");
    }
  }

  std::size_t size() const noexcept { return tables_.size(); }
  bool empty() const noexcept { return tables_.empty(); }
  std::size_t d() const noexcept { return tables_.empty() ? 0 : tables_.front().d(); }
  const FeatureTable& operator[](std::size_t i) const { return tables_.at(i); }
  auto begin() const noexcept { return tables_.begin(); }
  auto end() const noexcept { return tables_.end(); }

  std::optional<std::size_t> index_of(std::string_view tag) const {
    for (std::size_t i = 0; i < tables_.size(); ++i)
      if (tables_[i].domain() == tag) return i;
    return std::nullopt;
  }

  const FeatureTable& at(std::string_view tag) const {
    if (auto i = index_of(tag)) return tables_[*i];
    throw ValidationError("unknown domain '" + std::string(tag) + "'");
  }

  std::vector<std::string> tags() const {
    std::vector<std::string> out;
    for (const auto& t : tables_) out.push_back(t.domain());
    return out;
  }

private:
  std::vector<FeatureTable> tables_;
};

/// Inverse class-frequency weights: w_i = N / (C * n_c(i)), so that every class
/// carries the same total mass N / C.
inline std::vector<double> class_balance_weights(const FeatureTable& table) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& label : table.labels()) ++counts[label];
  const double total = static_cast<double>(table.n());
  const double classes = static_cast<double>(counts.size());
  std::vector<double> w;
  w.reserve(table.n());
  for (const auto& label : table.labels())
    w.push_back(total / (classes * static_cast<double>(counts[label])));
  return w;
}

/// Per-dimension z-scoring with statistics pooled over every domain, so that
/// mean offsets between domains survive. Constant dimensions are only centered.
inline DomainCollection zscore(const DomainCollection& collection) {
  if (collection.empty()) return collection;
  const auto d = static_cast<Eigen::Index>(collection.d());
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(d);
  double count = 0.0;
  for (const auto& t : collection) {
    sum += t.features().colwise().sum();
    count += static_cast<double>(t.n());
  }
  const Eigen::RowVectorXd mean = sum / count;
  Eigen::RowVectorXd sq = Eigen::RowVectorXd::Zero(d);
  for (const auto& t : collection)
    sq += (t.features().rowwise() - mean).array().square().matrix().colwise().sum();
  Eigen::RowVectorXd scale = Eigen::RowVectorXd::Ones(d);
  if (count > 1.0) scale = (sq / (count - 1.0)).cwiseSqrt();
  for (Eigen::Index j = 0; j < d; ++j)
    if (!(scale[j] > 0.0)) scale[j] = 1.0;

  std::vector<FeatureTable> out;
  for (const auto& t : collection) {
    FeatureMatrix f = (t.features().rowwise() - mean).array().rowwise() / scale.array();
    out.push_back(t.with_features(std::move(f)));
  }
  return DomainCollection(std::move(out));
}

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline void check_text_field(const std::string& s, const char* what) {
  if (s.find_first_of(",\r\n\"") != std::string::npos)
    throw ValidationError(std::string(what) + " '" + s +
                          "' contains a comma, quote or line break");
}

struct PendingTable {
  std::vector<std::string> ids;
  std::vector<std::string> labels;
  std::vector<double> weights;
  std::vector<double> values;
};

}  // namespace detail

/// Parses Feature CSV from a stream, grouping rows by the `domain` column in
/// order of first appearance. With `domain_filter`, only that domain is kept.
inline DomainCollection read_feature_csv(std::istream& in,
                                         std::optional<std::string> domain_filter = {}) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) break;
  }
  if (line.empty()) throw ValidationError("feature file is empty");

  const auto header = detail::split_csv_line(line);
  if (header.size() < 4 || header[0] != "id" || header[1] != "domain" || header[2] != "label")
    throw ParseError(line_no, "header must start with id,domain,label");
  const bool has_weight = header[3] == "weight";
  const std::size_t first_feature = has_weight ? 4 : 3;
  const std::size_t d = header.size() - first_feature;
  if (d == 0) throw ParseError(line_no, "header declares no feature columns");
  for (std::size_t j = 0; j < d; ++j)
    if (header[first_feature + j] != "f" + std::to_string(j))
      throw ParseError(line_no, "expected column f" + std::to_string(j) + ", got '" +
                                    std::string(header[first_feature + j]) + "'");

  std::vector<std::string> order;
  std::map<std::string, detail::PendingTable, std::less<>> pending;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                    std::to_string(fields.size()));
    std::string domain(fields[1]);
    if (domain_filter && domain != *domain_filter) continue;

    double weight = 1.0;
    if (has_weight) {
      auto w = detail::parse_double(fields[3]);
      if (!w) throw ParseError(line_no, "non-numeric weight '" + std::string(fields[3]) + "'");
      if (*w < 0.0 || !std::isfinite(*w))
        throw ValidationError("line " + std::to_string(line_no) + ": weight " +
                              std::string(fields[3]) + " must be finite and non-negative");
      weight = *w;
    }

    auto [it, inserted] = pending.try_emplace(domain);
    if (inserted) order.push_back(domain);
    auto& t = it->second;
    for (std::size_t j = 0; j < d; ++j) {
      auto v = detail::parse_double(fields[first_feature + j]);
      if (!v)
        throw ParseError(line_no, "non-numeric value '" +
                                      std::string(fields[first_feature + j]) +
                                      "' in column f" + std::to_string(j));
      if (!std::isfinite(*v))
        throw ParseError(line_no, "non-finite value in column f" + std::to_string(j));
      t.values.push_back(*v);
    }
    t.ids.emplace_back(fields[0]);
    t.labels.emplace_back(fields[2]);
    t.weights.push_back(weight);
  }

  if (order.empty())
    throw ValidationError(domain_filter ? "no rows for domain '" + *domain_filter + "'"
                                        : std::string("feature file has no data rows"));

  std::vector<FeatureTable> tables;
  for (const auto& tag : order) {
    auto& t = pending.find(tag)->second;
    const auto n = static_cast<Eigen::Index>(t.ids.size());
    FeatureMatrix features =
        Eigen::Map<const FeatureMatrix>(t.values.data(), n, static_cast<Eigen::Index>(d));
    tables.emplace_back(tag, std::move(features), std::move(t.ids), std::move(t.labels),
                        std::move(t.weights));
  }
  return DomainCollection(std::move(tables));
}

inline DomainCollection load_feature_table(const std::string& path,
                                           std::optional<std::string> domain_filter = {}) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open feature file '" + path + "'");
  return read_feature_csv(in, std::move(domain_filter));
}

/// Writes the Feature CSV layout, always including the weight column. Values
/// use the shortest representation that round-trips exactly.
inline void write_feature_csv(std::ostream& out, const DomainCollection& collection) {
  if (collection.empty()) throw ValidationError("nothing to write");
  out << "id,domain,label,weight";
  for (std::size_t j = 0; j < collection.d(); ++j) out << ",f" << j;
  out << '\n';
  for (const auto& t : collection) {
    detail::check_text_field(t.domain(), "domain");
    for (std::size_t i = 0; i < t.n(); ++i) {
      detail::check_text_field(t.ids()[i], "id");
      detail::check_text_field(t.labels()[i], "label");
      out << t.ids()[i] << ',' << t.domain() << ',' << t.labels()[i] << ','
          << detail::format_double(t.weights()[i]);
      for (std::size_t j = 0; j < t.d(); ++j)
        out << ',' << detail::format_double(
                          t.features()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      out << '\n';
    }
  }
}

inline void write_feature_table(const std::string& path, const DomainCollection& collection) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  write_feature_csv(out, collection);
  if (!out) throw ValidationError("write to '" + path + "' failed");
}

}  // namespace divsample

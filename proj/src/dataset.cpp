#include "rankmctp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rankmctp {

void Design::validate() const {
  if (a < 1) throw validation_error("BAD_DESIGN", "need at least one group");
  if (d < 1) throw validation_error("BAD_DESIGN", "need at least one repeated measure");
  if (static_cast<int>(n.size()) != a)
    throw validation_error("BAD_DESIGN", "group count does not match n vector");
  for (int i = 0; i < a; ++i)
    if (n[i] < 2)
      throw validation_error("FEWER_THAN_TWO_SUBJECTS",
                             "group " + std::to_string(i + 1) +
                                 " has fewer than two subjects");
}

Dataset::Dataset(Design design, std::vector<Eigen::MatrixXd> values,
                 std::vector<std::string> group_names,
                 std::vector<std::string> time_names,
                 std::vector<std::vector<std::string>> subject_names)
    : design_(std::move(design)),
      values_(std::move(values)),
      group_names_(std::move(group_names)),
      time_names_(std::move(time_names)),
      subject_names_(std::move(subject_names)) {
  design_.validate();
  if (static_cast<int>(values_.size()) != design_.a)
    throw validation_error("BAD_DESIGN", "value blocks do not match group count");
  for (int i = 0; i < design_.a; ++i) {
    if (values_[i].rows() != design_.n[i] || values_[i].cols() != design_.d)
      throw validation_error("BAD_DESIGN",
                             "value block " + std::to_string(i + 1) +
                                 " has wrong dimensions");
    if (!values_[i].allFinite())
      throw validation_error("NON_NUMERIC_VALUE", "non-finite observation");
  }
  if (group_names_.empty()) {
    for (int i = 0; i < design_.a; ++i)
      group_names_.push_back(std::to_string(i + 1));
  }
  if (time_names_.empty()) {
    for (int j = 0; j < design_.d; ++j)
      time_names_.push_back(std::to_string(j + 1));
  }
}

std::vector<double> midranks(std::span<const double> values) {
  if (values.empty()) throw validation_error("EMPTY_INPUT", "midranks of empty vector");
  const std::size_t m = values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return values[l] < values[r]; });
  std::vector<double> ranks(m);
  std::size_t i = 0;
  while (i < m) {
    std::size_t j = i;
    while (j + 1 < m && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace rankmctp

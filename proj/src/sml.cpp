#include "sbc/sml.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "sbc/errors.hpp"

namespace sbc {

int argmax_lowest(const Eigen::VectorXd& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

std::vector<int> top_classes(const Eigen::VectorXd& evidence, int xi) {
  std::vector<int> order(static_cast<std::size_t>(evidence.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (evidence(a) != evidence(b)) return evidence(a) > evidence(b);
    return a < b;
  });
  order.resize(static_cast<std::size_t>(std::min<int>(xi, static_cast<int>(evidence.size()))));
  std::sort(order.begin(), order.end());
  return order;
}

SmlModel sml_fit(const Dataset& d, const KernelConfig& cfg) {
  SmlModel m;
  m.task = d.task;
  m.class_evidence = fit_evidence(d, cfg);

  if (d.task == Task::MultiLabel) {
    // transformed problem: predict |L_i| as a multi-class target over the
    // distinct sizes seen in training
    std::map<int, int> size_to_class;
    for (const auto& set : d.labels) size_to_class.emplace(static_cast<int>(set.size()), 0);
    m.size_values.clear();
    for (auto& [size, cls] : size_to_class) {
      cls = static_cast<int>(m.size_values.size());
      m.size_values.push_back(size);
    }
    std::vector<std::vector<int>> size_labels;
    size_labels.reserve(d.labels.size());
    for (const auto& set : d.labels) {
      size_labels.push_back({size_to_class.at(static_cast<int>(set.size()))});
    }
    m.size_evidence =
        fit_evidence_detailed(d.features, size_labels, static_cast<int>(m.size_values.size()), cfg)
            .transform;
  }
  return m;
}

Eigen::VectorXd sml_scores(const SmlModel& m, const Eigen::VectorXd& x) {
  return evidence_for(m.class_evidence, x, /*normalized=*/false);
}

std::vector<int> sml_predict(const SmlModel& m, const Eigen::VectorXd& x) {
  const Eigen::VectorXd evidence = sml_scores(m, x);
  if (m.task == Task::MultiClass) {
    return {argmax_lowest(evidence)};
  }
  const Eigen::VectorXd size_scores = evidence_for(*m.size_evidence, x, /*normalized=*/false);
  const int xi = m.size_values[static_cast<std::size_t>(argmax_lowest(size_scores))];
  return top_classes(evidence, xi);
}

}  // namespace sbc

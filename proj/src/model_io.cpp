#include "sbc/model_io.hpp"

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "sbc/errors.hpp"

namespace sbc {

namespace {

using nlohmann::json;

constexpr const char* kModelSchema = "sbc.model/1";
constexpr const char* kNormSchema = "sbc.norm/1";
constexpr const char* kFoldSchema = "sbc.folds/1";

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw DataError("ragged matrix in model file");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c));
  }
  return m;
}

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j.at(static_cast<std::size_t>(i));
  return v;
}

json to_json(const EvidenceTransform& t) {
  return json{{"kernel", {{"kind", kernel_name(t.kernel.kind)}, {"gamma", t.kernel.gamma}}},
              {"train_features", to_json(t.train_features)},
              {"class_index", t.class_index},
              {"evidence_min", to_json(t.evidence_min)},
              {"evidence_max", to_json(t.evidence_max)}};
}

EvidenceTransform transform_from_json(const json& j) {
  EvidenceTransform t;
  t.kernel.kind = kernel_from_name(j.at("kernel").at("kind").get<std::string>());
  t.kernel.gamma = j.at("kernel").at("gamma").get<double>();
  t.train_features = matrix_from_json(j.at("train_features"));
  t.class_index = j.at("class_index").get<std::vector<std::vector<int>>>();
  t.evidence_min = vector_from_json(j.at("evidence_min"));
  t.evidence_max = vector_from_json(j.at("evidence_max"));
  return t;
}

json load_checked(const std::string& path, const char* schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
  if (j.value("schema", "") != schema) {
    throw DataError(path + ": expected schema '" + schema + "', found '" +
                    j.value("schema", "<none>") + "'");
  }
  return j;
}

}  // namespace

void write_text_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write file: " + tmp.string());
    out << content;
    if (!out.flush()) throw DataError("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

RowPrediction predict_row(const TrainedModel& m, const Eigen::VectorXd& raw_features) {
  if (raw_features.size() != m.norm.col_min.size()) {
    throw DataError("instance has " + std::to_string(raw_features.size()) +
                    " features, model expects " + std::to_string(m.norm.col_min.size()));
  }
  const Eigen::VectorXd x = m.norm.apply_row(raw_features);
  RowPrediction out;
  if (const auto* sml = std::get_if<SmlModel>(&m.model)) {
    out.scores = sml_scores(*sml, x);
    out.labels = sml_predict(*sml, x);
  } else if (const auto* sblr = std::get_if<SblrModel>(&m.model)) {
    out.scores = sblr_posteriors(*sblr, x);
    SetPrediction pred = sblr_predict(*sblr, x);
    out.labels = std::move(pred.labels);
    out.used_fallback = pred.used_fallback;
  } else {
    const auto& baseline = std::get<BaselineModel>(m.model);
    out.scores = baseline_scores(baseline, x);
    out.labels = baseline_predict(baseline, x);
  }
  return out;
}

void save_model(const TrainedModel& m, const std::string& path) {
  json j{{"schema", kModelSchema},
         {"kind", m.kind},
         {"task", task_name(m.task)},
         {"seed", m.seed},
         {"label_names", m.label_names},
         {"feature_names", m.feature_names},
         {"norm", {{"min", to_json(m.norm.col_min)}, {"max", to_json(m.norm.col_max)}}}};

  if (const auto* sml = std::get_if<SmlModel>(&m.model)) {
    j["class_evidence"] = to_json(sml->class_evidence);
    if (sml->size_evidence) {
      j["size_evidence"] = to_json(*sml->size_evidence);
      j["size_values"] = sml->size_values;
    }
  } else if (const auto* sblr = std::get_if<SblrModel>(&m.model)) {
    j["evidence"] = to_json(sblr->evidence);
    j["coefficients"] = to_json(sblr->coefficients.betas);
    j["l1_lambda"] = sblr->l1_lambda;
  } else {
    const auto& baseline = std::get<BaselineModel>(m.model);
    j["baseline"] = baseline_name(baseline.kind);
    j["n_classes"] = baseline.n_classes;
    switch (baseline.kind) {
      case BaselineKind::Knn:
        j["knn_k"] = baseline.knn_k;
        j["train_features"] = to_json(baseline.train_features);
        j["train_classes"] = baseline.train_classes;
        break;
      case BaselineKind::Ncm:
        j["class_means"] = to_json(baseline.class_means);
        break;
      case BaselineKind::Lr:
        j["lr_coefficients"] = to_json(baseline.lr_coefficients);
        break;
    }
  }
  write_text_atomic(path, j.dump(1, '\t') + "\n");
}

TrainedModel load_model(const std::string& path) {
  const json j = load_checked(path, kModelSchema);
  TrainedModel m;
  m.kind = j.at("kind").get<std::string>();
  m.task = task_from_name(j.at("task").get<std::string>());
  m.seed = j.value("seed", 0ULL);
  m.label_names = j.at("label_names").get<std::vector<std::string>>();
  m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  m.norm.col_min = vector_from_json(j.at("norm").at("min"));
  m.norm.col_max = vector_from_json(j.at("norm").at("max"));

  if (m.kind == "sml") {
    SmlModel sml;
    sml.task = m.task;
    sml.class_evidence = transform_from_json(j.at("class_evidence"));
    if (j.contains("size_evidence")) {
      sml.size_evidence = transform_from_json(j.at("size_evidence"));
      sml.size_values = j.at("size_values").get<std::vector<int>>();
    }
    m.model = std::move(sml);
  } else if (m.kind == "sblr" || m.kind == "sparsesblr") {
    SblrModel sblr;
    sblr.task = m.task;
    sblr.evidence = transform_from_json(j.at("evidence"));
    sblr.coefficients.betas = matrix_from_json(j.at("coefficients"));
    sblr.l1_lambda = j.value("l1_lambda", 0.0);
    m.model = std::move(sblr);
  } else if (m.kind == "knn" || m.kind == "ncm" || m.kind == "lr") {
    BaselineModel baseline;
    baseline.n_classes = j.at("n_classes").get<int>();
    if (m.kind == "knn") {
      baseline.kind = BaselineKind::Knn;
      baseline.knn_k = j.at("knn_k").get<int>();
      baseline.train_features = matrix_from_json(j.at("train_features"));
      baseline.train_classes = j.at("train_classes").get<std::vector<int>>();
    } else if (m.kind == "ncm") {
      baseline.kind = BaselineKind::Ncm;
      baseline.class_means = matrix_from_json(j.at("class_means"));
    } else {
      baseline.kind = BaselineKind::Lr;
      baseline.lr_coefficients = matrix_from_json(j.at("lr_coefficients"));
    }
    m.model = std::move(baseline);
  } else {
    throw DataError(path + ": unknown model kind '" + m.kind + "'");
  }
  return m;
}

void save_norm_stats(const NormStats& stats, const std::string& path) {
  json j{{"schema", kNormSchema},
         {"min", to_json(stats.col_min)},
         {"max", to_json(stats.col_max)}};
  write_text_atomic(path, j.dump(1, '\t') + "\n");
}

NormStats load_norm_stats(const std::string& path) {
  const json j = load_checked(path, kNormSchema);
  NormStats stats;
  stats.col_min = vector_from_json(j.at("min"));
  stats.col_max = vector_from_json(j.at("max"));
  return stats;
}

void save_fold_plan(const FoldPlan& plan, const std::string& path) {
  json j{{"schema", kFoldSchema},
         {"k", plan.fold_count},
         {"seed", plan.seed},
         {"assignments", plan.assignments}};
  write_text_atomic(path, j.dump(1, '\t') + "\n");
}

FoldPlan load_fold_plan(const std::string& path) {
  const json j = load_checked(path, kFoldSchema);
  FoldPlan plan;
  plan.fold_count = j.at("k").get<int>();
  plan.seed = j.at("seed").get<std::uint64_t>();
  plan.assignments = j.at("assignments").get<std::vector<int>>();
  return plan;
}

}  // namespace sbc

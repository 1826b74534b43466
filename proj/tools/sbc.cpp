// sbc: similarity-evidence classification toolbox.
//
// Subcommands: train, predict, evaluate, benchmark, report.
// Exit codes: 0 ok, 2 usage error, 3 data error, 4 numeric error.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>

#include "sbc/benchmark.hpp"
#include "sbc/errors.hpp"
#include "sbc/eval.hpp"
#include "sbc/metrics.hpp"
#include "sbc/model_io.hpp"
#include "sbc/models.hpp"
#include "sbc/sml.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct DataFlags {
  std::string data;
  std::string labels_xml;
  std::string label_column;
};

struct TrainFlags {
  DataFlags input;
  std::string method;
  std::string out;
  double gamma = 1.0;
  double lambda = 0.01;
  int knn_k = 5;
  int max_iters = 1000;
  double grad_tol = 1e-6;
  std::uint64_t seed = 42;
};

sbc::Dataset load_from_flags(const DataFlags& flags) {
  const std::string path = sbc::resolve_data_path(flags.data);
  if (!flags.labels_xml.empty()) {
    return sbc::load_arff_mulan(path, sbc::resolve_data_path(flags.labels_xml));
  }
  if (!flags.label_column.empty()) {
    return sbc::load_csv_mcc(path, flags.label_column);
  }
  if (std::filesystem::path(path).extension() == ".arff") {
    throw sbc::DataError("ARFF input needs --labels-xml");
  }
  throw sbc::DataError("CSV input needs --label-col");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join_labels(const std::vector<int>& labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += '|';
    out += std::to_string(labels[i]);
  }
  return out;
}

int cmd_train(const TrainFlags& flags) {
  const sbc::Dataset raw = load_from_flags(flags.input);
  auto [dataset, stats] = sbc::normalize_features(raw);

  sbc::SolverConfig solver;
  solver.max_iters = flags.max_iters;
  solver.grad_tol = flags.grad_tol;

  sbc::TrainedModel model;
  model.kind = flags.method;
  model.task = dataset.task;
  model.seed = flags.seed;
  model.label_names = dataset.label_names;
  model.feature_names = dataset.feature_names;
  model.norm = stats;

  const sbc::KernelConfig kernel{sbc::KernelKind::Rbf, flags.gamma};
  int solver_iters = 0;
  if (flags.method == "sml") {
    model.model = sbc::sml_fit(dataset, kernel);
  } else if (flags.method == "sblr" || flags.method == "sparsesblr") {
    const double lambda = flags.method == "sblr" ? 0.0 : flags.lambda;
    sbc::SblrModel sblr = sbc::sblr_fit(dataset, kernel, lambda, solver);
    solver_iters = std::accumulate(sblr.solver_iterations.begin(),
                                   sblr.solver_iterations.end(), 0);
    model.model = std::move(sblr);
  } else if (flags.method == "knn") {
    model.model = sbc::baseline_fit(dataset, sbc::BaselineKind::Knn, solver, flags.knn_k);
  } else if (flags.method == "ncm") {
    model.model = sbc::baseline_fit(dataset, sbc::BaselineKind::Ncm, solver);
  } else if (flags.method == "lr") {
    model.model = sbc::baseline_fit(dataset, sbc::BaselineKind::Lr, solver);
  }
  sbc::save_model(model, flags.out);

  std::cout << "trained " << flags.method << " on " << dataset.n_instances() << " instances ("
            << dataset.n_features() << " features, " << dataset.n_classes() << " classes, task "
            << sbc::task_name(dataset.task) << ")\n";
  if (flags.method == "sml" || flags.method == "sblr" || flags.method == "sparsesblr") {
    std::cout << "evidence dimensions: " << dataset.n_classes() << "\n";
  }
  if (solver_iters > 0) std::cout << "solver iterations (all classes): " << solver_iters << "\n";
  std::cout << "model written to " << flags.out << "\n";
  return 0;
}

int cmd_predict(const DataFlags& input, const std::string& model_path, const std::string& out) {
  const sbc::TrainedModel model = sbc::load_model(model_path);
  const sbc::Dataset dataset = load_from_flags(input);
  if (dataset.n_features() != model.norm.col_min.size()) {
    throw sbc::DataError("data has " + std::to_string(dataset.n_features()) +
                         " features, model expects " +
                         std::to_string(model.norm.col_min.size()));
  }

  std::string csv = "# sbc.predictions/1 seed=" + std::to_string(model.seed) +
                    " kind=" + model.kind + "\n";
  csv += "instance";
  for (const std::string& name : model.label_names) csv += ",score_" + name;
  csv += ",predicted,fallback\n";
  for (Eigen::Index i = 0; i < dataset.n_instances(); ++i) {
    const sbc::RowPrediction pred = sbc::predict_row(model, dataset.features.row(i));
    csv += std::to_string(i);
    for (Eigen::Index k = 0; k < pred.scores.size(); ++k) csv += "," + fmt(pred.scores(k));
    csv += "," + join_labels(pred.labels) + "," + (pred.used_fallback ? "1" : "0") + "\n";
  }
  sbc::write_text_atomic(out, csv);
  std::cout << "wrote " << dataset.n_instances() << " predictions to " << out << "\n";
  return 0;
}

int cmd_evaluate(const DataFlags& input, const std::string& model_path,
                 const std::string& out) {
  const sbc::TrainedModel model = sbc::load_model(model_path);
  const sbc::Dataset dataset = load_from_flags(input);
  if (dataset.n_features() != model.norm.col_min.size()) {
    throw sbc::DataError("data has " + std::to_string(dataset.n_features()) +
                         " features, model expects " +
                         std::to_string(model.norm.col_min.size()));
  }
  if (dataset.n_classes() != static_cast<int>(model.label_names.size())) {
    throw sbc::DataError("data has " + std::to_string(dataset.n_classes()) +
                         " classes, model expects " +
                         std::to_string(model.label_names.size()));
  }

  sbc::PredictionBatch batch;
  batch.n_classes = static_cast<int>(model.label_names.size());
  batch.truth = dataset.labels;
  batch.scores.resize(dataset.n_instances(), batch.n_classes);
  for (Eigen::Index i = 0; i < dataset.n_instances(); ++i) {
    const sbc::RowPrediction pred = sbc::predict_row(model, dataset.features.row(i));
    batch.scores.row(i) = pred.scores.transpose();
    batch.predicted.push_back(pred.labels);
  }
  const sbc::MetricReport report = sbc::evaluate_batch(batch, model.task);

  std::string text;
  for (sbc::Metric metric : sbc::metrics_for_task(model.task)) {
    text += std::string(sbc::metric_name(metric)) + "," +
            fmt(sbc::metric_value(report, metric)) + "\n";
  }
  std::cout << text;
  if (report.excluded_empty_truth > 0) {
    std::cout << "# " << report.excluded_empty_truth
              << " empty-truth instances excluded from ranking metrics\n";
  }
  if (!out.empty()) {
    sbc::write_text_atomic(out, "# sbc.metrics/1 seed=" + std::to_string(model.seed) +
                                    "\nmetric,value\n" + text);
    std::cout << "metrics written to " << out << "\n";
  }
  return 0;
}

int cmd_benchmark(const std::string& config_path, std::optional<std::string> out_dir,
                  std::optional<int> jobs, std::optional<std::uint64_t> seed) {
  sbc::BenchmarkConfig config = sbc::load_benchmark_config(config_path);
  if (out_dir) config.output_dir = *out_dir;
  if (jobs) config.jobs = *jobs;
  if (seed) config.seed = *seed;
  const sbc::BenchmarkOutcome outcome = sbc::run_benchmark(config);
  for (const std::string& msg : outcome.messages) std::cerr << msg << "\n";
  std::ifstream report(std::filesystem::path(config.output_dir) / "report.txt");
  std::cout << report.rdbuf();
  if (outcome.failed_pairs > 0) {
    std::cerr << outcome.failed_pairs << " pair(s) failed\n";
    return kExitData;
  }
  return 0;
}

int cmd_report(const DataFlags& input, const std::string& model_path,
               const std::string& focus_class, const std::string& out_dir) {
  const sbc::TrainedModel model = sbc::load_model(model_path);
  const auto* sblr = std::get_if<sbc::SblrModel>(&model.model);
  if (sblr == nullptr) {
    throw sbc::DataError("coefficient reports need an sblr or sparsesblr model");
  }
  const sbc::Dataset dataset = load_from_flags(input);

  int focus = -1;
  for (std::size_t k = 0; k < dataset.label_names.size(); ++k) {
    if (dataset.label_names[k] == focus_class) focus = static_cast<int>(k);
  }
  if (focus < 0) {
    try {
      focus = std::stoi(focus_class);
    } catch (const std::exception&) {
      throw sbc::DataError("unknown focus class: " + focus_class);
    }
  }

  const auto rows = sbc::coefficient_report(*sblr, dataset, focus);
  std::string csv = "# sbc.coefficients/1 seed=" + std::to_string(model.seed) +
                    " focus_class=" + dataset.label_names[static_cast<std::size_t>(focus)] + "\n";
  csv += "class,co_occurrence,coefficient\n";
  for (const auto& row : rows) {
    csv += row.class_name + "," + std::to_string(row.co_occurrence) + "," +
           fmt(row.coefficient) + "\n";
  }
  std::filesystem::create_directories(out_dir);
  std::string name;
  for (char c : dataset.label_names[static_cast<std::size_t>(focus)]) {
    name.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  }
  const std::string path =
      (std::filesystem::path(out_dir) / ("coefficients_" + name + ".csv")).string();
  sbc::write_text_atomic(path, csv);

  // full |coefficient| matrix for external heatmap rendering
  std::string matrix = "# sbc.coefficient-matrix/1 (absolute values) seed=" +
                       std::to_string(model.seed) + "\n";
  matrix += "class,intercept";
  for (const std::string& label : dataset.label_names) matrix += "," + label;
  matrix += "\n";
  for (int k = 0; k < dataset.n_classes(); ++k) {
    matrix += dataset.label_names[static_cast<std::size_t>(k)];
    for (Eigen::Index c = 0; c < sblr->coefficients.betas.cols(); ++c) {
      matrix += "," + fmt(std::abs(sblr->coefficients.betas(k, c)));
    }
    matrix += "\n";
  }
  const std::string matrix_path =
      (std::filesystem::path(out_dir) / "coefficient_matrix.csv").string();
  sbc::write_text_atomic(matrix_path, matrix);

  std::cout << csv;
  std::cout << "report written to " << path << " and " << matrix_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"similarity-evidence classification toolbox"};
  app.require_subcommand(1);

  TrainFlags train;
  auto* train_cmd = app.add_subcommand("train", "fit a model on a full dataset");
  train_cmd->add_option("--data", train.input.data, "dataset file (.arff or .csv)")->required();
  train_cmd->add_option("--labels-xml", train.input.labels_xml, "MULAN labels XML (ARFF input)");
  train_cmd->add_option("--label-col", train.input.label_column, "label column (CSV input)");
  train_cmd->add_option("--method", train.method, "sml|sblr|sparsesblr|knn|ncm|lr")
      ->required()
      ->check(CLI::IsMember({"sml", "sblr", "sparsesblr", "knn", "ncm", "lr"}));
  train_cmd->add_option("--gamma", train.gamma, "RBF width")->check(CLI::PositiveNumber);
  train_cmd->add_option("--lambda", train.lambda, "l1 strength (sparsesblr)")
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--k", train.knn_k, "neighbor count (knn)")->check(CLI::PositiveNumber);
  train_cmd->add_option("--max-iters", train.max_iters, "solver iteration cap")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--grad-tol", train.grad_tol, "solver tolerance")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", train.seed, "seed recorded in outputs");
  train_cmd->add_option("--out", train.out, "model file to write")->required();

  DataFlags predict_input;
  std::string predict_model;
  std::string predict_out;
  auto* predict_cmd = app.add_subcommand("predict", "score instances with a trained model");
  predict_cmd->add_option("--model", predict_model, "model file")->required();
  predict_cmd->add_option("--data", predict_input.data, "dataset file")->required();
  predict_cmd->add_option("--labels-xml", predict_input.labels_xml, "MULAN labels XML");
  predict_cmd->add_option("--label-col", predict_input.label_column, "label column (CSV)");
  predict_cmd->add_option("--out", predict_out, "predictions CSV to write")->required();

  DataFlags eval_input;
  std::string eval_model;
  std::string eval_out;
  auto* eval_cmd = app.add_subcommand("evaluate", "compute metrics on labeled data");
  eval_cmd->add_option("--model", eval_model, "model file")->required();
  eval_cmd->add_option("--data", eval_input.data, "dataset file")->required();
  eval_cmd->add_option("--labels-xml", eval_input.labels_xml, "MULAN labels XML");
  eval_cmd->add_option("--label-col", eval_input.label_column, "label column (CSV)");
  eval_cmd->add_option("--out", eval_out, "metrics CSV to write");

  std::string bench_config;
  std::string bench_out_dir;
  int bench_jobs = -1;
  std::int64_t bench_seed = -1;
  auto* bench_cmd = app.add_subcommand("benchmark", "run the cross-validation protocol");
  bench_cmd->add_option("--config", bench_config, "experiment TOML file")->required();
  bench_cmd->add_option("--out-dir", bench_out_dir, "override the configured output dir");
  bench_cmd->add_option("--jobs", bench_jobs, "worker threads (0 = all cores)");
  bench_cmd->add_option("--seed", bench_seed, "override the configured seed");

  DataFlags report_input;
  std::string report_model;
  std::string report_class;
  std::string report_out_dir = ".";
  auto* report_cmd =
      app.add_subcommand("report", "emit the per-class coefficient report of a model");
  report_cmd->add_option("--model", report_model, "sblr/sparsesblr model file")->required();
  report_cmd->add_option("--data", report_input.data, "training dataset file")->required();
  report_cmd->add_option("--labels-xml", report_input.labels_xml, "MULAN labels XML");
  report_cmd->add_option("--label-col", report_input.label_column, "label column (CSV)");
  report_cmd->add_option("--class", report_class, "focus class name or index")->required();
  report_cmd->add_option("--out-dir", report_out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train);
    if (predict_cmd->parsed()) return cmd_predict(predict_input, predict_model, predict_out);
    if (eval_cmd->parsed()) return cmd_evaluate(eval_input, eval_model, eval_out);
    if (bench_cmd->parsed()) {
      return cmd_benchmark(bench_config,
                           bench_out_dir.empty() ? std::nullopt
                                                 : std::optional<std::string>(bench_out_dir),
                           bench_jobs < 0 ? std::nullopt : std::optional<int>(bench_jobs),
                           bench_seed < 0 ? std::nullopt
                                          : std::optional<std::uint64_t>(
                                                static_cast<std::uint64_t>(bench_seed)));
    }
    if (report_cmd->parsed()) {
      return cmd_report(report_input, report_model, report_class, report_out_dir);
    }
  } catch (const sbc::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const sbc::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const sbc::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#include "sbc/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <toml.hpp>

#include "sbc/errors.hpp"
#include "sbc/model_io.hpp"
#include "sbc/sml.hpp"

namespace sbc {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt_double(double v, const char* spec = "%.12g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string sanitize_filename(const std::string& s) {
  std::string out;
  for (char c : s) {
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  }
  return out;
}

MethodSpec method_from_toml(const toml::table& t) {
  MethodSpec m;
  const auto kind = t["kind"].value<std::string>();
  if (!kind) throw DataError("method entry is missing 'kind'");
  m.kind = method_kind_from_name(*kind);
  m.name = t["name"].value_or(std::string{});
  if (const auto gamma = t["gamma"].value<double>()) m.gamma = *gamma;
  if (const auto lambda = t["lambda"].value<double>()) m.lambda = *lambda;
  m.knn_k = static_cast<int>(t["k"].value_or<std::int64_t>(5));
  if (m.knn_k < 1) throw DataError("knn requires k >= 1");
  return m;
}

DatasetSpec dataset_from_toml(const toml::table& t) {
  DatasetSpec d;
  d.name = t["name"].value_or(std::string{});
  d.kind = t["kind"].value_or(std::string{});
  d.data = t["data"].value_or(std::string{});
  d.labels_xml = t["labels_xml"].value_or(std::string{});
  d.label_column = t["label_column"].value_or(std::string{});
  if (d.data.empty()) throw DataError("dataset entry is missing 'data'");
  if (d.name.empty()) d.name = fs::path(d.data).stem().string();
  if (d.kind.empty()) {
    d.kind = fs::path(d.data).extension() == ".arff" ? "mulan-arff" : "csv-mcc";
  }
  if (d.kind == "mulan-arff" && d.labels_xml.empty()) {
    throw DataError("dataset '" + d.name + "': mulan-arff needs 'labels_xml'");
  }
  if (d.kind == "csv-mcc" && d.label_column.empty()) {
    throw DataError("dataset '" + d.name + "': csv-mcc needs 'label_column'");
  }
  return d;
}

// Tracks everything produced for one (dataset, method) pair.
struct PairOutcome {
  int dataset = 0;
  int method = 0;
  bool failed = false;
  std::string message;
  CvResult cv;
};

std::string significant_pair_text(const NemenyiResult& r) {
  std::string out;
  for (std::size_t a = 0; a < r.methods.size(); ++a) {
    for (std::size_t b = a + 1; b < r.methods.size(); ++b) {
      if (!r.significant[a][b]) continue;
      if (!out.empty()) out += ", ";
      out += r.methods[a] + " vs " + r.methods[b];
    }
  }
  return out.empty() ? "none" : out;
}

}  // namespace

std::string resolve_data_path(const std::string& path) {
  if (fs::path(path).is_absolute() || fs::exists(path)) return path;
  if (const char* base = std::getenv("SBC_DATA_DIR")) {
    const fs::path candidate = fs::path(base) / path;
    if (fs::exists(candidate)) return candidate.string();
  }
  return path;
}

Dataset load_dataset(const DatasetSpec& spec) {
  if (spec.kind == "mulan-arff") {
    return load_arff_mulan(resolve_data_path(spec.data), resolve_data_path(spec.labels_xml));
  }
  if (spec.kind == "csv-mcc") {
    return load_csv_mcc(resolve_data_path(spec.data), spec.label_column);
  }
  throw DataError("dataset '" + spec.name + "': unknown kind '" + spec.kind + "'");
}

BenchmarkConfig load_benchmark_config(const std::string& path) {
  toml::table root;
  try {
    root = toml::parse_file(path);
  } catch (const toml::parse_error& e) {
    throw DataError(path + ": " + std::string(e.description()));
  }

  BenchmarkConfig config;
  config.seed = static_cast<std::uint64_t>(root["seed"].value_or<std::int64_t>(42));
  config.folds = static_cast<int>(root["folds"].value_or<std::int64_t>(10));
  config.jobs = static_cast<int>(root["jobs"].value_or<std::int64_t>(0));
  config.nemenyi_alpha = root["nemenyi_alpha"].value_or(0.05);
  config.output_dir = root["output_dir"].value_or(std::string("sbc-out"));
  if (config.folds < 2) throw DataError("config: folds must be at least 2");

  if (const toml::table* grid = root["grid"].as_table()) {
    if (const toml::array* values = (*grid)["values"].as_array()) {
      config.grid.values.clear();
      for (const auto& v : *values) {
        const auto d = v.value<double>();
        if (!d || *d <= 0.0) throw DataError("config: grid values must be positive numbers");
        config.grid.values.push_back(*d);
      }
      if (config.grid.values.empty()) throw DataError("config: grid values must be nonempty");
    }
    config.grid.validation_fraction =
        (*grid)["validation_fraction"].value_or(config.grid.validation_fraction);
    if (config.grid.validation_fraction <= 0.0 || config.grid.validation_fraction >= 1.0) {
      throw DataError("config: validation_fraction must lie in (0, 1)");
    }
    if (const auto metric = (*grid)["selection_metric"].value<std::string>()) {
      config.grid.selection_metric = metric_from_name(*metric);
    }
  }

  if (const toml::table* solver = root["solver"].as_table()) {
    config.solver.max_iters =
        static_cast<int>((*solver)["max_iters"].value_or<std::int64_t>(config.solver.max_iters));
    config.solver.grad_tol = (*solver)["grad_tol"].value_or(config.solver.grad_tol);
  }

  if (const toml::array* datasets = root["dataset"].as_array()) {
    for (const auto& node : *datasets) {
      if (const toml::table* t = node.as_table()) config.datasets.push_back(dataset_from_toml(*t));
    }
  }
  if (const toml::array* methods = root["method"].as_array()) {
    for (const auto& node : *methods) {
      if (const toml::table* t = node.as_table()) config.methods.push_back(method_from_toml(*t));
    }
  }
  if (const toml::array* reports = root["report"].as_array()) {
    for (const auto& node : *reports) {
      if (const toml::table* t = node.as_table()) {
        ReportSpec r;
        r.dataset = (*t)["dataset"].value_or(std::string{});
        r.method = (*t)["method"].value_or(std::string{});
        r.focus_class = (*t)["class"].value_or(std::string{});
        if (r.dataset.empty() || r.method.empty() || r.focus_class.empty()) {
          throw DataError("config: report entries need dataset, method and class");
        }
        config.reports.push_back(std::move(r));
      }
    }
  }
  return config;
}

BenchmarkOutcome run_benchmark(const BenchmarkConfig& config) {
  if (config.datasets.empty() || config.methods.empty()) {
    throw UsageError("config lists no datasets or no methods");
  }

  BenchmarkOutcome outcome;
  const std::string seed_header = " seed=" + std::to_string(config.seed);

  // load every dataset once
  std::vector<std::optional<Dataset>> data(config.datasets.size());
  std::vector<std::optional<FoldPlan>> plans(config.datasets.size());
  for (std::size_t i = 0; i < config.datasets.size(); ++i) {
    try {
      data[i] = load_dataset(config.datasets[i]);
      plans[i] = make_folds(*data[i], config.folds, config.seed);
    } catch (const std::exception& e) {
      outcome.messages.push_back("dataset '" + config.datasets[i].name + "' failed: " + e.what());
    }
  }

  std::vector<PairOutcome> pairs;
  for (std::size_t di = 0; di < config.datasets.size(); ++di) {
    for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
      PairOutcome pair;
      pair.dataset = static_cast<int>(di);
      pair.method = static_cast<int>(mi);
      if (!data[di]) {
        pair.failed = true;
        pair.message = "dataset failed to load";
      } else {
        try {
          pair.cv = run_cv(*data[di], config.methods[mi], *plans[di], config.grid, config.solver,
                           config.jobs);
          for (const FoldOutcome& fold : pair.cv.folds) {
            if (fold.skipped) {
              outcome.messages.push_back(
                  config.datasets[di].name + "/" + config.methods[mi].display_name() + " fold " +
                  std::to_string(fold.fold) + " skipped: " + fold.warning);
            }
          }
        } catch (const std::exception& e) {
          pair.failed = true;
          pair.message = e.what();
        }
      }
      if (pair.failed) {
        ++outcome.failed_pairs;
        outcome.messages.push_back("pair " + config.datasets[di].name + "/" +
                                   config.methods[mi].display_name() + " failed: " + pair.message);
      }
      pairs.push_back(std::move(pair));
    }
  }

  fs::create_directories(config.output_dir);
  const auto out_path = [&](const std::string& name) {
    return (fs::path(config.output_dir) / name).string();
  };

  // ---- results.csv: one row per (dataset, method, fold, metric)
  {
    std::string csv = "# sbc.results/1" + seed_header + "\n";
    csv += "dataset,method,fold,metric,value\n";
    for (const PairOutcome& pair : pairs) {
      if (pair.failed) continue;
      const Task task = data[static_cast<std::size_t>(pair.dataset)]->task;
      for (const FoldOutcome& fold : pair.cv.folds) {
        if (fold.skipped) continue;
        for (Metric metric : metrics_for_task(task)) {
          csv += config.datasets[static_cast<std::size_t>(pair.dataset)].name + "," +
                 config.methods[static_cast<std::size_t>(pair.method)].display_name() + "," +
                 std::to_string(fold.fold) + "," + metric_name(metric) + "," +
                 fmt_double(metric_value(fold.report, metric)) + "\n";
        }
      }
    }
    write_text_atomic(out_path("results.csv"), csv);
  }

  // ---- results.json: the same rows as structured records
  {
    json rows = json::array();
    for (const PairOutcome& pair : pairs) {
      if (pair.failed) continue;
      const Task task = data[static_cast<std::size_t>(pair.dataset)]->task;
      for (const FoldOutcome& fold : pair.cv.folds) {
        if (fold.skipped) continue;
        for (Metric metric : metrics_for_task(task)) {
          rows.push_back(
              {{"dataset", config.datasets[static_cast<std::size_t>(pair.dataset)].name},
               {"method", config.methods[static_cast<std::size_t>(pair.method)].display_name()},
               {"fold", fold.fold},
               {"metric", metric_name(metric)},
               {"value", metric_value(fold.report, metric)}});
        }
      }
    }
    const json j{{"schema", "sbc.results/1"}, {"seed", config.seed}, {"rows", rows}};
    write_text_atomic(out_path("results.json"), j.dump(1, '\t') + "\n");
  }

  // ---- mean values per (metric, dataset, method); ranks where complete
  struct MetricTable {
    std::vector<int> dataset_ids;
    Eigen::MatrixXd values;
    std::optional<RankTable> ranks;
    std::optional<NemenyiResult> nem;
  };
  std::vector<std::string> method_names;
  method_names.reserve(config.methods.size());
  for (const MethodSpec& m : config.methods) method_names.push_back(m.display_name());

  std::map<Metric, MetricTable> tables;
  for (Metric metric : {Metric::HammingLoss, Metric::OneError, Metric::Coverage, Metric::RankLoss,
                        Metric::AveragePrecision, Metric::Accuracy}) {
    std::vector<int> rows;
    for (std::size_t di = 0; di < config.datasets.size(); ++di) {
      if (!data[di]) continue;
      const auto applicable = metrics_for_task(data[di]->task);
      if (std::find(applicable.begin(), applicable.end(), metric) == applicable.end()) continue;
      bool complete = true;
      for (std::size_t mi = 0; mi < config.methods.size() && complete; ++mi) {
        const PairOutcome& pair = pairs[di * config.methods.size() + mi];
        complete = !pair.failed && pair.cv.mean_metric(metric).has_value();
      }
      if (complete) {
        rows.push_back(static_cast<int>(di));
      } else {
        outcome.messages.push_back(std::string("metric ") + metric_name(metric) + ": dataset '" +
                                   config.datasets[di].name + "' omitted from ranking");
      }
    }
    if (rows.empty()) continue;

    MetricTable table;
    table.dataset_ids = rows;
    table.values.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(config.methods.size()));
    std::vector<std::string> dataset_names;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      dataset_names.push_back(config.datasets[static_cast<std::size_t>(rows[r])].name);
      for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
        const PairOutcome& pair = pairs[static_cast<std::size_t>(rows[r]) * config.methods.size() + mi];
        table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(mi)) =
            *pair.cv.mean_metric(metric);
      }
    }
    table.ranks = rank_methods(dataset_names, method_names, table.values,
                               metric_higher_is_better(metric));
    if (rows.size() >= 2 && config.methods.size() >= 2) {
      try {
        table.nem = nemenyi(*table.ranks, config.nemenyi_alpha);
      } catch (const DataError& e) {
        outcome.messages.push_back(std::string("nemenyi skipped for ") + metric_name(metric) +
                                   ": " + e.what());
      }
    }
    tables.emplace(metric, std::move(table));
  }

  // ---- ranks.csv
  {
    std::string csv = "# sbc.ranks/1" + seed_header + "\n";
    csv += "metric,dataset,method,mean_value,rank\n";
    for (const auto& [metric, table] : tables) {
      for (std::size_t r = 0; r < table.ranks->datasets.size(); ++r) {
        for (std::size_t mi = 0; mi < method_names.size(); ++mi) {
          csv += std::string(metric_name(metric)) + "," + table.ranks->datasets[r] + "," +
                 method_names[mi] + "," +
                 fmt_double(table.values(static_cast<Eigen::Index>(r),
                                         static_cast<Eigen::Index>(mi))) +
                 "," +
                 fmt_double(table.ranks->ranks(static_cast<Eigen::Index>(r),
                                               static_cast<Eigen::Index>(mi))) +
                 "\n";
        }
      }
      for (std::size_t mi = 0; mi < method_names.size(); ++mi) {
        csv += std::string(metric_name(metric)) + ",(average)," + method_names[mi] + ",," +
               fmt_double(table.ranks->average_rank(static_cast<Eigen::Index>(mi))) + "\n";
      }
    }
    write_text_atomic(out_path("ranks.csv"), csv);
  }

  // ---- nemenyi.json
  {
    json j{{"schema", "sbc.nemenyi/1"}, {"seed", config.seed}, {"alpha", config.nemenyi_alpha}};
    json metrics = json::object();
    for (const auto& [metric, table] : tables) {
      if (!table.nem) continue;
      const NemenyiResult& nem = *table.nem;
      json ranks = json::object();
      for (std::size_t mi = 0; mi < nem.methods.size(); ++mi) {
        ranks[nem.methods[mi]] = nem.average_rank(static_cast<Eigen::Index>(mi));
      }
      json sig = json::array();
      for (std::size_t a = 0; a < nem.methods.size(); ++a) {
        for (std::size_t b = a + 1; b < nem.methods.size(); ++b) {
          if (nem.significant[a][b]) sig.push_back({nem.methods[a], nem.methods[b]});
        }
      }
      metrics[metric_name(metric)] = json{{"q_alpha", nem.q_alpha},
                                          {"critical_difference", nem.critical_difference},
                                          {"n_datasets", nem.n_datasets},
                                          {"n_methods", nem.methods.size()},
                                          {"average_ranks", ranks},
                                          {"significant_pairs", sig},
                                          {"friedman_chi2", nem.friedman_chi2},
                                          {"friedman_f", nem.friedman_f}};
    }
    j["metrics"] = metrics;
    write_text_atomic(out_path("nemenyi.json"), j.dump(1, '\t') + "\n");
  }

  // ---- report.txt: per-metric tables of value(rank)
  {
    std::ostringstream rep;
    rep << "# sbc benchmark report" << seed_header << "\n";
    rep << "# folds=" << config.folds << "\n\n";
    for (const auto& [metric, table] : tables) {
      rep << "== " << metric_name(metric) << " ("
          << (metric_higher_is_better(metric) ? "higher" : "lower") << " is better) ==\n";
      std::size_t width = 14;
      for (const auto& name : table.ranks->datasets) width = std::max(width, name.size() + 2);
      rep << std::string(width, ' ');
      for (const auto& name : method_names) {
        rep << name << std::string(name.size() < 16 ? 16 - name.size() : 2, ' ');
      }
      rep << "\n";
      for (std::size_t r = 0; r < table.ranks->datasets.size(); ++r) {
        const std::string& dataset_name = table.ranks->datasets[r];
        rep << dataset_name << std::string(width - dataset_name.size(), ' ');
        for (std::size_t mi = 0; mi < method_names.size(); ++mi) {
          const std::string cell =
              fmt_double(table.values(static_cast<Eigen::Index>(r),
                                      static_cast<Eigen::Index>(mi)),
                         "%.3f") +
              "(" +
              fmt_double(table.ranks->ranks(static_cast<Eigen::Index>(r),
                                            static_cast<Eigen::Index>(mi)),
                         "%g") +
              ")";
          rep << cell << std::string(cell.size() < 16 ? 16 - cell.size() : 2, ' ');
        }
        rep << "\n";
      }
      rep << "(average rank)" << std::string(width - 14, ' ');
      for (std::size_t mi = 0; mi < method_names.size(); ++mi) {
        const std::string cell =
            fmt_double(table.ranks->average_rank(static_cast<Eigen::Index>(mi)), "%.2f");
        rep << cell << std::string(cell.size() < 16 ? 16 - cell.size() : 2, ' ');
      }
      rep << "\n";
      if (table.nem) {
        rep << "Nemenyi: CD=" << fmt_double(table.nem->critical_difference, "%.3f")
            << " (alpha=" << fmt_double(table.nem->alpha, "%g")
            << ", q=" << fmt_double(table.nem->q_alpha, "%.3f") << ")"
            << "; significant: " << significant_pair_text(*table.nem) << "\n";
      }
      rep << "\n";
    }
    if (!outcome.messages.empty()) {
      rep << "== notes ==\n";
      for (const std::string& msg : outcome.messages) rep << msg << "\n";
    }
    write_text_atomic(out_path("report.txt"), rep.str());
  }

  // ---- coefficient reports
  for (const ReportSpec& spec : config.reports) {
    try {
      int di = -1;
      int mi = -1;
      for (std::size_t i = 0; i < config.datasets.size(); ++i) {
        if (config.datasets[i].name == spec.dataset) di = static_cast<int>(i);
      }
      for (std::size_t i = 0; i < config.methods.size(); ++i) {
        if (config.methods[i].display_name() == spec.method) mi = static_cast<int>(i);
      }
      if (di < 0 || mi < 0) throw DataError("report refers to an unknown dataset or method");
      if (!data[static_cast<std::size_t>(di)]) throw DataError("dataset failed to load");
      const MethodSpec& method = config.methods[static_cast<std::size_t>(mi)];
      if (method.kind != MethodSpec::Kind::Sblr && method.kind != MethodSpec::Kind::SparseSblr) {
        throw DataError("coefficient reports need an sblr or sparsesblr method");
      }
      const Dataset& dataset = *data[static_cast<std::size_t>(di)];

      // focus class by name or index
      int focus = -1;
      for (std::size_t k = 0; k < dataset.label_names.size(); ++k) {
        if (dataset.label_names[k] == spec.focus_class) focus = static_cast<int>(k);
      }
      if (focus < 0) {
        try {
          focus = std::stoi(spec.focus_class);
        } catch (const std::exception&) {
          throw DataError("unknown focus class: " + spec.focus_class);
        }
      }

      // hyperparameters: pinned values, else the modal per-fold selection
      const PairOutcome& pair =
          pairs[static_cast<std::size_t>(di) * config.methods.size() +
                static_cast<std::size_t>(mi)];
      double gamma = method.gamma.value_or(config.grid.values.front());
      double lambda = method.lambda.value_or(config.grid.values.front());
      if (!pair.failed) {
        std::map<std::pair<double, double>, int> counts;
        for (const FoldOutcome& fold : pair.cv.folds) {
          if (!fold.skipped) ++counts[{fold.gamma, fold.lambda}];
        }
        int best_count = 0;
        for (const auto& [hp, count] : counts) {
          if (count > best_count) {
            best_count = count;
            gamma = hp.first;
            lambda = hp.second;
          }
        }
      }
      if (method.kind == MethodSpec::Kind::Sblr) lambda = 0.0;

      auto [normalized, stats] = normalize_features(dataset);
      const SblrModel model =
          sblr_fit(normalized, KernelConfig{KernelKind::Rbf, gamma}, lambda, config.solver);

      const std::string header_extras = " dataset=" + spec.dataset + " method=" + spec.method +
                                        " gamma=" + fmt_double(gamma) +
                                        " lambda=" + fmt_double(lambda);
      std::string csv = "# sbc.coefficients/1" + seed_header + header_extras +
                        " focus_class=" + dataset.label_names[static_cast<std::size_t>(focus)] +
                        "\n";
      csv += "class,co_occurrence,coefficient\n";
      for (const CoefficientReportRow& row : coefficient_report(model, dataset, focus)) {
        csv += row.class_name + "," + std::to_string(row.co_occurrence) + "," +
               fmt_double(row.coefficient) + "\n";
      }
      write_text_atomic(
          out_path("coefficients_" + sanitize_filename(spec.focus_class) + ".csv"), csv);

      std::string matrix = "# sbc.coefficient-matrix/1 (absolute values)" + seed_header +
                           header_extras + "\n";
      matrix += "class,intercept";
      for (const std::string& name : dataset.label_names) matrix += "," + name;
      matrix += "\n";
      for (int k = 0; k < dataset.n_classes(); ++k) {
        matrix += dataset.label_names[static_cast<std::size_t>(k)];
        for (Eigen::Index c = 0; c < model.coefficients.betas.cols(); ++c) {
          matrix += "," + fmt_double(std::abs(model.coefficients.betas(k, c)));
        }
        matrix += "\n";
      }
      write_text_atomic(out_path("coefficient_matrix_" + sanitize_filename(spec.dataset) + "_" +
                                 sanitize_filename(spec.method) + ".csv"),
                        matrix);
    } catch (const std::exception& e) {
      ++outcome.failed_pairs;
      outcome.messages.push_back("coefficient report for class '" + spec.focus_class +
                                 "' failed: " + e.what());
    }
  }

  return outcome;
}

}  // namespace sbc

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sbc/eval.hpp"
#include "sbc/optim.hpp"

namespace sbc {

struct DatasetSpec {
  std::string name;
  std::string kind;  // "mulan-arff" | "csv-mcc"
  std::string data;
  std::string labels_xml;    // mulan-arff
  std::string label_column;  // csv-mcc
};

// Optional coefficient report emitted after the cross-validation runs.
struct ReportSpec {
  std::string dataset;
  std::string method;
  std::string focus_class;  // label name or index
};

struct BenchmarkConfig {
  std::uint64_t seed = 42;
  int folds = 10;
  int jobs = 0;  // 0 = all cores
  double nemenyi_alpha = 0.05;
  std::string output_dir = "sbc-out";
  GridSpec grid;
  SolverConfig solver;
  std::vector<DatasetSpec> datasets;
  std::vector<MethodSpec> methods;
  std::vector<ReportSpec> reports;
};

// Parses the declarative TOML experiment file; paths stay as written.
BenchmarkConfig load_benchmark_config(const std::string& path);

// Resolves a data path: absolute or existing paths win, otherwise the
// SBC_DATA_DIR environment variable supplies the base directory.
std::string resolve_data_path(const std::string& path);

Dataset load_dataset(const DatasetSpec& spec);

struct BenchmarkOutcome {
  int failed_pairs = 0;
  std::vector<std::string> messages;  // per-pair notes and warnings
};

// Runs every (dataset, method) pair, then writes results.csv, ranks.csv,
// nemenyi.json, report.txt and any requested coefficient CSVs under
// config.output_dir. A failing pair is reported and skipped.
BenchmarkOutcome run_benchmark(const BenchmarkConfig& config);

}  // namespace sbc

#include "sbc/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "sbc/errors.hpp"
#include "sbc/random.hpp"

namespace sbc {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Strips matching quotes and resolves backslash escapes within them.
std::string unquote(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '\'' && s.back() == '\'') ||
                        (s.front() == '"' && s.back() == '"'))) {
    std::string out;
    out.reserve(s.size() - 2);
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      if (s[i] == '\\' && i + 2 < s.size()) ++i;
      out.push_back(s[i]);
    }
    return out;
  }
  return s;
}

// Finds the closing quote, skipping backslash-escaped characters.
std::size_t find_closing_quote(const std::string& s, std::size_t start, char quote) {
  for (std::size_t i = start; i < s.size(); ++i) {
    if (s[i] == '\\') {
      ++i;
    } else if (s[i] == quote) {
      return i;
    }
  }
  return std::string::npos;
}

bool parse_double(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stod(t, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == t.size();
}

// Splits a line on commas, honoring single/double quotes and backslash
// escapes inside them.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  char quote = '\0';
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote != '\0') {
      cur.push_back(c);
      if (c == '\\' && i + 1 < line.size()) {
        cur.push_back(line[++i]);
      } else if (c == quote) {
        quote = '\0';
      }
    } else if (c == '\'' || c == '"') {
      quote = c;
      cur.push_back(c);
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::string decode_xml_entities(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] == '&') {
      static const std::pair<const char*, char> table[] = {
          {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&apos;", '\''}};
      bool matched = false;
      for (const auto& [ent, ch] : table) {
        const std::size_t n = std::string(ent).size();
        if (s.compare(i, n, ent) == 0) {
          out.push_back(ch);
          i += n;
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    out.push_back(s[i]);
    ++i;
  }
  return out;
}

// MULAN labels XML: every <label name="..."/> inside the root element.
std::vector<std::string> parse_labels_xml(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open labels XML: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string xml = buf.str();

  std::vector<std::string> names;
  std::size_t pos = 0;
  while ((pos = xml.find("<label", pos)) != std::string::npos) {
    const std::size_t end = xml.find('>', pos);
    if (end == std::string::npos) throw DataError("malformed labels XML: unterminated <label>");
    const std::string tag = xml.substr(pos, end - pos);
    const std::size_t name_at = tag.find("name");
    if (name_at != std::string::npos) {
      std::size_t q1 = tag.find_first_of("\"'", name_at);
      if (q1 == std::string::npos) throw DataError("malformed labels XML: label without name value");
      const char quote = tag[q1];
      const std::size_t q2 = tag.find(quote, q1 + 1);
      if (q2 == std::string::npos) throw DataError("malformed labels XML: unterminated name value");
      names.push_back(decode_xml_entities(tag.substr(q1 + 1, q2 - q1 - 1)));
    }
    pos = end + 1;
  }
  return names;
}

struct ArffAttribute {
  std::string name;
  bool nominal = false;
  std::vector<std::string> categories;  // declaration order
};

struct ArffFile {
  std::vector<ArffAttribute> attributes;
  // Cell values: numeric cells parsed to double, nominal cells stored as a
  // category index, missing cells as NaN.
  std::vector<std::vector<double>> rows;
};

ArffFile parse_arff(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ARFF file: " + path);

  ArffFile arff;
  std::vector<std::unordered_map<std::string, int>> category_index;
  bool in_data = false;
  std::string line;
  std::size_t line_no = 0;

  auto fail = [&](const std::string& msg) -> void {
    throw DataError(path + ":" + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '%') continue;

    if (!in_data) {
      const std::string low = lower(line);
      if (low.rfind("@relation", 0) == 0) continue;
      if (low.rfind("@data", 0) == 0) {
        in_data = true;
        continue;
      }
      if (low.rfind("@attribute", 0) == 0) {
        std::string rest = trim(line.substr(std::string("@attribute").size()));
        std::string name;
        if (!rest.empty() && (rest[0] == '\'' || rest[0] == '"')) {
          const char quote = rest[0];
          const std::size_t endq = find_closing_quote(rest, 1, quote);
          if (endq == std::string::npos) fail("unterminated quoted attribute name");
          name = unquote(rest.substr(0, endq + 1));
          rest = trim(rest.substr(endq + 1));
        } else {
          const std::size_t sp = rest.find_first_of(" \t");
          if (sp == std::string::npos) fail("attribute without a type");
          name = rest.substr(0, sp);
          rest = trim(rest.substr(sp));
        }
        ArffAttribute attr;
        attr.name = name;
        if (!rest.empty() && rest[0] == '{') {
          const std::size_t close = rest.find('}');
          if (close == std::string::npos) fail("unterminated nominal specification");
          attr.nominal = true;
          for (const std::string& cat : split_csv_line(rest.substr(1, close - 1))) {
            attr.categories.push_back(unquote(cat));
          }
          if (attr.categories.empty()) fail("nominal attribute with no categories");
        } else {
          const std::string type = lower(rest);
          if (type != "numeric" && type != "real" && type != "integer") {
            fail("unsupported attribute type '" + rest + "' for attribute " + name);
          }
        }
        category_index.emplace_back();
        for (std::size_t c = 0; c < attr.categories.size(); ++c) {
          category_index.back()[attr.categories[c]] = static_cast<int>(c);
        }
        arff.attributes.push_back(std::move(attr));
        continue;
      }
      fail("unexpected header line: " + line);
    }

    // data section
    const std::size_t n_attrs = arff.attributes.size();
    std::vector<double> row(n_attrs, std::numeric_limits<double>::quiet_NaN());
    auto assign_cell = [&](std::size_t col, const std::string& raw_cell) {
      const std::string cell = unquote(trim(raw_cell));
      if (cell == "?") {
        row[col] = std::numeric_limits<double>::quiet_NaN();  // sparse rows preset 0
        return;
      }
      const ArffAttribute& attr = arff.attributes[col];
      if (attr.nominal) {
        auto it = category_index[col].find(cell);
        if (it == category_index[col].end()) {
          fail("value '" + cell + "' not among declared categories of " + attr.name);
        }
        row[col] = static_cast<double>(it->second);
      } else {
        double v;
        if (!parse_double(cell, v)) fail("non-numeric value '" + cell + "' for " + attr.name);
        row[col] = v;
      }
    };

    if (line[0] == '{') {
      // sparse row: unlisted attributes are 0
      const std::size_t close = line.find('}');
      if (close == std::string::npos) fail("unterminated sparse row");
      for (std::size_t col = 0; col < n_attrs; ++col) {
        const ArffAttribute& attr = arff.attributes[col];
        if (attr.nominal) {
          auto it = category_index[col].find("0");
          row[col] = it != category_index[col].end() ? static_cast<double>(it->second) : 0.0;
        } else {
          row[col] = 0.0;
        }
      }
      const std::string body = trim(line.substr(1, close - 1));
      if (!body.empty()) {
        for (const std::string& entry : split_csv_line(body)) {
          if (entry.empty()) continue;
          const std::size_t sp = entry.find_first_of(" \t");
          if (sp == std::string::npos) fail("sparse entry without value: " + entry);
          std::size_t idx = 0;
          double idx_val;
          if (!parse_double(entry.substr(0, sp), idx_val) || idx_val < 0 ||
              idx_val != std::floor(idx_val)) {
            fail("bad sparse index in entry: " + entry);
          }
          idx = static_cast<std::size_t>(idx_val);
          if (idx >= n_attrs) fail("sparse index out of range: " + entry);
          assign_cell(idx, entry.substr(sp + 1));
        }
      }
    } else {
      const std::vector<std::string> cells = split_csv_line(line);
      if (cells.size() != n_attrs) {
        fail("row has " + std::to_string(cells.size()) + " values, expected " +
             std::to_string(n_attrs));
      }
      for (std::size_t col = 0; col < n_attrs; ++col) assign_cell(col, cells[col]);
    }
    arff.rows.push_back(std::move(row));
  }

  if (!in_data) throw DataError(path + ": no @data section");
  if (arff.rows.empty()) throw DataError(path + ": no data rows");
  return arff;
}

void impute_column_means(Eigen::MatrixXd& x) {
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    double sum = 0.0;
    Eigen::Index n = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (!std::isnan(x(i, j))) {
        sum += x(i, j);
        ++n;
      }
    }
    const double mean = n > 0 ? sum / static_cast<double>(n) : 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (std::isnan(x(i, j))) x(i, j) = mean;
    }
  }
}

}  // namespace

const char* task_name(Task t) { return t == Task::MultiLabel ? "mlc" : "mcc"; }

Task task_from_name(const std::string& name) {
  if (name == "mlc") return Task::MultiLabel;
  if (name == "mcc") return Task::MultiClass;
  throw DataError("unknown task kind: " + name);
}

Dataset Dataset::subset(const std::vector<int>& rows) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(rows[i]);
    out.labels.push_back(labels[static_cast<std::size_t>(rows[i])]);
  }
  out.label_names = label_names;
  out.feature_names = feature_names;
  out.task = task;
  return out;
}

Eigen::MatrixXd NormStats::apply(const Eigen::MatrixXd& x) const {
  if (x.cols() != col_min.size()) {
    throw DataError("normalization stats were fitted on " + std::to_string(col_min.size()) +
                    " features, data has " + std::to_string(x.cols()));
  }
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double lo = col_min(j);
    const double hi = col_max(j);
    if (hi > lo) {
      out.col(j) = (2.0 * (x.col(j).array() - lo) / (hi - lo) - 1.0)
                       .cwiseMax(-1.0)
                       .cwiseMin(1.0);
    } else {
      out.col(j).setZero();
    }
  }
  return out;
}

Eigen::VectorXd NormStats::apply_row(const Eigen::VectorXd& x) const {
  return apply(x.transpose()).row(0);
}

std::vector<std::vector<int>> FoldPlan::fold_indices() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(fold_count));
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    out[static_cast<std::size_t>(assignments[i])].push_back(static_cast<int>(i));
  }
  return out;
}

Dataset load_arff_mulan(const std::string& data_path, const std::string& labels_xml_path) {
  const std::vector<std::string> label_names = parse_labels_xml(labels_xml_path);
  if (label_names.size() < 2) {
    throw DataError(labels_xml_path + ": need at least two label attributes, found " +
                    std::to_string(label_names.size()));
  }
  const ArffFile arff = parse_arff(data_path);

  std::unordered_map<std::string, int> attr_by_name;
  for (std::size_t i = 0; i < arff.attributes.size(); ++i) {
    attr_by_name[arff.attributes[i].name] = static_cast<int>(i);
  }

  std::vector<int> label_cols;
  std::set<int> label_col_set;
  for (const std::string& name : label_names) {
    auto it = attr_by_name.find(name);
    if (it == attr_by_name.end()) {
      throw DataError("label attribute '" + name + "' not present in " + data_path);
    }
    label_cols.push_back(it->second);
    label_col_set.insert(it->second);
  }

  const std::size_t n = arff.rows.size();
  const int m = static_cast<int>(label_names.size());

  Dataset d;
  d.task = Task::MultiLabel;
  d.label_names = label_names;
  d.labels.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < m; ++k) {
      const double v = arff.rows[i][static_cast<std::size_t>(label_cols[static_cast<std::size_t>(k)])];
      const ArffAttribute& attr =
          arff.attributes[static_cast<std::size_t>(label_cols[static_cast<std::size_t>(k)])];
      double value = v;
      if (attr.nominal) {
        if (std::isnan(v)) throw DataError("missing label value in row " + std::to_string(i));
        const std::string& cat = attr.categories[static_cast<std::size_t>(v)];
        if (cat != "0" && cat != "1") {
          throw DataError("label attribute '" + attr.name + "' has non-binary value '" + cat + "'");
        }
        value = cat == "1" ? 1.0 : 0.0;
      } else {
        if (std::isnan(v)) throw DataError("missing label value in row " + std::to_string(i));
        if (value != 0.0 && value != 1.0) {
          throw DataError("label attribute '" + attr.name + "' has non-binary value");
        }
      }
      if (value == 1.0) d.labels[i].push_back(k);
    }
  }

  // feature columns: numeric pass through, nominal one-hot in declaration order
  std::vector<std::pair<int, int>> feature_plan;  // (attribute, category or -1)
  for (std::size_t a = 0; a < arff.attributes.size(); ++a) {
    if (label_col_set.count(static_cast<int>(a))) continue;
    const ArffAttribute& attr = arff.attributes[a];
    if (attr.nominal) {
      for (std::size_t c = 0; c < attr.categories.size(); ++c) {
        feature_plan.emplace_back(static_cast<int>(a), static_cast<int>(c));
        d.feature_names.push_back(attr.name + "=" + attr.categories[c]);
      }
    } else {
      feature_plan.emplace_back(static_cast<int>(a), -1);
      d.feature_names.push_back(attr.name);
    }
  }
  if (feature_plan.empty()) throw DataError(data_path + ": no feature attributes");

  d.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(feature_plan.size()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < feature_plan.size(); ++j) {
      const auto [a, cat] = feature_plan[j];
      const double v = arff.rows[i][static_cast<std::size_t>(a)];
      double cell;
      if (std::isnan(v)) {
        cell = std::numeric_limits<double>::quiet_NaN();
      } else if (cat >= 0) {
        cell = v == static_cast<double>(cat) ? 1.0 : 0.0;
      } else {
        cell = v;
      }
      d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cell;
    }
  }
  impute_column_means(d.features);
  return d;
}

Dataset load_csv_mcc(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file: " + path);

  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) {
    throw DataError(path + ": empty file");
  }
  const std::vector<std::string> header = split_csv_line(line);

  int label_col = -1;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (unquote(header[j]) == label_column) {
      label_col = static_cast<int>(j);
      break;
    }
  }
  if (label_col < 0) {
    double idx;
    if (parse_double(label_column, idx) && idx >= 0 && idx < static_cast<double>(header.size()) &&
        idx == std::floor(idx)) {
      label_col = static_cast<int>(idx);
    }
  }
  if (label_col < 0) throw DataError(path + ": label column '" + label_column + "' not found");

  Dataset d;
  d.task = Task::MultiClass;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (static_cast<int>(j) != label_col) d.feature_names.push_back(unquote(header[j]));
  }
  if (d.feature_names.empty()) throw DataError(path + ": no feature columns");

  std::unordered_map<std::string, int> class_ids;  // first-appearance order
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": wrong number of columns");
    }
    std::vector<double> row;
    row.reserve(header.size() - 1);
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (static_cast<int>(j) == label_col) continue;
      double v;
      if (!parse_double(cells[j], v)) {
        throw DataError(path + ":" + std::to_string(line_no) + ": non-numeric feature value '" +
                        cells[j] + "'");
      }
      row.push_back(v);
    }
    const std::string cls = unquote(cells[static_cast<std::size_t>(label_col)]);
    if (cls.empty()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": empty class value");
    }
    auto [it, inserted] = class_ids.emplace(cls, static_cast<int>(class_ids.size()));
    d.labels.push_back({it->second});
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path + ": no data rows");
  if (class_ids.size() < 2) throw DataError(path + ": fewer than two classes");

  d.label_names.resize(class_ids.size());
  for (const auto& [name, id] : class_ids) d.label_names[static_cast<std::size_t>(id)] = name;

  d.features.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(d.feature_names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return d;
}

std::pair<Dataset, NormStats> normalize_features(const Dataset& d) {
  NormStats stats;
  stats.col_min = d.features.colwise().minCoeff();
  stats.col_max = d.features.colwise().maxCoeff();
  Dataset out = d;
  out.features = stats.apply(d.features);
  return {std::move(out), std::move(stats)};
}

FoldPlan make_folds(const Dataset& d, int k, std::uint64_t seed) {
  const int n = static_cast<int>(d.n_instances());
  if (k < 2) throw DataError("fold count must be at least 2");
  if (k > n) throw DataError("fold count " + std::to_string(k) + " exceeds instance count " +
                             std::to_string(n));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(seed);
  deterministic_shuffle(order, rng);

  FoldPlan plan;
  plan.fold_count = k;
  plan.seed = seed;
  plan.assignments.assign(static_cast<std::size_t>(n), 0);
  for (int pos = 0; pos < n; ++pos) {
    plan.assignments[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos % k;
  }
  return plan;
}

}  // namespace sbc

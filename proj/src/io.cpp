#include "confstab/io.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "confstab/error.hpp"

namespace confstab {

std::string format_double(double v) {
  if (v == 0.0) return "0";  // also folds -0
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInputError("cannot write " + tmp);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw InvalidInputError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, target);
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    auto field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.remove_suffix(1);
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    out.emplace_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

namespace {

// Lines with their 1-based numbers, skipping blank lines.
std::vector<std::pair<std::size_t, std::string_view>> lines_of(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> out;
  std::size_t no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    ++no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) out.emplace_back(no, line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return out;
}

bool parse_number(const std::string& s, double& out) {
  if (s == "nan") {
    out = NAN;
    return true;
  }
  if (s == "inf" || s == "-inf") {
    out = s[0] == '-' ? -INFINITY : INFINITY;
    return true;
  }
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

double number_field(const std::string& s, const std::string& source, std::size_t line, const std::string& what) {
  double v = 0.0;
  if (!parse_number(s, v)) throw ParseError(source, line, what + " is not a number: '" + s + "'");
  return v;
}

long long integer_field(const std::string& s, const std::string& source, std::size_t line, const std::string& what) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(source, line, what + " is not an integer: '" + s + "'");
  return v;
}

std::string join_row(std::span<const double> values) {
  std::string out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) out += ',';
    out += format_double(values[k]);
  }
  return out;
}

[[noreturn]] void json_fail(const std::string& field, const std::string& what) { throw ConfigError(field, what); }

const Json& member(const Json& j, const std::string& key, const std::string& field) {
  if (!j.is_object()) json_fail(field, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) json_fail(field + "." + key, "missing");
  return *it;
}

double json_number(const Json& j, const std::string& field) {
  if (!j.is_number()) json_fail(field, "expected a number");
  return j.get<double>();
}

std::vector<std::vector<double>> json_rows(const Json& j, const std::string& field) {
  if (!j.is_array()) json_fail(field, "expected an array of arrays");
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto& row = j[r];
    const std::string rf = field + "[" + std::to_string(r) + "]";
    if (!row.is_array()) json_fail(rf, "expected an array");
    std::vector<double> vals;
    for (std::size_t c = 0; c < row.size(); ++c) vals.push_back(json_number(row[c], rf + "[" + std::to_string(c) + "]"));
    rows.push_back(std::move(vals));
  }
  return rows;
}

Json rows_to_json(const std::vector<std::vector<double>>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) out.push_back(r);
  return out;
}

}  // namespace

std::string matrix_to_csv(const Matrix& m) {
  std::string out = "q=" + std::to_string(m.rows()) + "\n";
  for (std::size_t r = 0; r < m.rows(); ++r) out += join_row(m.row(r)) + "\n";
  return out;
}

Matrix matrix_from_csv(std::string_view text, const std::string& source) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ParseError(source, 1, "empty matrix file");
  const std::string head(lines[0].second);
  if (head.rfind("q=", 0) != 0) throw ParseError(source, lines[0].first, "expected header 'q=<Q>'");
  const long long q = integer_field(head.substr(2), source, lines[0].first, "Q");
  if (q < 1) throw ParseError(source, lines[0].first, "Q must be positive");
  if (lines.size() != static_cast<std::size_t>(q) + 1)
    throw ParseError(source, lines.back().first, "expected " + std::to_string(q) + " rows");
  Matrix m(static_cast<std::size_t>(q), static_cast<std::size_t>(q));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto [no, line] = lines[r + 1];
    const auto fields = split_csv_line(line);
    if (fields.size() != m.cols()) throw ParseError(source, no, "expected " + std::to_string(q) + " columns");
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = number_field(fields[c], source, no, "entry");
  }
  return m;
}

Json matrix_to_json(const Matrix& m) {
  return Json{{"q", m.rows()}, {"rows", rows_to_json(m.to_rows())}};
}

Matrix matrix_from_json(const Json& j) {
  const auto rows = json_rows(member(j, "rows", "matrix"), "matrix.rows");
  const double q = json_number(member(j, "q", "matrix"), "matrix.q");
  if (q != static_cast<double>(rows.size())) json_fail("matrix.q", "does not match the number of rows");
  for (const auto& r : rows)
    if (r.size() != rows.size()) json_fail("matrix.rows", "matrix must be square");
  return Matrix::from_rows(rows);
}

std::string dataset_to_csv(const Dataset& d) {
  const std::size_t dim = common_dimension(d.points);
  std::string out = "label";
  for (std::size_t k = 1; k <= dim; ++k) out += ",x" + std::to_string(k);
  out += "\n";
  for (std::size_t i = 0; i < d.size(); ++i) out += std::to_string(d.labels[i] + 1) + "," + join_row(d.points[i]) + "\n";
  return out;
}

Dataset dataset_from_csv(std::string_view text, int q, const std::string& source) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ParseError(source, 1, "empty dataset file");
  const auto header = split_csv_line(lines[0].second);
  if (header.empty() || header[0] != "label") throw ParseError(source, lines[0].first, "header must start with 'label'");
  for (std::size_t k = 1; k < header.size(); ++k)
    if (header[k] != "x" + std::to_string(k))
      throw ParseError(source, lines[0].first, "expected column 'x" + std::to_string(k) + "'");
  const std::size_t dim = header.size() - 1;
  Dataset d;
  int max_label = 0;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto [no, line] = lines[k];
    const auto fields = split_csv_line(line);
    if (fields.size() != dim + 1)
      throw ParseError(source, no, "expected " + std::to_string(dim + 1) + " fields, got " + std::to_string(fields.size()));
    const long long label = integer_field(fields[0], source, no, "label");
    if (label < 1 || (q > 0 && label > q)) throw ParseError(source, no, "label " + fields[0] + " out of range");
    if (label > 1'000'000) throw ParseError(source, no, "label " + fields[0] + " too large");
    FeatureVector x(dim);
    for (std::size_t c = 0; c < dim; ++c) {
      x[c] = number_field(fields[c + 1], source, no, "feature");
      if (!std::isfinite(x[c])) throw ParseError(source, no, "non-finite feature");
    }
    d.labels.push_back(static_cast<int>(label) - 1);
    d.points.push_back(std::move(x));
    max_label = std::max(max_label, static_cast<int>(label));
  }
  d.q = q > 0 ? q : max_label;
  return d;
}

Json kernel_to_json(const Kernel& k) {
  switch (k.kind) {
    case KernelKind::kGaussian:
      return Json{{"kind", "gaussian"}, {"gamma", k.gamma}};
    case KernelKind::kLinear:
      return Json{{"kind", "linear"}};
    case KernelKind::kPolynomial:
      return Json{{"kind", "polynomial"}, {"degree", k.degree}, {"offset", k.offset}};
  }
  return {};
}

Kernel kernel_from_json(const Json& j, const std::string& field) {
  const auto& kind = member(j, "kind", field);
  if (!kind.is_string()) json_fail(field + ".kind", "expected a string");
  const auto name = kind.get<std::string>();
  try {
    if (name == "gaussian") return Kernel::gaussian(json_number(member(j, "gamma", field), field + ".gamma"));
    if (name == "linear") return Kernel::linear();
    if (name == "polynomial") {
      const double deg = json_number(member(j, "degree", field), field + ".degree");
      if (deg != std::floor(deg)) json_fail(field + ".degree", "must be an integer");
      const double off = j.contains("offset") ? json_number(j["offset"], field + ".offset") : 1.0;
      return Kernel::polynomial(static_cast<int>(deg), off);
    }
  } catch (const InvalidInputError& e) {
    json_fail(field, e.what());
  }
  json_fail(field + ".kind", "unknown kernel '" + name + "' (gaussian | linear | polynomial)");
}

Json hypothesis_to_json(const KernelHypothesis& h) {
  return Json{{"q", h.q_count()},
              {"kernel", kernel_to_json(h.kernel())},
              {"alpha", rows_to_json(h.alpha().to_rows())},
              {"train_points", rows_to_json(h.train_points())}};
}

KernelHypothesis hypothesis_from_json(const Json& j, const std::string& source) {
  try {
    const double q = json_number(member(j, "q", "hypothesis"), "hypothesis.q");
    const auto alpha = json_rows(member(j, "alpha", "hypothesis"), "hypothesis.alpha");
    auto points = json_rows(member(j, "train_points", "hypothesis"), "hypothesis.train_points");
    if (q != static_cast<double>(alpha.size())) json_fail("hypothesis.q", "does not match the rows of alpha");
    for (const auto& r : alpha)
      if (r.size() != points.size()) json_fail("hypothesis.alpha", "each row needs one entry per training point");
    const Kernel k = kernel_from_json(member(j, "kernel", "hypothesis"), "hypothesis.kernel");
    Matrix a(alpha.size(), points.size());
    for (std::size_t r = 0; r < alpha.size(); ++r)
      for (std::size_t c = 0; c < points.size(); ++c) a(r, c) = alpha[r][c];
    return KernelHypothesis(k, std::move(a), std::move(points));
  } catch (const ConfigError& e) {
    throw ParseError(source, 1, e.what());
  } catch (const InvalidInputError& e) {
    throw ParseError(source, 1, e.what());
  }
}

Json model_to_json(const ClassConditionalModel& m) {
  return Json{{"q", m.q},
              {"means", rows_to_json(m.means)},
              {"stddevs", rows_to_json(m.stddevs)},
              {"priors", m.priors.values()}};
}

ClassConditionalModel model_from_json(const Json& j, const std::string& field) {
  ClassConditionalModel m;
  m.q = static_cast<int>(json_number(member(j, "q", field), field + ".q"));
  m.means = json_rows(member(j, "means", field), field + ".means");
  m.stddevs = json_rows(member(j, "stddevs", field), field + ".stddevs");
  std::vector<double> pi;
  const auto& pj = member(j, "priors", field);
  if (!pj.is_array()) json_fail(field + ".priors", "expected an array");
  for (std::size_t k = 0; k < pj.size(); ++k) pi.push_back(json_number(pj[k], field + ".priors"));
  try {
    m.priors = PriorVector(pi);
    m.validate();
  } catch (const InvalidInputError& e) {
    json_fail(field, e.what());
  }
  return m;
}

std::string stability_csv(const StabilityReport& r) {
  std::string out = "index,class,m_q,empirical,cap,ratio\n";
  for (const auto& rec : r.records) {
    out += std::to_string(rec.index + 1) + "," + std::to_string(rec.label + 1) + "," + std::to_string(rec.class_count) +
           "," + format_double(rec.empirical) + "," + format_double(rec.cap) + "," + format_double(rec.ratio) + "\n";
  }
  return out;
}

std::string concentration_csv(const std::vector<TrialRecord>& records, double bound) {
  std::string out = "trial,deviation,bound,flags\n";
  for (const auto& r : records) {
    std::string flags = r.converged ? "converged" : "not_converged";
    if (r.deviation > bound) flags += ";exceeds_bound";
    out += std::to_string(r.trial) + "," + format_double(r.deviation) + "," + format_double(bound) + "," + flags + "\n";
  }
  return out;
}

std::string trial_log_header() { return "trial,deviation,estimation_slack,max_loss,objective,converged\n"; }

std::string trial_log_row(const TrialRecord& r) {
  return std::to_string(r.trial) + "," + format_double(r.deviation) + "," + format_double(r.estimation_slack) + "," +
         format_double(r.max_loss) + "," + format_double(r.objective) + "," + (r.converged ? "1" : "0") + "\n";
}

std::vector<TrialRecord> trial_log_from_csv(std::string_view text, const std::string& source) {
  // Drop a trailing partial line left by an interrupted write.
  const auto last_nl = text.rfind('\n');
  text = last_nl == std::string_view::npos ? std::string_view{} : text.substr(0, last_nl + 1);
  const auto lines = lines_of(text);
  std::vector<TrialRecord> out;
  if (lines.empty()) return out;
  if (std::string(lines[0].second) + "\n" != trial_log_header())
    throw ParseError(source, lines[0].first, "unexpected trial log header");
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto [no, line] = lines[k];
    const auto f = split_csv_line(line);
    if (f.size() != 6) throw ParseError(source, no, "expected 6 fields");
    TrialRecord r;
    const long long t = integer_field(f[0], source, no, "trial");
    if (t < 0) throw ParseError(source, no, "negative trial index");
    r.trial = static_cast<std::size_t>(t);
    r.deviation = number_field(f[1], source, no, "deviation");
    r.estimation_slack = number_field(f[2], source, no, "estimation_slack");
    r.max_loss = number_field(f[3], source, no, "max_loss");
    r.objective = number_field(f[4], source, no, "objective");
    if (f[5] != "0" && f[5] != "1") throw ParseError(source, no, "converged must be 0 or 1");
    r.converged = f[5] == "1";
    out.push_back(r);
  }
  return out;
}

std::string tail_csv(const McDiarmidReport& r) {
  std::string out = "t,empirical,theoretical,stderr,pass\n";
  for (const auto& row : r.rows) {
    out += format_double(row.t) + "," + format_double(row.empirical) + "," + format_double(row.theoretical) + "," +
           format_double(row.standard_error) + "," + (row.pass ? "1" : "0") + "\n";
  }
  return out;
}

void check_csv(std::string_view text, const std::vector<std::string>& header, const std::vector<bool>& numeric,
               const std::string& source) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ParseError(source, 1, "empty file");
  if (split_csv_line(lines[0].second) != header) throw ParseError(source, lines[0].first, "unexpected header");
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto f = split_csv_line(lines[k].second);
    if (f.size() != header.size()) throw ParseError(source, lines[k].first, "wrong number of fields");
    for (std::size_t c = 0; c < f.size() && c < numeric.size(); ++c) {
      double v = 0.0;
      if (numeric[c] && !parse_number(f[c], v)) throw ParseError(source, lines[k].first, "column " + header[c] + " is not numeric");
    }
  }
}

}  // namespace confstab

#include "sonflow/serialization.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "json.hpp"

namespace sonflow {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

namespace {

ordered number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

ordered rows(const Matrix& m) {
  ordered out = ordered::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered row = ordered::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    out.push_back(std::move(row));
  }
  return out;
}

ordered vec(const Vector& v) {
  ordered out = ordered::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

ordered config_json(const FlowConfig& cfg) {
  return ordered{{"scale", cfg.scale},
                 {"method", to_string(cfg.method)},
                 {"h", cfg.h},
                 {"t_max", cfg.t_max},
                 {"grad_tol", cfg.grad_tol},
                 {"ortho_check_every", cfg.ortho_check_every}};
}

ordered header(const char* kind) {
  return ordered{{"schema_version", kSchemaVersion}, {"kind", kind}};
}

ordered checks_json(const std::vector<CheckResult>& checks) {
  ordered out = ordered::array();
  for (const CheckResult& c : checks)
    out.push_back(ordered{{"module", c.module},
                          {"name", c.name},
                          {"n", c.n},
                          {"passed", c.passed},
                          {"measured", number(c.measured)},
                          {"threshold", number(c.threshold)},
                          {"detail", c.detail}});
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string scalar_text(const ordered& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  return v.get<std::string>();
}

void flatten(const ordered& v, const std::string& prefix, std::string& out) {
  if (v.is_object()) {
    for (auto it = v.begin(); it != v.end(); ++it)
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i)
      flatten(v[i], prefix + "." + std::to_string(i), out);
  } else {
    out += csv_field(prefix) + "," + csv_field(scalar_text(v)) + "\n";
  }
}

std::string emit(const ordered& doc, Format fmt) {
  if (fmt == Format::Json) return doc.dump(2) + "\n";
  std::string out = "key,value\n";
  flatten(doc, "", out);
  return out;
}

double parse_number(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw Error(ErrorCode::IoError, "malformed number '" + s + "'");
  return v;
}

}  // namespace

std::optional<Format> parse_format(const std::string& name) {
  if (name == "csv") return Format::Csv;
  if (name == "json") return Format::Json;
  return std::nullopt;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string serialize(const Trajectory& tr, const FlowConfig& cfg, Format fmt) {
  const int n = tr.n;
  std::string out;
  if (fmt == Format::Csv) {
    out = "t,f,grad_norm";
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out += ",theta_" + std::to_string(i) + "_" + std::to_string(j);
    out += "\n";
    for (std::size_t r = 0; r < tr.size(); ++r) {
      out += format_double(tr.times[r]) + "," + format_double(tr.costs[r]) + "," +
             format_double(tr.grad_norms[r]);
      const Matrix& m = tr.states[r].matrix();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out += "," + format_double(m(i, j));
      out += "\n";
    }
    return out;
  }

  ordered head = header("trajectory");
  head["n"] = n;
  head["config"] = config_json(cfg);
  head["verdict"] = to_string(tr.verdict.kind);
  head["component"] = tr.verdict.component;
  if (!tr.verdict.message.empty()) head["message"] = tr.verdict.message;
  head["steps"] = tr.steps;
  head["final_time"] = tr.final_time;
  head["records"] = tr.size();
  head["max_ortho_drift"] = number(tr.max_ortho_drift);
  head["max_cost_increase"] = number(tr.max_cost_increase);
  out = head.dump() + "\n";
  for (std::size_t r = 0; r < tr.size(); ++r) {
    ordered rec{{"t", tr.times[r]}, {"f", number(tr.costs[r])}, {"grad_norm", number(tr.grad_norms[r])}};
    ordered theta = ordered::array();
    const Matrix& m = tr.states[r].matrix();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) theta.push_back(number(m(i, j)));
    rec["theta"] = std::move(theta);
    out += rec.dump() + "\n";
  }
  return out;
}

TrajectoryTable parse_trajectory(const std::string& text, Format fmt) {
  TrajectoryTable table;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::IoError, "empty trajectory");

  if (fmt == Format::Csv) {
    std::size_t columns = 1;
    for (char ch : line) columns += ch == ',';
    if (columns < 3) throw Error(ErrorCode::IoError, "trajectory header too short");
    const auto n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(columns - 3))));
    if (static_cast<std::size_t>(n * n) + 3 != columns)
      throw Error(ErrorCode::IoError, "trajectory header has no square state block");
    table.n = n;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<double> values;
      std::size_t start = 0;
      while (true) {
        const std::size_t comma = line.find(',', start);
        values.push_back(parse_number(line.substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      if (values.size() != columns) throw Error(ErrorCode::IoError, "ragged trajectory row");
      table.times.push_back(values[0]);
      table.costs.push_back(values[1]);
      table.grad_norms.push_back(values[2]);
      Matrix m(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = values[3 + static_cast<std::size_t>(i * n + j)];
      table.states.push_back(std::move(m));
    }
    return table;
  }

  try {
    const json head = json::parse(line);
    table.n = head.at("n").get<int>();
    const int n = table.n;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json rec = json::parse(line);
      table.times.push_back(rec.at("t").get<double>());
      table.costs.push_back(rec.at("f").get<double>());
      table.grad_norms.push_back(rec.at("grad_norm").get<double>());
      const json& theta = rec.at("theta");
      if (theta.size() != static_cast<std::size_t>(n * n))
        throw Error(ErrorCode::IoError, "state has the wrong number of entries");
      Matrix m(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = theta[static_cast<std::size_t>(i * n + j)].get<double>();
      table.states.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("malformed trajectory: ") + e.what());
  }
  return table;
}

std::string serialize(const BasinReport& rep, Format fmt) {
  ordered doc = header("basin");
  doc["n"] = rep.n;
  doc["trials"] = rep.trials;
  doc["seed"] = rep.seed;
  ordered counts = ordered::object();
  for (const auto& [k, count] : rep.counts) counts[std::to_string(k)] = count;
  doc["counts"] = std::move(counts);
  doc["failures"] = rep.failures;
  doc["max_distance_to_identity"] = number(rep.max_distance_to_identity);
  doc["config"] = config_json(rep.config);
  doc["contract_holds"] = contract_holds(rep);
  return emit(doc, fmt);
}

std::string serialize(const SaddleEscapeReport& rep, Format fmt) {
  ordered doc = header("saddle");
  doc["n"] = rep.n;
  doc["k"] = rep.k;
  doc["eps"] = rep.eps;
  doc["direction"] = to_string(rep.kind);
  doc["trials"] = rep.trials;
  doc["seed"] = rep.seed;
  doc["config"] = config_json(rep.config);
  ordered outcomes = ordered::array();
  for (const EscapeTrial& t : rep.outcomes)
    outcomes.push_back(ordered{{"component", t.component},
                               {"verdict", to_string(t.verdict)},
                               {"escape_time", number(t.escape_time)},
                               {"final_residual", number(t.final_residual)},
                               {"max_grad_norm", number(t.max_grad_norm)},
                               {"final_time", t.final_time}});
  doc["outcomes"] = std::move(outcomes);
  doc["contract_holds"] = contract_holds(rep);
  return emit(doc, fmt);
}

std::string serialize(const LinearizationReport& rep, Format fmt) {
  ordered doc = header("spectrum");
  doc["n"] = rep.base.dim();
  doc["k"] = rep.base.k;
  doc["scale"] = rep.scale;
  doc["theta"] = rows(rep.base.theta.matrix());
  doc["eigenvalues"] = vec(rep.eigenvalues);
  doc["counts"] = ordered{{"stable", rep.n_stable}, {"unstable", rep.n_unstable}, {"zero", rep.n_zero}};
  doc["verdict"] = to_string(rep.verdict);
  doc["contract_holds"] = contract_holds(rep);
  return emit(doc, fmt);
}

std::string serialize(const CriticalReport& rep, Format fmt) {
  ordered doc = header("critical");
  doc["n"] = rep.n;
  doc["k"] = rep.k;
  doc["frame"] = rep.frame;
  doc["seed"] = rep.seed;
  doc["theta"] = rows(rep.theta);
  doc["trace"] = number(rep.trace);
  doc["cost"] = number(rep.cost);
  doc["classified"] = rep.classified;
  doc["dimension"] = rep.dimension;
  doc["hessian_kernel_dimension"] = rep.hessian_kernel_dimension;
  doc["projector_rank"] = rep.projector_rank;
  if (rep.curve_steps > 0)
    doc["curve"] = ordered{{"steps", rep.curve_steps},
                           {"max_residual", number(rep.curve_max_residual)},
                           {"endpoint_error", number(rep.curve_endpoint_error)},
                           {"in_component", rep.curve_in_component}};
  doc["passed"] = rep.passed();
  return emit(doc, fmt);
}

std::string serialize(const VerifyReport& rep, Format fmt) {
  ordered doc = header("verify");
  doc["n_list"] = rep.validation.n_list;
  doc["seed"] = rep.validation.seed;
  doc["checks"] = checks_json(rep.validation.checks);
  ordered mb = ordered::array();
  for (const MorseBottReport& r : rep.morse_bott)
    mb.push_back(ordered{{"n", r.n}, {"seeds", r.seeds}, {"checks", checks_json(r.checks)}, {"passed", r.passed()}});
  doc["morse_bott"] = std::move(mb);
  doc["passed"] = rep.passed();
  return emit(doc, fmt);
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + tmp + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::remove(tmp.c_str());
      throw Error(ErrorCode::IoError, "write to " + tmp + " failed");
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error(ErrorCode::IoError, "cannot rename output into " + path);
  }
}

Matrix parse_matrix(const std::string& text) {
  std::istringstream in(text);
  std::vector<double> values;
  std::string token;
  while (in >> token) values.push_back(parse_number(token));
  if (values.empty()) throw Error(ErrorCode::IoError, "matrix file is empty");

  // Either "n" followed by n*n entries, or a bare square block.
  std::size_t n = 0;
  std::size_t offset = 0;
  const auto root = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(values.size()))));
  const double lead = values.front();
  if (lead >= 1.0 && lead == std::floor(lead) &&
      static_cast<std::size_t>(lead) * static_cast<std::size_t>(lead) + 1 == values.size()) {
    n = static_cast<std::size_t>(lead);
    offset = 1;
  } else if (root * root == values.size()) {
    n = root;
  } else {
    throw Error(ErrorCode::IoError, "matrix file does not hold a square matrix");
  }
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[offset + i * n + j];
  return m;
}

Matrix read_matrix_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_matrix(buf.str());
}

}  // namespace sonflow

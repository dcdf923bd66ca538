#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <random>

#include "json.hpp"
#include "sonflow/serialization.hpp"
#include "support.hpp"

using namespace sonflow;
namespace fs = std::filesystem;

namespace {

Trajectory sample_trajectory() {
  FlowConfig cfg;
  cfg.t_max = 0.3;
  cfg.h = 0.1;
  cfg.grad_tol = 1e-300;
  return integrate(haar_sample(3, 4), cfg);
}

// Flattens a JSON document into path -> scalar text, matching the CSV layout.
void flatten(const nlohmann::json& v, const std::string& prefix, std::map<std::string, nlohmann::json>& out) {
  if (v.is_object()) {
    for (auto it = v.begin(); it != v.end(); ++it)
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) flatten(v[i], prefix + "." + std::to_string(i), out);
  } else {
    out[prefix] = v;
  }
}

std::map<std::string, std::string> read_csv_pairs(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  CHECK(line == "key,value");
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    std::string value = line.substr(comma + 1);
    if (!value.empty() && value.front() == '"') {
      std::string plain;
      for (std::size_t i = 1; i + 1 < value.size(); ++i) {
        plain += value[i];
        if (value[i] == '"') ++i;
      }
      value = plain;
    }
    out[line.substr(0, comma)] = value;
  }
  return out;
}

void same_content(const std::string& json_text, const std::string& csv_text) {
  std::map<std::string, nlohmann::json> flat;
  flatten(nlohmann::json::parse(json_text), "", flat);
  const auto pairs = read_csv_pairs(csv_text);
  REQUIRE(flat.size() == pairs.size());
  for (const auto& [key, value] : flat) {
    REQUIRE(pairs.count(key) == 1);
    const std::string& text = pairs.at(key);
    if (value.is_number()) {
      CHECK(std::stod(text) == value.get<double>());
    } else if (value.is_boolean()) {
      CHECK(text == (value.get<bool>() ? "true" : "false"));
    } else if (value.is_string()) {
      CHECK(text == value.get<std::string>());
    }
  }
}

}  // namespace

TEST_CASE("shortest round-trip doubles") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, i % 40 - 20);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("trajectory round trips bit-exactly") {
  const Trajectory tr = sample_trajectory();
  for (Format fmt : {Format::Csv, Format::Json}) {
    const TrajectoryTable table = parse_trajectory(serialize(tr, FlowConfig{}, fmt), fmt);
    REQUIRE(table.times.size() == tr.size());
    CHECK(table.n == 3);
    for (std::size_t i = 0; i < tr.size(); ++i) {
      CHECK(table.times[i] == tr.times[i]);
      CHECK(table.costs[i] == tr.costs[i]);
      CHECK(table.grad_norms[i] == tr.grad_norms[i]);
      CHECK(table.states[i] == tr.states[i].matrix());
    }
  }
}

TEST_CASE("trajectory csv layout") {
  const std::string csv = serialize(sample_trajectory(), FlowConfig{}, Format::Csv);
  CHECK(csv.rfind("t,f,grad_norm,theta_0_0,theta_0_1,theta_0_2,theta_1_0,", 0) == 0);
  CHECK(csv.find('\r') == std::string::npos);
  const std::string jsonl = serialize(sample_trajectory(), FlowConfig{}, Format::Json);
  const auto head = nlohmann::json::parse(jsonl.substr(0, jsonl.find('\n')));
  CHECK(head["schema_version"] == kSchemaVersion);
  CHECK(head["kind"] == "trajectory");
}

TEST_CASE("malformed trajectories") {
  CHECK_ERROR_CODE(parse_trajectory("", Format::Csv), ErrorCode::IoError);
  CHECK_ERROR_CODE(parse_trajectory("t,f,grad_norm,a,b\n", Format::Csv), ErrorCode::IoError);
  CHECK_ERROR_CODE(parse_trajectory("t,f,grad_norm,a\n0,1\n", Format::Csv), ErrorCode::IoError);
  CHECK_ERROR_CODE(parse_trajectory("{not json\n", Format::Json), ErrorCode::IoError);
}

TEST_CASE("reports carry the same numbers in both formats") {
  const BasinReport basin = run_basin(3, 4, FlowConfig{}, 1);
  same_content(serialize(basin, Format::Json), serialize(basin, Format::Csv));
  const SaddleEscapeReport saddle =
      run_saddle_escape(4, 1, 1e-3, DirectionKind::Unstable, 2, saddle_default_config(), 1);
  same_content(serialize(saddle, Format::Json), serialize(saddle, Format::Csv));
  const LinearizationReport lin = linearize(make_critical(4, 1, std::uint64_t{1}), 2.0);
  same_content(serialize(lin, Format::Json), serialize(lin, Format::Csv));
  const CriticalReport crit = build_critical_report(make_critical(4, 1, std::uint64_t{1}), "haar", 1,
                                                    make_critical(4, 1, std::uint64_t{2}), 5);
  same_content(serialize(crit, Format::Json), serialize(crit, Format::Csv));
  const VerifyReport verify = run_verify({2}, 1, 2);
  same_content(serialize(verify, Format::Json), serialize(verify, Format::Csv));

  const auto doc = nlohmann::json::parse(serialize(lin, Format::Json));
  CHECK(doc["schema_version"] == kSchemaVersion);
  CHECK(doc["verdict"] == "Saddle");
  CHECK(read_csv_pairs(serialize(lin, Format::Csv)).at("schema_version") == "1");
}

TEST_CASE("atomic writes") {
  const fs::path dir = fs::temp_directory_path() / "sonflow_serialization_test";
  fs::create_directories(dir);
  const fs::path target = dir / "out.txt";
  write_atomic(target.string(), "first\n");
  write_atomic(target.string(), "second\n");
  std::ifstream in(target);
  std::string line;
  std::getline(in, line);
  CHECK(line == "second");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++entries;
  CHECK(entries == 1);
  CHECK_ERROR_CODE(write_atomic((dir / "missing" / "x.txt").string(), "x"), ErrorCode::IoError);
  fs::remove_all(dir);
}

TEST_CASE("matrix files") {
  const Matrix headed = parse_matrix("2\n1 0\n0 1\n");
  CHECK(headed == Matrix::Identity(2, 2));
  const Matrix bare = parse_matrix("0 -1\n1 0\n");
  CHECK(bare(0, 1) == -1.0);
  CHECK(parse_matrix("3\n1 0 0\n0 1 0\n0 0 1").isIdentity());
  CHECK_ERROR_CODE(parse_matrix(""), ErrorCode::IoError);
  CHECK_ERROR_CODE(parse_matrix("1 2 3"), ErrorCode::IoError);
  CHECK_ERROR_CODE(parse_matrix("2\n1 x\n0 1"), ErrorCode::IoError);
  CHECK_ERROR_CODE(read_matrix_file("/nonexistent/matrix.txt"), ErrorCode::IoError);
  CHECK(parse_format("csv") == Format::Csv);
  CHECK_FALSE(parse_format("xml").has_value());
}

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sonflow/sonflow.h"

namespace {

enum Exit { kOk = 0, kUsage = 1, kMaxTime = 2, kNumerical = 3, kContract = 4 };

enum class Level { Error = 0, Warn, Info, Debug };
Level g_level = Level::Warn;

void log(Level lvl, const std::string& msg) {
  static const char* names[] = {"error", "warn", "info", "debug"};
  if (lvl <= g_level) std::cerr << "[" << names[static_cast<int>(lvl)] << "] " << msg << "\n";
}

struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg, int exit_code = kUsage)
      : std::runtime_error(msg), code(exit_code) {}
  int code;
};

void check(son_status s) {
  if (s != SON_OK) {
    const std::string msg = son_last_error();
    throw UsageError(msg.empty() ? son_status_string(s) : msg,
                     s == SON_NUMERICAL_FAILURE ? kNumerical : kUsage);
  }
}

struct Common {
  std::optional<std::string> out;
  std::string format = "json";
  std::uint64_t seed = 0;
  int threads = 0;
};

struct FlowFlags {
  std::string method = "lie_rk4";
  std::optional<double> h;
  std::optional<double> t_max;
  std::optional<double> scale;
  std::optional<double> grad_tol;
  std::optional<int> record_stride;

  son_flow_config resolve(bool saddle) const {
    son_flow_config cfg;
    if (saddle) son_saddle_config_default(&cfg);
    else son_flow_config_default(&cfg);
    check(son_parse_method(method.c_str(), &cfg.method));
    if (h) cfg.h = *h;
    if (t_max) cfg.t_max = *t_max;
    if (scale) cfg.scale = *scale;
    if (grad_tol) cfg.grad_tol = *grad_tol;
    if (record_stride) cfg.record_stride = *record_stride;
    check(son_flow_config_validate(&cfg));
    return cfg;
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--out", c.out, "Output path (stdout when absent)");
  app->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--seed", c.seed, "64-bit seed");
  app->add_option("--threads", c.threads, "Worker cap (0: SON_FLOW_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);
}

void add_flow(CLI::App* app, FlowFlags& f) {
  app->add_option("--method", f.method, "lie_euler, lie_rk4 or ambient_rk4_project");
  app->add_option("--h", f.h, "Step size");
  app->add_option("--t-max", f.t_max, "Final time");
  app->add_option("--scale", f.scale, "1 (gradient flow of f) or 2");
  app->add_option("--grad-tol", f.grad_tol, "Gradient norm at which a run stops");
}

son_format format_of(const Common& c) {
  son_format f;
  check(son_parse_format(c.format.c_str(), &f));
  return f;
}

void emit(const Common& c, char* text) {
  const std::string body = text;
  son_string_free(text);
  if (c.out) {
    check(son_write_file(c.out->c_str(), body.c_str()));
  } else {
    std::fwrite(body.data(), 1, body.size(), stdout);
    std::fflush(stdout);
  }
}

int finish_report(const Common& c, son_report* rep, const std::string& what) {
  char* text = nullptr;
  const son_status s = son_report_serialize(rep, format_of(c), &text);
  const int passed = son_report_passed(rep);
  const double wall = son_report_wall_time(rep);
  son_report_free(rep);
  check(s);
  emit(c, text);
  std::ostringstream msg;
  msg << what << ": " << (passed ? "contracts hold" : "contract violation") << ", wall " << wall << " s";
  log(Level::Info, msg.str());
  if (!passed) {
    log(Level::Error, what + ": contract violation");
    return kContract;
  }
  return kOk;
}

std::vector<int> parse_n_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto dash = item.find('-');
    try {
      if (dash != std::string::npos && dash > 0) {
        const int lo = std::stoi(item.substr(0, dash));
        const int hi = std::stoi(item.substr(dash + 1));
        if (hi < lo) throw UsageError("bad range '" + item + "'");
        for (int v = lo; v <= hi; ++v) out.push_back(v);
      } else {
        std::size_t used = 0;
        out.push_back(std::stoi(item, &used));
        if (used != item.size()) throw UsageError("bad dimension '" + item + "'");
      }
    } catch (const std::logic_error&) {
      throw UsageError("bad dimension list '" + text + "'");
    }
  }
  for (int n : out)
    if (n < 2) throw UsageError("dimensions must be at least 2");
  return out;
}

son_critical* build_point(int n, int k, const std::string& frame, std::uint64_t seed) {
  son_critical* c = nullptr;
  if (frame == "identity") check(son_make_critical_frame(n, k, nullptr, &c));
  else check(son_make_critical(n, k, seed, &c));
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient flow on SO(n): simulation, basins, saddles, spectra and checks"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  app.fallthrough();
  std::string level = "warn";
  app.add_option("--log-level", level, "error, warn, info or debug")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));

  Common common;
  FlowFlags flow;
  int n = 0;
  int k = 0;
  int trials = -1;
  double eps = 1e-3;
  std::string kind = "unstable";
  std::string frame = "haar";
  int steps = 0;
  int seeds = 5;
  std::string n_list = "2-6";
  std::optional<std::string> init_file;

  auto* simulate = app.add_subcommand("simulate", "Integrate one trajectory");
  add_common(simulate, common);
  add_flow(simulate, flow);
  simulate->add_option("--n", n, "Dimension");
  simulate->add_option("--init-file", init_file, "Initial rotation (first line n, then n rows)");
  simulate->add_option("--record-stride", flow.record_stride, "Keep every m-th state (0: first and last)");

  auto* basin = app.add_subcommand("basin", "Monte-Carlo basin statistics from Haar starts");
  add_common(basin, common);
  add_flow(basin, flow);
  basin->add_option("--n", n, "Dimension")->required();
  basin->add_option("--trials", trials, "Number of starts (default 500)");

  auto* saddle = app.add_subcommand("saddle", "Perturbed starts near a critical component");
  add_common(saddle, common);
  add_flow(saddle, flow);
  saddle->add_option("--n", n, "Dimension")->required();
  saddle->add_option("--k", k, "Component index")->required();
  saddle->add_option("--eps", eps, "Perturbation size in [0, 0.1]");
  saddle->add_option("--kind", kind, "unstable, kernel or random");
  saddle->add_option("--trials", trials, "Number of trials (default 50)");

  auto* spectrum = app.add_subcommand("spectrum", "Linearization spectrum at a critical point");
  add_common(spectrum, common);
  double spectrum_scale = 2.0;
  spectrum->add_option("--n", n, "Dimension")->required();
  spectrum->add_option("--k", k, "Component index")->required();
  spectrum->add_option("--frame", frame, "identity or haar")->check(CLI::IsMember({"identity", "haar"}));
  spectrum->add_option("--scale", spectrum_scale, "1 or 2");

  auto* critical = app.add_subcommand("critical", "Construct and classify a point of a component");
  add_common(critical, common);
  critical->add_option("--n", n, "Dimension")->required();
  critical->add_option("--k", k, "Component index")->required();
  critical->add_option("--frame", frame, "identity or haar")->check(CLI::IsMember({"identity", "haar"}));
  critical->add_option("--steps", steps, "Samples of a connecting curve to a second point (0: none)")
      ->check(CLI::NonNegativeNumber);

  auto* verify = app.add_subcommand("verify", "Invariant checks and Morse-Bott conditions");
  add_common(verify, common);
  verify->add_option("--n", n_list, "Dimensions, e.g. 2,3,4 or 2-6");
  verify->add_option("--seeds", seeds, "Samples per Morse-Bott condition")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  g_level = level == "error" ? Level::Error : level == "warn" ? Level::Warn : level == "info" ? Level::Info : Level::Debug;

  try {
    format_of(common);
    const int threads = son_resolve_threads(common.threads);

    if (simulate->parsed()) {
      const son_flow_config cfg = flow.resolve(false);
      std::vector<double> theta0;
      if (init_file) {
        int file_n = 0;
        double* data = nullptr;
        check(son_read_matrix_file(init_file->c_str(), &file_n, &data));
        theta0.assign(data, data + static_cast<std::size_t>(file_n) * file_n);
        son_buffer_free(data);
        if (n != 0 && n != file_n) throw UsageError("--n does not match the init file");
        n = file_n;
      } else {
        if (n < 2) throw UsageError("--n must be at least 2 (or pass --init-file)");
        theta0.resize(static_cast<std::size_t>(n) * n);
        check(son_haar_sample(n, common.seed, theta0.data()));
      }
      son_trajectory* tr = nullptr;
      check(son_integrate(n, theta0.data(), &cfg, &tr));
      int component = -1;
      const son_verdict verdict = son_trajectory_verdict(tr, &component);
      char* text = nullptr;
      const son_status s = son_trajectory_serialize(tr, format_of(common), &text);
      const double t_end = son_trajectory_final_time(tr);
      son_trajectory_free(tr);
      check(s);
      emit(common, text);
      std::ostringstream msg;
      msg << "simulate: n=" << n << " final t=" << t_end << " component=" << component;
      log(Level::Info, msg.str());
      if (verdict == SON_CONVERGED) return kOk;
      if (verdict == SON_MAX_TIME_REACHED) {
        log(Level::Warn, "simulate: maximum time reached before convergence");
        return kMaxTime;
      }
      log(Level::Error, "simulate: numerical failure");
      return kNumerical;
    }

    if (basin->parsed()) {
      const son_flow_config cfg = flow.resolve(false);
      if (trials < 0) trials = 500;
      son_report* rep = nullptr;
      check(son_run_basin(n, trials, &cfg, common.seed, threads, &rep));
      return finish_report(common, rep, "basin");
    }

    if (saddle->parsed()) {
      const son_flow_config cfg = flow.resolve(true);
      son_direction dir;
      check(son_parse_direction(kind.c_str(), &dir));
      if (trials < 0) trials = 50;
      son_report* rep = nullptr;
      check(son_run_saddle(n, k, eps, dir, trials, &cfg, common.seed, threads, &rep));
      return finish_report(common, rep, "saddle");
    }

    if (spectrum->parsed()) {
      son_critical* c = build_point(n, k, frame, common.seed);
      son_report* rep = nullptr;
      const son_status s = son_run_spectrum(c, spectrum_scale, &rep);
      son_critical_free(c);
      check(s);
      return finish_report(common, rep, "spectrum");
    }

    if (critical->parsed()) {
      son_critical* c = build_point(n, k, frame, common.seed);
      son_critical* other = nullptr;
      if (steps > 0) {
        const son_status s = son_make_critical(n, k, son_derive_seed(common.seed, 1), &other);
        if (s != SON_OK) son_critical_free(c);
        check(s);
      }
      son_report* rep = nullptr;
      const son_status s = son_run_critical(c, frame.c_str(), common.seed, other, steps, &rep);
      son_critical_free(c);
      son_critical_free(other);
      check(s);
      return finish_report(common, rep, "critical");
    }

    if (verify->parsed()) {
      const std::vector<int> ns = parse_n_list(n_list);
      son_report* rep = nullptr;
      check(son_run_verify(ns.data(), ns.size(), common.seed, seeds, threads, &rep));
      return finish_report(common, rep, "verify");
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code;
  }
  return kUsage;
}

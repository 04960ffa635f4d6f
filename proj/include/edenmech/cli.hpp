#pragma once

// Command-line front end: simulate / verify / bracket / project.
//
// Exit codes: 0 ok, 1 verification failure, 2 usage or config error,
// 3 numerical failure, 4 point off the constraint manifold.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "edenmech/config.hpp"
#include "edenmech/contact.hpp"
#include "edenmech/eden.hpp"
#include "edenmech/nh_dynamics.hpp"
#include "edenmech/verify.hpp"

namespace edenmech::cli {

enum ExitCode : int { kOk = 0, kVerifyFailed = 1, kUsage = 2, kNumerical = 3, kDomainGuard = 4 };

/// Raised for malformed flags that CLI11 cannot see (point syntax, k=v pairs).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto first = cell.find_first_not_of(" \t");
    if (first == std::string::npos) throw UsageError("empty number in '" + text + "'");
    char* end = nullptr;
    const double v = std::strtod(cell.c_str() + first, &end);
    if (end == cell.c_str() + first || std::string(end).find_first_not_of(" \t") != std::string::npos) {
      throw UsageError("bad number '" + cell + "'");
    }
    out.push_back(v);
  }
  return out;
}

/// "q1,..,qn;p1,..,pn;z"
inline PhasePoint parse_point(const std::string& text, std::optional<int> n = std::nullopt) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ';')) parts.push_back(part);
  if (parts.size() != 3) throw UsageError("point must look like \"q1,..,qn;p1,..,pn;z\"");
  const auto q = parse_numbers(parts[0]);
  const auto p = parse_numbers(parts[1]);
  const auto z = parse_numbers(parts[2]);
  if (q.size() != p.size() || z.size() != 1 || q.empty()) throw UsageError("point blocks have inconsistent sizes");
  if (n && static_cast<int>(q.size()) != *n) {
    throw UsageError("point has dimension " + std::to_string(q.size()) + ", system has " + std::to_string(*n));
  }
  return {Eigen::Map<const Vec>(q.data(), static_cast<Eigen::Index>(q.size())),
          Eigen::Map<const Vec>(p.data(), static_cast<Eigen::Index>(p.size())), z[0]};
}

inline std::map<std::string, double> parse_assignments(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("expected key=value, got '" + item + "'");
    const auto values = parse_numbers(item.substr(eq + 1));
    if (values.size() != 1) throw UsageError("expected one number in '" + item + "'");
    out[item.substr(0, eq)] = values[0];
  }
  return out;
}

struct SystemFlags {
  std::string file;
  std::string template_name;
  std::vector<std::string> params;

  void attach(CLI::App* cmd) {
    auto* f = cmd->add_option("--system", file, "SystemConfig JSON file");
    auto* t = cmd->add_option("--template", template_name, "built-in system")
                  ->check(CLI::IsMember(template_names()));
    f->excludes(t);
    cmd->add_option("--param", params, "parameter override k=v (repeatable)");
  }

  bool given() const { return !file.empty() || !template_name.empty(); }

  LoadedSystem load() const {
    const auto overrides = parse_assignments(params);
    if (!file.empty()) return load_system_file(file, overrides);
    if (!template_name.empty()) return load_template(template_name, overrides);
    throw UsageError("one of --system or --template is required");
  }
};

inline std::string fmt17(double v) { return detail::format_double(v); }

inline nlohmann::json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

class App {
 public:
  App(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(std::vector<std::string> args) {
    CLI::App app{"Contact Hamiltonian mechanics with nonholonomic constraints"};
    app.require_subcommand(1);

    auto* simulate = app.add_subcommand("simulate", "integrate the free or constrained field, write CSV");
    SystemFlags sim_sys;
    sim_sys.attach(simulate);
    std::string initial, output;
    double t1 = 0.0, dt = 0.0;
    bool constrained = false, reproject = false;
    simulate->add_option("--initial", initial, "initial point \"q;p;z\"")->required();
    simulate->add_option("--t1", t1, "final time")->required();
    simulate->add_option("--dt", dt, "step size")->required();
    simulate->add_flag("--constrained", constrained, "follow the constrained field");
    simulate->add_flag("--reproject", reproject, "project p onto M after each step");
    simulate->add_option("--output", output, "CSV path ('-' for stdout)")->required();

    auto* verify = app.add_subcommand("verify", "check every identity at sampled points, write JSON report");
    SystemFlags ver_sys;
    ver_sys.attach(verify);
    int samples = 200;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> tols;
    std::string report_path;
    std::optional<double> corrupt;
    verify->add_option("--samples", samples, "sample points per property")->check(CLI::PositiveNumber);
    verify->add_option("--seed", seed, "RNG seed (default $EDENMECH_SEED or 42)");
    verify->add_option("--tol", tols, "tolerance override P<k>=value (repeatable)");
    verify->add_option("--report", report_path, "JSON report path (default stdout)");
    verify->add_option("--corrupt-gamma", corrupt, "negative control: scale the projector under test");

    auto* bracket = app.add_subcommand("bracket", "evaluate the contact or Eden bracket at a point");
    SystemFlags br_sys;
    br_sys.attach(bracket);
    std::string f_src, g_src, point, kind = "contact";
    double member_tol = kDefaultMembershipTol;
    bracket->add_option("--f", f_src, "first observable")->required();
    bracket->add_option("--g", g_src, "second observable")->required();
    bracket->add_option("--point", point, "\"q;p;z\"")->required();
    bracket->add_option("--kind", kind, "contact | eden")->check(CLI::IsMember({"contact", "eden"}));
    bracket->add_option("--tol", member_tol, "membership tolerance for --kind eden");

    auto* project = app.add_subcommand("project", "apply gamma to a point and print its matrix");
    SystemFlags pr_sys;
    pr_sys.attach(project);
    std::string pr_point;
    project->add_option("--point", pr_point, "\"q;p;z\"")->required();

    try {
      std::vector<std::string> reversed(args.rbegin(), args.rend());
      app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
      out_ << app.help();
      return kOk;
    } catch (const CLI::ParseError& e) {
      err_ << "error: " << e.what() << '\n';
      return kUsage;
    }

    LoadedSystem* loaded = nullptr;
    std::optional<LoadedSystem> holder;
    auto load = [&](const SystemFlags& flags) -> int {
      try {
        holder.emplace(flags.load());
        loaded = &*holder;
        return kOk;
      } catch (const Error& e) {
        err_ << "config error: " << e.what() << '\n';
      } catch (const UsageError& e) {
        err_ << "error: " << e.what() << '\n';
      }
      return kUsage;
    };

    try {
      if (*simulate) {
        if (int rc = load(sim_sys)) return rc;
        return cmd_simulate(*loaded, initial, t1, dt, constrained, reproject, output);
      }
      if (*verify) {
        if (int rc = load(ver_sys)) return rc;
        if (!seed) {
          if (const char* env = std::getenv("EDENMECH_SEED")) {
            char* end = nullptr;
            const unsigned long long v = std::strtoull(env, &end, 10);
            if (end == env || *end != '\0') throw UsageError("EDENMECH_SEED must be an unsigned integer");
            seed = v;
          }
        }
        return cmd_verify(*loaded, samples, seed.value_or(42), tols, report_path, corrupt);
      }
      if (*bracket) {
        if (br_sys.given()) {
          if (int rc = load(br_sys)) return rc;
        }
        return cmd_bracket(loaded, f_src, g_src, point, kind, member_tol);
      }
      if (*project) {
        if (int rc = load(pr_sys)) return rc;
        return cmd_project(*loaded, pr_point);
      }
    } catch (const UsageError& e) {
      err_ << "error: " << e.what() << '\n';
      return kUsage;
    } catch (const Error& e) {
      err_ << "error: " << e.what() << '\n';
      if (e.kind() == ErrorKind::NotOnConstraint) return kDomainGuard;
      return is_numerical(e.kind()) ? kNumerical : kUsage;
    }
    return kUsage;
  }

 private:
  int cmd_simulate(const LoadedSystem& ls, const std::string& initial, double t1, double dt, bool constrained,
                   bool reproject, const std::string& output) {
    const MechanicalSystem& sys = ls.system;
    const PhasePoint x0 = parse_point(initial, sys.dim());
    if (!(dt > 0.0)) throw UsageError("--dt must be positive");
    if (!(t1 >= 0.0)) throw UsageError("--t1 must be non-negative");
    if (reproject && !constrained) throw UsageError("--reproject requires --constrained");
    IntegrateOptions opts;
    opts.reproject = reproject;
    const Trajectory traj = integrate(constrained ? FieldKind::Constrained : FieldKind::Free, sys,
                                      hamiltonian(sys), x0, t1, dt, opts);
    if (traj.snapped) err_ << "warning: initial point was projected onto the constraint manifold\n";

    std::ostream* summary = &out_;
    if (output == "-") {
      write_trajectory_csv(out_, sys, traj);
      summary = &err_;
    } else {
      std::ofstream file(output);
      if (!file) throw UsageError("cannot write " + output);
      write_trajectory_csv(file, sys, traj);
    }
    double max_phi = 0.0;
    for (const auto& d : traj.diagnostics) max_phi = std::max(max_phi, d.constraint_residual);
    *summary << "steps " << traj.states.size() - 1 << '\n'
             << "final_H " << fmt17(traj.diagnostics.back().hamiltonian) << '\n'
             << "max_constraint_residual " << fmt17(max_phi) << '\n';
    return kOk;
  }

  int cmd_verify(const LoadedSystem& ls, int samples, std::uint64_t seed, const std::vector<std::string>& tols,
                 const std::string& report_path, std::optional<double> corrupt) {
    VerifyOptions opts;
    opts.samples = samples;
    opts.seed = seed;
    opts.mechanical_observables = ls.mechanical_observables;
    opts.tolerance_overrides = parse_assignments(tols);
    for (const auto& [id, _] : opts.tolerance_overrides) {
      if (id.size() < 2 || id[0] != 'P' || id.find_first_not_of("0123456789", 1) != std::string::npos ||
          std::stoi(id.substr(1)) < 1 || std::stoi(id.substr(1)) > 14) {
        throw UsageError("unknown property id '" + id + "'");
      }
    }
    if (corrupt) opts.projector_under_test = corrupted_projector(*corrupt);
    const VerifyReport report = run_verify(ls.system, opts);
    const std::string text = to_json(report).dump(2) + "\n";
    if (report_path.empty()) {
      out_ << text;
    } else {
      std::ofstream file(report_path, std::ios::binary);
      if (!file) throw UsageError("cannot write " + report_path);
      file << text;
      for (const auto& p : report.properties) {
        out_ << (p.pass ? "PASS " : "FAIL ") << p.property_id << "  max_residual=" << fmt17(p.max_residual)
             << "  tol=" << fmt17(p.tolerance) << "  " << p.description << '\n';
      }
    }
    return report.pass ? kOk : kVerifyFailed;
  }

  int cmd_bracket(const LoadedSystem* ls, const std::string& f_src, const std::string& g_src,
                  const std::string& point_text, const std::string& kind, double tol) {
    if (kind == "eden" && !ls) throw UsageError("--kind eden needs --system or --template");
    const PhasePoint x = ls ? parse_point(point_text, ls->system.dim()) : parse_point(point_text);
    const int n = x.dim();
    const std::map<std::string, double> params = ls ? ls->system.params() : std::map<std::string, double>{};
    const Observable f = Observable::parse(f_src, n, params);
    const Observable g = Observable::parse(g_src, n, params);
    const double value = kind == "eden" ? eden_bracket(ls->system, f, g, x, tol) : contact_bracket(f, g, x);
    out_ << fmt17(value) << '\n';
    return kOk;
  }

  int cmd_project(const LoadedSystem& ls, const std::string& point_text) {
    const PhasePoint x = parse_point(point_text, ls.system.dim());
    const PhasePoint y = project_point(ls.system, x);
    const Mat p = projector(ls.system, x.q).P;
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < p.rows(); ++i) rows.push_back(vec_json(p.row(i).transpose()));
    const nlohmann::json doc = {{"q", vec_json(y.q)}, {"p", vec_json(y.p)}, {"z", y.z}, {"P", rows}};
    out_ << doc.dump() << '\n';
    return kOk;
  }

  std::ostream& out_;
  std::ostream& err_;
};

/// Entry point shared by the binary and the in-process tests; `args`
/// excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return App(out, err).run(args);
}

}  // namespace edenmech::cli

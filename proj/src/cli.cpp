#include "saltus/cli.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "saltus/errors.hpp"
#include "saltus/mollify.hpp"
#include "saltus/qde.hpp"
#include "saltus/rs_engine.hpp"
#include "saltus/star_engine.hpp"
#include "saltus/variation.hpp"

namespace saltus::cli {

using nlohmann::json;

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& bytes, const std::string& path) {
  try {
    return json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw DocumentError(ErrorKind::Schema, "", path + " is not valid JSON: " + e.what());
  }
}

std::string hex(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out << text;
}

struct Args {
  std::string f, g, y, spec, out;
  double tol = 1e-9;
  double series_tol = 1e-12;
  int max_depth = 24;
  double eps = 0.0;
  std::string eps_grid;
  double p = 2.0;
};

class Session {
 public:
  explicit Session(const Args& a) : args(a) {
    opt.tol = a.tol;
    opt.series_tol = a.series_tol;
    opt.max_depth = a.max_depth;
  }

  const Args& args;
  Options opt;
  json inputs = json::object();

  json load(const std::string& role, const std::string& path) {
    if (path.empty()) fail(ErrorKind::Domain, "missing --" + role);
    const std::string bytes = read_file(path);
    inputs[role] = {{"path", path}, {"fnv1a64", hex(fnv1a64(bytes))}};
    return parse_json(bytes, path);
  }

  RepFunc func(const std::string& role, const std::string& path) { return make_func(load(role, path)); }

  std::vector<double> grid(const std::string& fallback) const {
    const std::string text = args.eps_grid.empty() ? fallback : args.eps_grid;
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(item, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != item.size()) fail(ErrorKind::Domain, "bad --eps-grid entry '" + item + "'");
      out.push_back(v);
    }
    if (out.empty()) fail(ErrorKind::Domain, "empty --eps-grid");
    return out;
  }
};

json two_sided(const TwoSided& t) {
  return {{"lhs", t.lhs}, {"rhs", t.rhs}, {"difference", t.lhs - t.rhs}};
}

int cmd_variation(Session& s, json& r) {
  const RepFunc f = s.func("f", s.args.f);
  const VariationResult v = total_variation(f, s.opt);
  r["value"] = v.value;
  r["error_bound"] = std::max(v.enclosure.hi - v.value, v.value - v.enclosure.lo);
  r["diagnostics"] = {{"continuous", v.continuous}, {"discrete", v.discrete}};
  if (v.infinite_suspected) r["status"] = "INFINITE_SUSPECTED";
  return kOk;
}

int cmd_rs_int(Session& s, json& r) {
  const RepFunc f = s.func("f", s.args.f);
  const RepFunc g = s.func("g", s.args.g);
  const Enclosure e = rs_integral(f, g, s.opt);
  r["value"] = e.value();
  r["error_bound"] = e.error();
  r["diagnostics"] = {{"depth", e.depth}, {"lo", e.lo}, {"hi", e.hi}};
  if (e.status == EnclosureStatus::Budget) {
    r["status"] = "BUDGET";
    return kBudget;
  }
  return kOk;
}

int cmd_star_int(Session& s, json& r) {
  const RepFunc f = s.func("f", s.args.f);
  const RepFunc g = s.func("g", s.args.g);
  const StarResult v = star_integral(f, g, s.opt);
  r["value"] = v.value;
  r["error_bound"] = v.error_bound;
  r["diagnostics"] = {{"rs_part", v.rs_part},           {"boundary_left", v.boundary_left},
                      {"interior_sum", v.interior_sum}, {"boundary_right", v.boundary_right},
                      {"depth", v.depth},               {"series_terms", v.series_terms}};
  return kOk;
}

int cmd_by_parts(Session& s, json& r) {
  const RepFunc f = s.func("f", s.args.f);
  const RepFunc g = s.func("g", s.args.g);
  const Residual v = star_by_parts_residual(f, g, s.opt);
  r["value"] = v.residual;
  r["error_bound"] = v.bound;
  r["diagnostics"] = {{"lhs", v.lhs},
                      {"boundary", v.boundary},
                      {"correction", v.correction},
                      {"holds", std::abs(v.residual) <= v.bound}};
  return kOk;
}

int cmd_fubini(Session& s, json& r) {
  const RepFunc f = s.func("f", s.args.f);
  const RepFunc g = s.func("g", s.args.g);
  const json doc = s.load("spec", s.args.spec);
  if (!doc.is_object() || !doc.contains("terms") || !doc.at("terms").is_array())
    throw DocumentError(ErrorKind::Schema, "/terms", "kernel document needs a 'terms' array");
  SeparableKernel h;
  for (std::size_t i = 0; i < doc.at("terms").size(); ++i) {
    const json& t = doc.at("terms")[i];
    const std::string ptr = "/terms/" + std::to_string(i);
    if (!t.is_object() || !t.contains("u") || !t.contains("v"))
      throw DocumentError(ErrorKind::Schema, ptr, "each term needs 'u' and 'v'");
    auto part = [&](const char* key) {
      try {
        return make_func(t.at(key));
      } catch (const DocumentError& e) {
        throw DocumentError(e.kind(), ptr + "/" + key + e.pointer(), std::string("invalid kernel factor (") + e.what() + ")");
      }
    };
    h.terms.emplace_back(part("u"), part("v"));
  }
  const TwoSided v = star_fubini(h, f, g, s.opt);
  r["value"] = json::array({v.lhs, v.rhs});
  r["error_bound"] = v.bound;
  r["diagnostics"] = two_sided(v);
  r["diagnostics"]["holds"] = std::abs(v.lhs - v.rhs) <= v.bound;
  return kOk;
}

int cmd_inequality(Session& s, json& r, bool holder) {
  const RepFunc x = s.func("f", s.args.f);
  const RepFunc y = s.func("y", s.args.y);
  const RepFunc g = s.func("g", s.args.g);
  const TwoSided v = holder ? holder_check(x, y, g, s.args.p, s.opt) : minkowski_check(x, y, g, s.args.p, s.opt);
  r["value"] = json::array({v.lhs, v.rhs});
  r["error_bound"] = v.bound;
  r["diagnostics"] = two_sided(v);
  r["diagnostics"]["p"] = s.args.p;
  r["diagnostics"]["holds"] = v.lhs <= v.rhs + v.bound;
  return kOk;
}

int cmd_norm_witness(Session& s, json& r) {
  const RepFunc g = s.func("g", s.args.g);
  const double eps = s.args.eps > 0.0 ? s.args.eps : 1e-3;
  const NormWitness w = functional_norm_witness(g, eps, s.opt);
  r["value"] = w.norm_est;
  r["error_bound"] = w.error_bound;
  r["diagnostics"] = {{"variation", w.variation}, {"eps", eps}, {"partition_points", w.partition.size()}};
  if (!s.args.out.empty()) write_text(s.args.out, w.witness.to_json().dump(2) + "\n");
  return kOk;
}

int cmd_mollify(Session& s, json& r) {
  const RepFunc f = s.func("f", s.args.f);
  if (!(s.args.eps > 0.0)) fail(ErrorKind::Domain, "mollify needs --eps > 0");
  const RepFunc m = mollify(f, s.args.eps, s.opt);
  r["value"] = m.to_json();
  r["error_bound"] = 0.0;
  r["diagnostics"] = {{"eps", s.args.eps},
                      {"pieces", m.pieces().size()},
                      {"sup_deviation", sup_deviation(f, m, s.args.eps)}};
  if (!s.args.out.empty()) write_text(s.args.out, m.to_json().dump(2) + "\n");
  return kOk;
}

int cmd_mollify_report(Session& s, json& r) {
  const RepFunc x = s.func("f", s.args.f);
  const RepFunc g = s.func("g", s.args.g);
  const MollifyReport m = mollify_convergence_report(x, g, s.grid("0.1,0.05,0.025,0.0125"), s.opt);
  json rows = json::array();
  std::ostringstream csv;
  csv << "eps,integral,error_bound,int_dev,var_dev,sup_dev,var_phi\n" << std::setprecision(17);
  double worst = 0.0;
  for (const auto& row : m.rows) {
    rows.push_back({{"eps", row.eps},
                    {"integral", row.integral},
                    {"error_bound", row.error_bound},
                    {"int_dev", row.int_dev},
                    {"var_dev", row.var_dev},
                    {"sup_dev", row.sup_dev},
                    {"var_phi", row.var_phi}});
    csv << row.eps << "," << row.integral << "," << row.error_bound << "," << row.int_dev << "," << row.var_dev << ","
        << row.sup_dev << "," << row.var_phi << "\n";
    worst = std::max(worst, row.error_bound);
  }
  r["value"] = m.reference;
  r["error_bound"] = worst;
  r["diagnostics"] = {{"shared_limit", m.shared_limit},
                      {"variation_g", m.variation_g},
                      {"rows", rows},
                      {"overrides_dropped", !x.overrides().empty() || !g.overrides().empty()}};
  if (!s.args.out.empty()) write_text(s.args.out, csv.str());
  return kOk;
}

OdeProblem load_problem(Session& s) { return parse_ode_problem(s.load("spec", s.args.spec)); }

int cmd_ode_solve(Session& s, json& r) {
  const OdeProblem pr = load_problem(s);
  const QdeSystem sys = build_system(pr.coeffs, pr.gamma, s.opt);
  const Trajectory tr = solve_cauchy(sys, pr.tol);
  r["value"] = tr.x_derivs.back();
  r["error_bound"] = pr.tol;
  r["diagnostics"] = {{"error_bound_kind", "integrator local tolerance"},
                      {"condition", to_string(pr.coeffs.condition_class)},
                      {"events", tr.events},
                      {"grid_points", tr.grid.size()},
                      {"steps", tr.steps}};
  if (!s.args.out.empty()) {
    std::ostringstream csv;
    tr.write_csv(csv);
    write_text(s.args.out, csv.str());
  }
  return kOk;
}

int cmd_delta(Session& s, json& r) {
  const OdeProblem pr = load_problem(s);
  const DeltaReport d = delta_correctness(pr.coeffs, pr.gamma, s.grid("0.1,0.05,0.025"), pr.tol, 1001, s.opt);
  json devs = json::array();
  json rows = json::array();
  std::ostringstream csv;
  csv << "eps,deviation,argmax\n" << std::setprecision(17);
  bool decreasing = true;
  for (std::size_t i = 0; i < d.rows.size(); ++i) {
    const auto& row = d.rows[i];
    devs.push_back(row.deviation);
    rows.push_back({{"eps", row.eps}, {"deviation", row.deviation}, {"argmax", row.argmax}});
    csv << row.eps << "," << row.deviation << "," << row.argmax << "\n";
    if (i > 0) decreasing = decreasing && row.deviation < d.rows[i - 1].deviation;
  }
  r["value"] = devs;
  r["error_bound"] = pr.tol;
  r["diagnostics"] = {{"error_bound_kind", "integrator local tolerance"},
                      {"events", d.events},
                      {"rows", rows},
                      {"strictly_decreasing", decreasing}};
  if (!s.args.out.empty()) write_text(s.args.out, csv.str());
  return kOk;
}

int cmd_step_approx(Session& s, json& r) {
  const RepFunc f = s.func("f", s.args.f);
  if (!(s.args.eps > 0.0)) fail(ErrorKind::Domain, "step-approx needs --eps > 0");
  const StepFunc st = step_approx(f, s.args.eps);
  r["value"] = {{"breakpoints", st.breakpoints}, {"values", st.values}, {"node_values", st.node_values}};
  r["error_bound"] = s.args.eps;
  r["diagnostics"] = {{"steps", st.values.size()}};
  if (!s.args.out.empty()) write_text(s.args.out, st.to_repfunc({&f}).to_json().dump(2) + "\n");
  return kOk;
}

}  // namespace

RepFunc parse_func_file(const std::string& path) { return make_func(parse_json(read_file(path), path)); }

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stieltjes *-integrals, bounded variation and measure-coefficient ODEs"};
  app.require_subcommand(1);
  Args args;
  struct Spec {
    const char* name;
    const char* help;
    int (*fn)(Session&, json&);
    bool f, g, y, spec, eps, grid, p;
  };
  static const Spec specs[] = {
      {"variation", "total variation of --f", cmd_variation, true, false, false, false, false, false, false},
      {"rs-int", "Riemann-Stieltjes integral of --f against --g", cmd_rs_int, true, true, false, false, false, false,
       false},
      {"star-int", "*-integral of --f against --g", cmd_star_int, true, true, false, false, false, false, false},
      {"by-parts-check", "residual of *-integration by parts", cmd_by_parts, true, true, false, false, false, false,
       false},
      {"fubini-check", "both iterated *-integrals of the kernel in --spec", cmd_fubini, true, true, false, true, false,
       false, false},
      {"holder", "Holder inequality for --f, --y against --g", nullptr, true, true, true, false, false, false, true},
      {"minkowski", "Minkowski inequality for --f, --y against --g", nullptr, true, true, true, false, false, false,
       true},
      {"norm-witness", "extremal witness for the functional of --g", cmd_norm_witness, false, true, false, false, true,
       false, false},
      {"mollify", "one-sided eps-averaging of --f", cmd_mollify, true, false, false, false, true, false, false},
      {"mollify-report", "convergence of mollified integrals", cmd_mollify_report, true, true, false, false, false, true,
       false},
      {"ode-solve", "solve the measure-coefficient problem in --spec", cmd_ode_solve, false, false, false, true, false,
       false, false},
      {"delta-correct", "mollified problems against the measure solution", cmd_delta, false, false, false, true, false,
       true, false},
      {"step-approx", "step function within --eps of --f", cmd_step_approx, true, false, false, false, true, false,
       false},
  };
  for (const auto& sp : specs) {
    CLI::App* sub = app.add_subcommand(sp.name, sp.help);
    if (sp.f) sub->add_option("--f", args.f, "function document");
    if (sp.g) sub->add_option("--g", args.g, "integrator document");
    if (sp.y) sub->add_option("--y", args.y, "second function document");
    if (sp.spec) sub->add_option("--spec", args.spec, "problem or kernel document");
    if (sp.eps) sub->add_option("--eps", args.eps, "eps");
    if (sp.grid) sub->add_option("--eps-grid", args.eps_grid, "comma separated, strictly decreasing");
    if (sp.p) sub->add_option("--p", args.p, "exponent p > 1")->capture_default_str();
    sub->add_option("--tol", args.tol, "quadrature tolerance")->capture_default_str();
    sub->add_option("--series-tol", args.series_tol, "series truncation tolerance")->capture_default_str();
    sub->add_option("--max-depth", args.max_depth, "refinement depth cap")->capture_default_str();
    sub->add_option("--out", args.out, "output file");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    out << json{{"status", "INVALID"}, {"error", "Usage"}, {"message", e.what()}}.dump(2) << "\n";
    return kInvalid;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  const Spec* spec = nullptr;
  for (const auto& sp : specs)
    if (name == sp.name) spec = &sp;

  Session session(args);
  json r = {{"command", name}, {"status", "OK"}};
  int code = kOk;
  try {
    if (name == "holder" || name == "minkowski") {
      code = cmd_inequality(session, r, name == "holder");
    } else {
      code = spec->fn(session, r);
    }
  } catch (const NonexistentError& e) {
    r["status"] = "NONEXISTENT";
    r["loc"] = e.location();
    r["reason"] = e.reason();
    r["message"] = e.what();
    code = kNonexistent;
  } catch (const Error& e) {
    const bool budget = e.kind() == ErrorKind::BudgetExceeded;
    r["status"] = budget ? "BUDGET" : "INVALID";
    r["error"] = to_string(e.kind());
    r["message"] = e.what();
    if (const auto* d = dynamic_cast<const DocumentError*>(&e)) r["pointer"] = d->pointer();
    code = budget ? kBudget : kInvalid;
  }
  r["inputs"] = session.inputs;
  if (code != kOk) err << name << ": " << r.value("message", std::string(r["status"])) << "\n";
  const std::string text = r.dump(2) + "\n";
  out << text;
  const bool writes_artifact = name == "norm-witness" || name == "mollify" || name == "mollify-report" ||
                               name == "ode-solve" || name == "delta-correct" || name == "step-approx";
  if (!args.out.empty() && !writes_artifact && code == kOk) write_text(args.out, text);
  return code;
}

}  // namespace saltus::cli

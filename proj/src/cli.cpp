#include "ris/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cctype>
#include <cstdlib>
#include <mutex>
#include <set>
#include <thread>

namespace ris::cli {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kKeys = {"problem", "scheme", "N",         "h",         "eta",     "delta",
                                        "mu",      "mu-rule", "ratio",    "alpha",     "tol",     "max-outer",
                                        "max-inner", "z-param", "out",    "formats"};

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitCapHit = 2;
constexpr int kExitMismatch = 3;

class MuRuleParser {
 public:
  MuRuleParser(const std::string& s, double tau) : s_(s), tau_(tau) {}

  double parse() {
    const double v = product();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + s_.substr(pos_) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParameterError("mu-rule '" + s_ + "': " + what);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(const std::string& tok) {
    skip();
    if (s_.compare(pos_, tok.size(), tok) == 0) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }
  double product() {
    double v = factor();
    while (eat("*")) v *= factor();
    return v;
  }
  double factor() {
    skip();
    if (eat("tau")) return tau_;
    if (eat("sqrt")) {
      if (!eat("(")) fail("expected '(' after sqrt");
      const double v = product();
      if (!eat(")")) fail("expected ')'");
      if (v < 0.0) fail("sqrt of a negative value");
      return std::sqrt(v);
    }
    if (eat("(")) {
      const double v = product();
      if (!eat(")")) fail("expected ')'");
      return v;
    }
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail(pos_ < s_.size() ? "unexpected '" + s_.substr(pos_) + "'" : "unexpected end");
    pos_ += static_cast<size_t>(end - begin);
    return v;
  }

  const std::string& s_;
  double tau_;
  size_t pos_ = 0;
};

double as_number(const std::string& key, const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    char* end = nullptr;
    const double d = std::strtod(s.c_str(), &end);
    if (!s.empty() && end == s.c_str() + s.size()) return d;
  }
  throw ParameterError("parameter '" + key + "' expects a number");
}

long as_integer(const std::string& key, const json& v) {
  const double d = as_number(key, v);
  if (d != std::floor(d) || std::abs(d) > 1e15) throw ParameterError("parameter '" + key + "' expects an integer");
  return static_cast<long>(d);
}

std::string as_string(const std::string& key, const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return v.dump();
  throw ParameterError("parameter '" + key + "' expects a string");
}

/// Interprets a flag value: numbers become JSON numbers, anything else a string.
json flag_value(const std::string& s) {
  char* end = nullptr;
  const double d = std::strtod(s.c_str(), &end);
  if (!s.empty() && end == s.c_str() + s.size()) return d;
  return s;
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char ch : s) out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-') ? ch : '_';
  return out;
}

fs::path output_root() {
  const char* env = std::getenv("RIS_OUTPUT_DIR");
  return env && *env ? fs::path(env) : fs::path("ris_output");
}

bool has_format(const RunConfig& cfg, const std::string& f) {
  return std::find(cfg.formats.begin(), cfg.formats.end(), f) != cfg.formats.end();
}

std::set<std::string> relevant_keys(const std::string& scheme) {
  std::set<std::string> k = {"problem", "scheme", "tol", "out", "formats"};
  if (scheme == "global") k.insert("N");
  if (scheme == "viscous") k.insert({"N", "mu", "mu-rule"});
  if (scheme == "visco-energetic") k.insert({"N", "ratio"});
  if (scheme == "local-min") k.insert({"h", "max-outer"});
  if (scheme == "relaxed") k.insert({"N", "eta", "delta", "max-inner", "z-param"});
  if (scheme == "alternate") k.insert({"N", "eta", "delta", "max-inner"});
  if (scheme == "exact51") k.insert("alpha");
  return k;
}

std::vector<std::string> present_keys(const RunConfig& c) {
  std::vector<std::string> k;
  if (c.N) k.push_back("N");
  if (c.h) k.push_back("h");
  if (c.eta) k.push_back("eta");
  if (c.delta) k.push_back("delta");
  if (c.mu) k.push_back("mu");
  if (c.muRule) k.push_back("mu-rule");
  if (c.ratio) k.push_back("ratio");
  if (c.alpha) k.push_back("alpha");
  if (c.maxOuter) k.push_back("max-outer");
  if (c.maxInner) k.push_back("max-inner");
  if (c.zParam) k.push_back("z-param");
  return k;
}

void validate_keys(const RunConfig& cfg) {
  if (cfg.problem.empty()) throw ParameterError("missing parameter problem");
  if (cfg.scheme.empty()) throw ParameterError("missing parameter scheme");
  if (cfg.scheme != "exact51") scheme_from_string(cfg.scheme);
  const auto ok = relevant_keys(cfg.scheme);
  for (const auto& k : present_keys(cfg)) {
    if (!ok.count(k)) throw ParameterError("parameter '" + k + "' does not apply to scheme " + cfg.scheme);
  }
  for (const auto& f : cfg.formats) {
    if (f != "csv" && f != "json") throw ParameterError("unknown format '" + f + "'");
  }
}

struct Solved {
  RunTrace trace;
  ParametrizedCurve curve;
  json diagnostics;
};

json diagnostics_json(const Problem& pr, const RunConfig& cfg, const ParametrizedCurve& curve) {
  json j;
  if (*curve.scheme == SchemeKind::AlternateMin) {
    j = to_json(diagnose(curve, *pr.coupled, pr.dissipation, pr.metricV));
  } else {
    j = to_json(diagnose(curve, pr.model, pr.dissipation, pr.metricV));
  }
  if (cfg.zParam) j.update(to_json(fixed_eta_report(curve, pr.model, pr.dissipation, pr.metricZ, pr.metricV)));
  return j;
}

ParametrizedCurve curve_of(const RunTrace& tr, const Problem& pr, const RunConfig& cfg) {
  switch (tr.kind) {
    case SchemeKind::LocalMin: return parametrize_local_min(tr, pr.metricV);
    case SchemeKind::AlternateMin: return parametrize_alternate(tr, pr.metricV, pr.metricU);
    default: return cfg.zParam ? parametrize_relaxed(tr, pr.metricZ, true) : parametrize_relaxed(tr, pr.metricV);
  }
}

RunTrace solve(const Problem& pr, const SchemeConfig& sc) {
  switch (sc.kind) {
    case SchemeKind::GlobalIncremental: return run_global_incremental(pr.model, pr.dissipation, pr.z0, sc);
    case SchemeKind::Viscous:
    case SchemeKind::ViscoEnergetic: return run_viscous(pr.model, pr.dissipation, pr.metricV, pr.z0, sc);
    case SchemeKind::LocalMin: return run_local_min(pr.model, pr.dissipation, pr.metricV, pr.z0, sc);
    case SchemeKind::RelaxedLocalMin: return run_relaxed_local_min(pr.model, pr.dissipation, pr.metricV, pr.z0, sc);
    case SchemeKind::AlternateMin:
      return run_alternate_min(*pr.coupled, pr.dissipation, pr.metricV, pr.metricU, pr.z0, sc);
  }
  throw KindError("unknown scheme kind");
}

double energy_of(const Problem& pr, const TraceNode& n) {
  return pr.coupled && n.u.size() > 0 ? pr.coupled->value(n.t, n.u, n.z) : pr.model.value(n.t, n.z);
}

ParametrizedCurve exact_curve(const Problem& pr, const RunConfig& cfg) {
  const auto [name, params] = detail::parse_problem_id(pr.id);
  if (name != "toy51") throw ParameterError("scheme exact51 requires problem toy51");
  if (!cfg.alpha) throw ParameterError("missing parameter alpha");
  const double kappa = params.count("kappa") ? params.at("kappa") : 1.0;
  return exact_solutions_51(kappa, *cfg.alpha, pr.T());
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a)); }

/// Compares two JSON documents; numbers within 1e-12 relative.
bool json_close(const json& a, const json& b, std::string& where) {
  if (a.is_number() && b.is_number()) {
    if (close(a.get<double>(), b.get<double>())) return true;
    where = a.dump() + " vs " + b.dump();
    return false;
  }
  if (a.is_object() && b.is_object()) {
    if (a.size() != b.size()) {
      where = "key sets differ";
      return false;
    }
    for (auto it = a.begin(); it != a.end(); ++it) {
      if (!b.contains(it.key())) {
        where = "missing key " + it.key();
        return false;
      }
      if (!json_close(it.value(), b.at(it.key()), where)) {
        where = it.key() + ": " + where;
        return false;
      }
    }
    return true;
  }
  if (a == b) return true;
  where = a.dump() + " vs " + b.dump();
  return false;
}

bool curves_match(const ParametrizedCurve& a, const ParametrizedCurve& b, std::string& where) {
  if (a.nodes() != b.nodes()) {
    where = "node count";
    return false;
  }
  for (size_t j = 0; j < a.nodes(); ++j) {
    bool ok = a.k[j] == b.k[j] && a.i[j] == b.i[j] && close(a.s[j], b.s[j]) && close(a.t[j], b.t[j]) &&
              a.z[j].size() == b.z[j].size() && a.has_u() == b.has_u();
    for (Eigen::Index q = 0; ok && q < a.z[j].size(); ++q) ok = close(a.z[j][q], b.z[j][q]);
    if (ok && a.has_u()) {
      for (Eigen::Index q = 0; ok && q < a.u[j].size(); ++q) ok = close(a.u[j][q], b.u[j][q]);
    }
    if (ok && j > 0) {
      ok = a.segKind[j - 1] == b.segKind[j - 1] && close(a.sigmaBar[j - 1], b.sigmaBar[j - 1]) &&
           close(a.lambda[j - 1], b.lambda[j - 1]);
    }
    if (!ok) {
      where = "curve node " + std::to_string(j);
      return false;
    }
  }
  return true;
}

}  // namespace

double eval_mu_rule(const std::string& expr, double tau) { return MuRuleParser(expr, tau).parse(); }

void set_param(RunConfig& cfg, const std::string& key, const json& v) {
  if (key == "problem") cfg.problem = as_string(key, v);
  else if (key == "scheme") cfg.scheme = as_string(key, v);
  else if (key == "N") cfg.N = static_cast<int>(as_integer(key, v));
  else if (key == "h") cfg.h = as_number(key, v);
  else if (key == "eta") cfg.eta = as_number(key, v);
  else if (key == "delta") cfg.delta = as_number(key, v);
  else if (key == "mu") cfg.mu = as_number(key, v);
  else if (key == "mu-rule") cfg.muRule = as_string(key, v);
  else if (key == "ratio") cfg.ratio = as_number(key, v);
  else if (key == "alpha") {
    if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "infinity")) {
      cfg.alpha = std::numeric_limits<double>::infinity();
    } else {
      cfg.alpha = as_number(key, v);
    }
  } else if (key == "tol") cfg.tol = as_number(key, v);
  else if (key == "max-outer") cfg.maxOuter = as_integer(key, v);
  else if (key == "max-inner") cfg.maxInner = static_cast<int>(as_integer(key, v));
  else if (key == "z-param") {
    if (!v.is_boolean()) throw ParameterError("parameter 'z-param' expects true or false");
    cfg.zParam = v.get<bool>();
  } else if (key == "out") cfg.out = as_string(key, v);
  else if (key == "formats") {
    cfg.formats.clear();
    if (v.is_array()) {
      for (const auto& f : v) cfg.formats.push_back(as_string(key, f));
    } else {
      std::stringstream ss(as_string(key, v));
      std::string f;
      while (std::getline(ss, f, ',')) cfg.formats.push_back(f);
    }
  } else {
    throw ParameterError("unknown parameter '" + key + "'");
  }
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ParameterError("config must be a JSON object");
  RunConfig cfg;
  for (auto it = j.begin(); it != j.end(); ++it) set_param(cfg, it.key(), it.value());
  return cfg;
}

json config_to_json(const RunConfig& c) {
  json j{{"problem", c.problem}, {"scheme", c.scheme}, {"formats", c.formats}};
  if (c.N) j["N"] = *c.N;
  if (c.h) j["h"] = *c.h;
  if (c.eta) j["eta"] = *c.eta;
  if (c.delta) j["delta"] = *c.delta;
  if (c.mu) j["mu"] = *c.mu;
  if (c.muRule) j["mu-rule"] = *c.muRule;
  if (c.ratio) j["ratio"] = *c.ratio;
  if (c.alpha) j["alpha"] = std::isinf(*c.alpha) ? json("inf") : json(*c.alpha);
  if (c.tol) j["tol"] = *c.tol;
  if (c.maxOuter) j["max-outer"] = *c.maxOuter;
  if (c.maxInner) j["max-inner"] = *c.maxInner;
  if (c.zParam) j["z-param"] = true;
  return j;
}

SchemeConfig to_scheme_config(const RunConfig& cfg, const Problem& pr) {
  validate_keys(cfg);
  if (cfg.scheme == "exact51") throw ParameterError("exact51 is not a solver scheme");
  SchemeConfig sc;
  sc.kind = scheme_from_string(cfg.scheme);
  auto need = [](const auto& opt, const char* name) {
    if (!opt) throw ParameterError(std::string("missing parameter ") + name);
    return *opt;
  };
  if (cfg.tol) sc.inner.tol = *cfg.tol;
  switch (sc.kind) {
    case SchemeKind::GlobalIncremental:
      sc.N = need(cfg.N, "N");
      if (pr.model.dim() > 3) throw UnsupportedDimension("scheme global supports dimension <= 3");
      break;
    case SchemeKind::Viscous:
      sc.N = need(cfg.N, "N");
      if (cfg.mu && cfg.muRule) throw ParameterError("give either mu or mu-rule, not both");
      if (!cfg.mu && !cfg.muRule) throw ParameterError("missing parameter mu");
      if (sc.N < 1) throw ParameterError("parameter 'N' must be >= 1");
      sc.mu = cfg.mu ? *cfg.mu : eval_mu_rule(*cfg.muRule, pr.T() / sc.N);
      break;
    case SchemeKind::ViscoEnergetic:
      sc.N = need(cfg.N, "N");
      sc.mu = need(cfg.ratio, "ratio");
      break;
    case SchemeKind::LocalMin:
      sc.h = need(cfg.h, "h");
      if (cfg.maxOuter) sc.maxOuterIters = *cfg.maxOuter;
      break;
    case SchemeKind::RelaxedLocalMin:
    case SchemeKind::AlternateMin:
      sc.N = need(cfg.N, "N");
      sc.eta = need(cfg.eta, "eta");
      sc.delta = need(cfg.delta, "delta");
      if (cfg.maxInner) sc.maxInnerIters = *cfg.maxInner;
      sc.zParametrization = cfg.zParam;
      if (sc.kind == SchemeKind::AlternateMin && !pr.is_coupled()) {
        throw ParameterError("scheme alternate requires a coupled problem");
      }
      break;
  }
  sc.validate();
  return sc;
}

RunOutcome execute_run(const RunConfig& cfg, const fs::path& dir) {
  validate_keys(cfg);
  const Problem pr = make_problem(cfg.problem);
  json run{{"config", config_to_json(cfg)}};
  RunOutcome outcome;
  outcome.dir = dir;
  if (cfg.scheme == "exact51") {
    ParametrizedCurve c = exact_curve(pr, cfg);
    const auto cls = classify_bv_solution(c, pr.model, pr.dissipation, pr.metricV, 1e-8, pr.z0);
    run["terminated"] = to_string(Termination::ReachedT);
    if (has_format(cfg, "csv")) write_file_atomic(dir / "curve.csv", curve_to_csv(c));
    if (has_format(cfg, "json")) write_file_atomic(dir / "diagnostics.json", dump_json(to_json(cls)));
    write_file_atomic(dir / "run.json", dump_json(run));
    outcome.report.S = c.S();
    return outcome;
  }
  const SchemeConfig sc = to_scheme_config(cfg, pr);
  RunTrace tr = solve(pr, sc);
  const ParametrizedCurve curve = curve_of(tr, pr, cfg);
  const json diag = diagnostics_json(pr, cfg, curve);
  run["terminated"] = to_string(tr.terminated);
  run["steps"] = tr.steps();
  run["minimizations"] = tr.minimizations();
  if (has_format(cfg, "csv")) {
    write_file_atomic(dir / "trace.csv", trace_to_csv(tr));
    write_file_atomic(dir / "curve.csv", curve_to_csv(curve));
  }
  if (has_format(cfg, "json")) write_file_atomic(dir / "diagnostics.json", dump_json(diag));
  write_file_atomic(dir / "run.json", dump_json(run));
  outcome.terminated = tr.terminated;
  outcome.report = pr.coupled && tr.kind == SchemeKind::AlternateMin
                       ? diagnose(curve, *pr.coupled, pr.dissipation, pr.metricV)
                       : diagnose(curve, pr.model, pr.dissipation, pr.metricV);
  outcome.jump = largest_step(tr, pr.metricV);
  outcome.steps = tr.steps();
  outcome.minimizations = tr.minimizations();
  return outcome;
}

namespace {

fs::path run_dir(const RunConfig& cfg) {
  if (!cfg.out.empty()) return cfg.out;
  return output_root() / (sanitize(cfg.problem) + "_" + cfg.scheme);
}

int cmd_run(const RunConfig& cfg, std::ostream& out) {
  const fs::path dir = run_dir(cfg);
  const RunOutcome o = execute_run(cfg, dir);
  out << "wrote " << dir.string() << " (" << to_string(o.terminated) << ", steps=" << o.steps << ")\n";
  return o.terminated == Termination::ReachedT ? kExitOk : kExitCapHit;
}

int cmd_verify(const fs::path& dir, std::ostream& out, std::ostream& err) {
  json run;
  RunConfig cfg;
  std::optional<Problem> pr;
  try {
    run = json::parse(read_file(dir / "run.json"));
    cfg = config_from_json(run.at("config"));
    pr.emplace(make_problem(cfg.problem));
  } catch (const std::exception& e) {
    err << "verify: cannot load run: " << e.what() << "\n";
    return kExitError;
  }
  auto mismatch = [&](const std::string& what) {
    err << "diagnostics mismatch: " << what << "\n";
    return kExitMismatch;
  };
  try {
    const json stored = json::parse(read_file(dir / "diagnostics.json"));
    const std::string curve_text = read_file(dir / "curve.csv");
    std::string where;
    if (cfg.scheme == "exact51") {
      ParametrizedCurve c = curve_from_csv(curve_text);
      c.tFinal = pr->T();
      const auto cls = classify_bv_solution(c, pr->model, pr->dissipation, pr->metricV, 1e-8, pr->z0);
      out << "isParametrizedSolution=" << (cls.isParametrizedSolution ? "true" : "false") << "\n";
      if (!json_close(to_json(cls), stored, where)) return mismatch(where);
      out << "verify: ok\n";
      return kExitOk;
    }
    const SchemeConfig sc = to_scheme_config(cfg, *pr);
    RunTrace tr = trace_from_csv(read_file(dir / "trace.csv"), sc, pr->T(), pr->dissipation, pr->metricV);
    const std::string term = run.at("terminated").get<std::string>();
    if (term != "ReachedT" && term != "CapHit") throw TraceError("bad termination tag");
    tr.terminated = term == "ReachedT" ? Termination::ReachedT : Termination::CapHit;
    for (const auto& n : tr.nodes) {
      if (!close(energy_of(*pr, n), n.energy)) {
        return mismatch("energy column at node (" + std::to_string(n.k) + "," + std::to_string(n.i) + ")");
      }
    }
    const ParametrizedCurve curve = curve_of(tr, *pr, cfg);
    if (!curves_match(curve, curve_from_csv(curve_text), where)) return mismatch(where);
    if (!json_close(diagnostics_json(*pr, cfg, curve), stored, where)) return mismatch(where);
  } catch (const std::exception& e) {
    err << "verify: corrupt run directory: " << e.what() << "\n";
    return kExitError;
  }
  out << "verify: ok\n";
  return kExitOk;
}

struct SweepRow {
  RunConfig cfg;
  std::string status;
  std::string error;
  RunOutcome outcome;
};

std::vector<RunConfig> expand_sweep(const RunConfig& base, const std::vector<std::pair<std::string, json>>& vary) {
  std::vector<RunConfig> rows{base};
  for (const auto& [key, values] : vary) {
    if (!values.is_array() || values.empty()) return {};
    std::vector<RunConfig> next;
    for (const auto& r : rows) {
      for (const auto& v : values) {
        RunConfig c = r;
        set_param(c, key, v);
        next.push_back(c);
      }
    }
    rows = std::move(next);
  }
  return rows;
}

std::string summary_csv(const std::vector<SweepRow>& rows) {
  std::string out =
      "row,problem,scheme,N,h,eta,delta,mu,mu-rule,ratio,status,S,dissTotal,energyResidual,complementarityIntegral,"
      "maxStationarity,steps,minimizations,jumpTime,jumpSize,error\n";
  auto opt = [](const auto& o) { return o ? fmt_double(static_cast<double>(*o)) : std::string(); };
  for (size_t j = 0; j < rows.size(); ++j) {
    const auto& r = rows[j];
    const auto& c = r.cfg;
    const bool ok = r.error.empty();
    const auto& d = r.outcome.report;
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out += std::to_string(j) + "," + c.problem + "," + c.scheme + "," + opt(c.N) + "," + opt(c.h) + "," +
           opt(c.eta) + "," + opt(c.delta) + "," + opt(c.mu) + "," + (c.muRule ? *c.muRule : "") + "," +
           opt(c.ratio) + "," + r.status + "," + (ok ? fmt_double(d.S) : "") + "," +
           (ok ? fmt_double(d.dissTotal) : "") + "," + (ok ? fmt_double(d.energyResidual) : "") + "," +
           (ok ? fmt_double(d.complementarityIntegral) : "") + "," +
           (ok ? fmt_double(d.maxStationarityAtNodes) : "") + "," +
           (ok ? std::to_string(r.outcome.steps) : "") + "," + (ok ? std::to_string(r.outcome.minimizations) : "") +
           "," + (ok ? fmt_double(r.outcome.jump.t) : "") + "," + (ok ? fmt_double(r.outcome.jump.size) : "") + "," +
           err + "\n";
  }
  return out;
}

int cmd_sweep(std::vector<RunConfig> configs, const fs::path& root, int jobs, std::ostream& out, std::ostream& err) {
  if (configs.empty()) {
    err << "sweep: empty parameter list\n";
    return kExitError;
  }
  std::vector<SweepRow> rows(configs.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t j = next++; j < rows.size(); j = next++) {
      SweepRow& row = rows[j];
      row.cfg = configs[j];
      char name[32];
      std::snprintf(name, sizeof name, "row_%03zu", j);
      try {
        row.outcome = execute_run(row.cfg, root / name);
        row.status = row.outcome.terminated == Termination::ReachedT ? "ok" : "cap-hit";
      } catch (const std::exception& e) {
        row.status = "failed";
        row.error = e.what();
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(rows.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < n; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  write_file_atomic(root / "summary.csv", summary_csv(rows));
  int failed = 0;
  for (const auto& r : rows) failed += r.status != "ok";
  out << "sweep: " << rows.size() << " rows, " << failed << " failed, summary " << (root / "summary.csv").string()
      << "\n";
  return failed ? kExitCapHit : kExitOk;
}

}  // namespace

int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Solvers for finite-dimensional rate-independent systems", "ris"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print help");

  struct FlagSet {
    std::string config;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> opts;
    bool zParam = false;
    CLI::Option* zOpt = nullptr;
  };
  auto add_run_flags = [](CLI::App* sub, FlagSet& fs) {
    sub->add_option("--config", fs.config, "JSON config file (flags override it)");
    for (const auto& key : kKeys) {
      if (key == "z-param") continue;
      fs.opts[key] = sub->add_option("--" + key, fs.values[key]);
    }
    fs.zOpt = sub->add_flag("--z-param", fs.zParam, "arc length in the Z norm (relaxed scheme)");
  };
  auto collect = [](const FlagSet& fs, RunConfig base) {
    for (const auto& [key, opt] : fs.opts) {
      if (opt->count() > 0) set_param(base, key, flag_value(fs.values.at(key)));
    }
    if (fs.zOpt->count() > 0) base.zParam = fs.zParam;
    return base;
  };
  auto load_config = [](const std::string& path) {
    if (path.empty()) return json::object();
    try {
      return json::parse(read_file(path));
    } catch (const json::exception& e) {
      throw ParameterError("config '" + path + "': " + e.what());
    }
  };

  FlagSet run_flags;
  auto* run = app.add_subcommand("run", "run one scheme and write trace, curve and diagnostics");
  add_run_flags(run, run_flags);

  FlagSet sweep_flags;
  std::vector<std::string> vary;
  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "run a parameter grid and write summary.csv");
  add_run_flags(sweep, sweep_flags);
  sweep->add_option("--vary", vary, "KEY=v1,v2,... (repeatable; cartesian product)");
  sweep->add_option("--jobs", jobs, "concurrent rows")->check(CLI::PositiveNumber);

  std::string verify_dir;
  auto* verify = app.add_subcommand("verify", "recompute diagnostics from a run directory");
  verify->add_option("dir", verify_dir)->required();

  app.add_subcommand("list-problems", "list built-in problem ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }

  try {
    if (run->parsed()) {
      return cmd_run(collect(run_flags, config_from_json(load_config(run_flags.config))), out);
    }
    if (sweep->parsed()) {
      json file = load_config(sweep_flags.config);
      std::vector<RunConfig> configs;
      fs::path root;
      if (file.contains("runs")) {
        for (const auto& r : file.at("runs")) configs.push_back(collect(sweep_flags, config_from_json(r)));
      } else {
        json base = file.value("base", json::object());
        RunConfig b = collect(sweep_flags, config_from_json(base));
        std::vector<std::pair<std::string, json>> grid;
        const json file_vary = file.value("vary", json::object());
        for (const auto& [k, v] : file_vary.items()) grid.emplace_back(k, v);
        for (const auto& spec : vary) {
          const auto eq = spec.find('=');
          if (eq == std::string::npos) throw ParameterError("--vary expects KEY=v1,v2,...");
          json values = json::array();
          std::stringstream ss(spec.substr(eq + 1));
          std::string item;
          while (std::getline(ss, item, ',')) {
            if (!item.empty()) values.push_back(flag_value(item));
          }
          grid.emplace_back(spec.substr(0, eq), values);
        }
        if (file.contains("jobs") && sweep->count("--jobs") == 0) jobs = file.at("jobs").get<int>();
        configs = expand_sweep(b, grid);
        root = b.out;
      }
      for (const auto& [k, v] : file.items()) {
        if (k != "runs" && k != "base" && k != "vary" && k != "jobs" && k != "out") {
          throw ParameterError("unknown sweep key '" + k + "'");
        }
      }
      if (file.contains("out")) root = file.at("out").get<std::string>();
      if (sweep_flags.opts.at("out")->count() > 0) root = sweep_flags.values.at("out");
      if (root.empty()) root = output_root() / "sweep";
      for (auto& c : configs) c.out.clear();
      return cmd_sweep(configs, root, jobs, out, err);
    }
    if (verify->parsed()) return cmd_verify(verify_dir, out, err);
    for (const auto& p : list_problems()) {
      out << p.id << (p.parameters.empty() ? "" : ":" + p.parameters) << "\t" << p.description << "\n";
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace ris::cli

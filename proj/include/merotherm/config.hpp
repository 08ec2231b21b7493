#pragma once

// Run configuration: a single dotted key-value text format ("section.key =
// value", '#' comments).  Parsing collects *all* field-level problems into one
// config_error instead of stopping at the first.  A parsed config renders back
// to a canonical text whose re-parse is field-for-field identical (lossless
// echo), which is what run manifests embed for exact reproduction.

#include <cctype>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "merotherm/common.hpp"
#include "merotherm/measure.hpp"
#include "merotherm/model.hpp"
#include "merotherm/preimage.hpp"

namespace merotherm {

inline constexpr const char* kWorkbenchVersion = "0.1.0";

struct RunConfig {
  // model section
  std::string model_name = "tangent";
  double lambda = 0.5;
  ModelParams model_params{};

  // potential section
  double tau = 1.5;
  double t = 3.0;

  // truncation section
  long K = 60;
  long K_max = 4096;
  double tail_tol = 1e-10;
  int n_max = 10;

  // sampling section
  double seed_re = 4.5;
  double seed_im = 0.0;
  int depth = 8;
  long budget = 4000;
  std::uint64_t rng_seed = 20260822;

  // output section
  std::string output_directory;  // empty: MEROTHERM_OUT, then "out"
  std::string output_formats = "csv,json";

  // subcommand knobs
  int density_terms = 32;            // density: Cesaro average length
  std::string conformal_strategy = "nu_s_limit";  // or "adjoint_power"
  int conformal_n_max = 6;
  double curve_t_min = 2.2;          // pressure-curve grid
  double curve_t_max = 4.0;
  double curve_t_step = 0.2;
  double dimension_t_low = 2.2;      // dimension: pressure-zero bracket
  double dimension_t_high = 4.0;
  double dimension_tol = 0.05;
  std::string gibbs_conformal_csv;   // gibbs inputs; empty: <out>/conformal.csv etc.
  std::string gibbs_conformal_json;
  std::string gibbs_density_csv;

  [[nodiscard]] PotentialParams potential() const { return PotentialParams{tau, t}; }

  [[nodiscard]] TruncationPolicy truncation() const {
    TruncationPolicy p;
    p.K = K;
    p.K_max = K_max;
    p.tail_tol = tail_tol;
    return p;
  }

  [[nodiscard]] TangentMap make_model() const { return TangentMap(lambda, model_params); }

  [[nodiscard]] cplx seed_hint() const { return cplx(seed_re, seed_im); }

  // Canonical ordered (key, value) list with every field explicit.
  [[nodiscard]] std::vector<std::pair<std::string, std::string>> resolved_entries() const;

  [[nodiscard]] std::string render() const {
    std::string out;
    for (const auto& [k, v] : resolved_entries()) {
      out += k;
      out += " = ";
      out += v;
      out += '\n';
    }
    return out;
  }

  static RunConfig parse_text(const std::string& text);

  // Applies one "section.key=value" override on top of this config, then
  // revalidates.  Used for --set flags.
  void apply_override(const std::string& assignment);

  void validate() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

struct FieldErrors {
  std::vector<std::string> fields;

  void add(const std::string& key, const std::string& why) {
    fields.push_back(key + ": " + why);
  }
  void raise_if_any(const std::string& what) const {
    if (!fields.empty()) throw config_error(what, fields);
  }
};

// One mutable binding per config key.  Values arrive as raw strings; each
// setter parses and reports problems against its dotted key name.
class ConfigBinder {
 public:
  explicit ConfigBinder(RunConfig& cfg) : cfg_(cfg) {}

  bool set(const std::string& key, const std::string& value, FieldErrors& errs) {
    if (key == "model.name") return set_string(cfg_.model_name, value);
    if (key == "model.lambda") return set_double(key, cfg_.lambda, value, errs);
    if (key == "model.max_pole_multiplicity")
      return set_int(key, cfg_.model_params.max_pole_multiplicity, value, errs);
    if (key == "model.borel_exponent")
      return set_double(key, cfg_.model_params.borel_exponent, value, errs);
    if (key == "model.escape_radius")
      return set_double(key, cfg_.model_params.escape_radius, value, errs);
    if (key == "model.modulus_floor")
      return set_double(key, cfg_.model_params.modulus_floor, value, errs);
    if (key == "model.distortion_scale")
      return set_double(key, cfg_.model_params.distortion_scale, value, errs);
    if (key == "model.singular_radius")
      return set_double(key, cfg_.model_params.singular_radius, value, errs);
    if (key == "model.preimage_tol")
      return set_double(key, cfg_.model_params.preimage_tol, value, errs);
    if (key == "model.pole_guard")
      return set_double(key, cfg_.model_params.pole_guard, value, errs);
    if (key == "model.omitted_guard")
      return set_double(key, cfg_.model_params.omitted_guard, value, errs);
    if (key == "potential.tau") return set_double(key, cfg_.tau, value, errs);
    if (key == "potential.t") return set_double(key, cfg_.t, value, errs);
    if (key == "truncation.K") return set_long(key, cfg_.K, value, errs);
    if (key == "truncation.K_max") return set_long(key, cfg_.K_max, value, errs);
    if (key == "truncation.tail_tol") return set_double(key, cfg_.tail_tol, value, errs);
    if (key == "truncation.n_max") return set_int(key, cfg_.n_max, value, errs);
    if (key == "sampling.seed_re") return set_double(key, cfg_.seed_re, value, errs);
    if (key == "sampling.seed_im") return set_double(key, cfg_.seed_im, value, errs);
    if (key == "sampling.depth") return set_int(key, cfg_.depth, value, errs);
    if (key == "sampling.budget") return set_long(key, cfg_.budget, value, errs);
    if (key == "sampling.rng_seed") return set_u64(key, cfg_.rng_seed, value, errs);
    if (key == "output.directory") return set_string(cfg_.output_directory, value);
    if (key == "output.formats") return set_string(cfg_.output_formats, value);
    if (key == "density.terms") return set_int(key, cfg_.density_terms, value, errs);
    if (key == "conformal.strategy") return set_string(cfg_.conformal_strategy, value);
    if (key == "conformal.n_max") return set_int(key, cfg_.conformal_n_max, value, errs);
    if (key == "curve.t_min") return set_double(key, cfg_.curve_t_min, value, errs);
    if (key == "curve.t_max") return set_double(key, cfg_.curve_t_max, value, errs);
    if (key == "curve.t_step") return set_double(key, cfg_.curve_t_step, value, errs);
    if (key == "dimension.t_low") return set_double(key, cfg_.dimension_t_low, value, errs);
    if (key == "dimension.t_high")
      return set_double(key, cfg_.dimension_t_high, value, errs);
    if (key == "dimension.tol") return set_double(key, cfg_.dimension_tol, value, errs);
    if (key == "gibbs.conformal_csv") return set_string(cfg_.gibbs_conformal_csv, value);
    if (key == "gibbs.conformal_json") return set_string(cfg_.gibbs_conformal_json, value);
    if (key == "gibbs.density_csv") return set_string(cfg_.gibbs_density_csv, value);
    errs.add(key, "unknown configuration key");
    return false;
  }

 private:
  static bool set_string(std::string& slot, const std::string& value) {
    slot = value;
    return true;
  }

  static bool set_double(const std::string& key, double& slot, const std::string& value,
                         FieldErrors& errs) {
    try {
      std::size_t used = 0;
      const double v = std::stod(value, &used);
      if (trim(value.substr(used)).empty()) {
        slot = v;
        return true;
      }
    } catch (const std::exception&) {
    }
    errs.add(key, "expected a number, got '" + value + "'");
    return false;
  }

  static bool set_long(const std::string& key, long& slot, const std::string& value,
                       FieldErrors& errs) {
    try {
      std::size_t used = 0;
      const long v = std::stol(value, &used);
      if (trim(value.substr(used)).empty()) {
        slot = v;
        return true;
      }
    } catch (const std::exception&) {
    }
    errs.add(key, "expected an integer, got '" + value + "'");
    return false;
  }

  static bool set_int(const std::string& key, int& slot, const std::string& value,
                      FieldErrors& errs) {
    long v = 0;
    if (set_long(key, v, value, errs)) {
      slot = static_cast<int>(v);
      return true;
    }
    return false;
  }

  static bool set_u64(const std::string& key, std::uint64_t& slot,
                      const std::string& value, FieldErrors& errs) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(value, &used);
      if (trim(value.substr(used)).empty()) {
        slot = v;
        return true;
      }
    } catch (const std::exception&) {
    }
    errs.add(key, "expected a non-negative integer, got '" + value + "'");
    return false;
  }

  RunConfig& cfg_;
};

}  // namespace detail

inline std::vector<std::pair<std::string, std::string>> RunConfig::resolved_entries()
    const {
  const auto d = [](double v) { return format_double(v); };
  std::vector<std::pair<std::string, std::string>> e;
  e.emplace_back("model.name", model_name);
  e.emplace_back("model.lambda", d(lambda));
  e.emplace_back("model.max_pole_multiplicity",
                 std::to_string(model_params.max_pole_multiplicity));
  e.emplace_back("model.borel_exponent", d(model_params.borel_exponent));
  e.emplace_back("model.escape_radius", d(model_params.escape_radius));
  e.emplace_back("model.modulus_floor", d(model_params.modulus_floor));
  e.emplace_back("model.distortion_scale", d(model_params.distortion_scale));
  e.emplace_back("model.singular_radius", d(model_params.singular_radius));
  e.emplace_back("model.preimage_tol", d(model_params.preimage_tol));
  e.emplace_back("model.pole_guard", d(model_params.pole_guard));
  e.emplace_back("model.omitted_guard", d(model_params.omitted_guard));
  e.emplace_back("potential.tau", d(tau));
  e.emplace_back("potential.t", d(t));
  e.emplace_back("truncation.K", std::to_string(K));
  e.emplace_back("truncation.K_max", std::to_string(K_max));
  e.emplace_back("truncation.tail_tol", d(tail_tol));
  e.emplace_back("truncation.n_max", std::to_string(n_max));
  e.emplace_back("sampling.seed_re", d(seed_re));
  e.emplace_back("sampling.seed_im", d(seed_im));
  e.emplace_back("sampling.depth", std::to_string(depth));
  e.emplace_back("sampling.budget", std::to_string(budget));
  e.emplace_back("sampling.rng_seed", std::to_string(rng_seed));
  e.emplace_back("output.directory", output_directory);
  e.emplace_back("output.formats", output_formats);
  e.emplace_back("density.terms", std::to_string(density_terms));
  e.emplace_back("conformal.strategy", conformal_strategy);
  e.emplace_back("conformal.n_max", std::to_string(conformal_n_max));
  e.emplace_back("curve.t_min", d(curve_t_min));
  e.emplace_back("curve.t_max", d(curve_t_max));
  e.emplace_back("curve.t_step", d(curve_t_step));
  e.emplace_back("dimension.t_low", d(dimension_t_low));
  e.emplace_back("dimension.t_high", d(dimension_t_high));
  e.emplace_back("dimension.tol", d(dimension_tol));
  e.emplace_back("gibbs.conformal_csv", gibbs_conformal_csv);
  e.emplace_back("gibbs.conformal_json", gibbs_conformal_json);
  e.emplace_back("gibbs.density_csv", gibbs_density_csv);
  return e;
}

inline RunConfig RunConfig::parse_text(const std::string& text) {
  RunConfig cfg;
  detail::ConfigBinder binder(cfg);
  detail::FieldErrors errs;
  std::map<std::string, int> seen;

  std::size_t pos = 0, line_no = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      errs.add("line " + std::to_string(line_no),
               "expected 'section.key = value', got '" + line + "'");
      continue;
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.find('.') == std::string::npos) {
      errs.add(key.empty() ? "line " + std::to_string(line_no) : key,
               "keys are dotted 'section.key' names");
      continue;
    }
    if (++seen[key] > 1) {
      errs.add(key, "duplicate assignment (line " + std::to_string(line_no) + ")");
      continue;
    }
    binder.set(key, value, errs);
  }

  errs.raise_if_any("invalid configuration");
  cfg.validate();
  return cfg;
}

inline void RunConfig::apply_override(const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw config_error("invalid override", {assignment + ": expected key=value"});
  const std::string key = detail::trim(assignment.substr(0, eq));
  const std::string value = detail::trim(assignment.substr(eq + 1));
  detail::ConfigBinder binder(*this);
  detail::FieldErrors errs;
  binder.set(key, value, errs);
  errs.raise_if_any("invalid override");
  validate();
}

inline void RunConfig::validate() const {
  detail::FieldErrors errs;

  if (model_name != "tangent")
    errs.add("model.name", "unknown model '" + model_name + "' (supported: tangent)");
  if (!(lambda != 0.0) || !std::isfinite(lambda))
    errs.add("model.lambda", "must be a finite nonzero number");
  if (model_params.max_pole_multiplicity < 1)
    errs.add("model.max_pole_multiplicity", "must be >= 1");
  if (!(model_params.borel_exponent > 0.0))
    errs.add("model.borel_exponent", "must be > 0");
  if (!(model_params.escape_radius > 0.0)) errs.add("model.escape_radius", "must be > 0");
  if (!(model_params.modulus_floor > 0.0)) errs.add("model.modulus_floor", "must be > 0");
  if (!(model_params.distortion_scale > 0.0))
    errs.add("model.distortion_scale", "must be > 0");
  if (!(model_params.singular_radius > 0.0))
    errs.add("model.singular_radius", "must be > 0");
  if (!(model_params.preimage_tol > 0.0)) errs.add("model.preimage_tol", "must be > 0");
  if (!(model_params.pole_guard > 0.0)) errs.add("model.pole_guard", "must be > 0");
  if (!(model_params.omitted_guard > 0.0)) errs.add("model.omitted_guard", "must be > 0");

  if (K < 1) errs.add("truncation.K", "must be >= 1");
  if (K_max < K) errs.add("truncation.K_max", "must be >= truncation.K");
  if (!(tail_tol > 0.0)) errs.add("truncation.tail_tol", "must be > 0");
  if (n_max < 2) errs.add("truncation.n_max", "must be >= 2");

  if (depth < 1) errs.add("sampling.depth", "must be >= 1");
  if (budget < 1) errs.add("sampling.budget", "must be >= 1");

  if (density_terms < 1) errs.add("density.terms", "must be >= 1");
  if (conformal_strategy != "nu_s_limit" && conformal_strategy != "adjoint_power")
    errs.add("conformal.strategy",
             "must be 'nu_s_limit' or 'adjoint_power', got '" + conformal_strategy + "'");
  if (conformal_n_max < 1) errs.add("conformal.n_max", "must be >= 1");
  if (!(curve_t_step > 0.0)) errs.add("curve.t_step", "must be > 0");
  if (!(curve_t_min < curve_t_max)) errs.add("curve.t_min", "must be < curve.t_max");
  if (!(dimension_t_low < dimension_t_high))
    errs.add("dimension.t_low", "must be < dimension.t_high");
  if (!(dimension_tol > 0.0)) errs.add("dimension.tol", "must be > 0");

  {
    std::size_t start = 0;
    const std::string& f = output_formats;
    while (start <= f.size()) {
      const std::size_t comma = f.find(',', start);
      const std::string tok =
          detail::trim(f.substr(start, comma == std::string::npos ? comma : comma - start));
      if (!tok.empty() && tok != "csv" && tok != "json")
        errs.add("output.formats", "unknown format '" + tok + "' (known: csv, json)");
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }

  // Admissibility of (tau, t) against the model's standing hypotheses needs a
  // constructed model; only attempt it once the structural fields are sound.
  if (errs.fields.empty() && model_name == "tangent") {
    try {
      const TangentMap m(lambda, model_params);
      for (const auto& v : admissibility_violations(m, PotentialParams{tau, t}))
        errs.fields.push_back(v);
    } catch (const workbench_error& e) {
      errs.add("model", e.what());
    }
  }

  errs.raise_if_any("invalid configuration");
}

}  // namespace merotherm

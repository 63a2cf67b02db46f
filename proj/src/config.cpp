#include "fvopt/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

#include <json.hpp>

#include "fvopt/error.hpp"

namespace fvopt {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

void allow_only(const json& j, const char* where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw Error(ErrorKind::config_error, std::string(where) + " must be an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) {
      throw Error(ErrorKind::config_error, std::string("unknown key '") + k + "' in " + where);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_grid(const json& j, GridSpec& g) {
  allow_only(j, "grid", {"domain_lo", "domain_hi", "points_per_dim"});
  read(j, "domain_lo", g.domain_lo);
  read(j, "domain_hi", g.domain_hi);
  read(j, "points_per_dim", g.points_per_dim);
}

void read_synthesis(const json& j, SynthesisParams& p) {
  read(j, "barren_fraction", p.nominal_barren_fraction);
  read(j, "plateau_width", p.plateau_width);
  read(j, "border_margin", p.border_margin);
  read(j, "smoothing", p.smoothing);
  read(j, "border_value", p.border_value);
  read(j, "minimum_scale", p.minimum_scale);
}

void read_fv(const json& j, FvConfig& fv) {
  allow_only(j, "fv", {"iterations", "particles", "burn_in", "window", "alpha",
                       "exploration_rate", "reactivation_rate"});
  read(j, "iterations", fv.iterations);
  read(j, "particles", fv.particles);
  read(j, "burn_in", fv.burn_in);
  read(j, "window", fv.window);
  read(j, "alpha", fv.alpha);
  read(j, "exploration_rate", fv.exploration_rate);
  if (j.contains("reactivation_rate")) {
    const auto s = j.at("reactivation_rate").get<std::string>();
    if (s == "source_initial") {
      fv.reactivation_rate = ReactivationRate::source_initial;
    } else if (s == "source_current") {
      fv.reactivation_rate = ReactivationRate::source_current;
    } else {
      throw Error(ErrorKind::config_error, "reactivation_rate must be source_initial|source_current");
    }
  }
}

void read_sa(const json& j, SaParams& sa) {
  allow_only(j, "sa", {"temperature", "lr_decay_power", "lr_target_step_fraction", "grad_floor",
                       "probe_radius_fraction", "probe_count"});
  read(j, "temperature", sa.temperature);
  read(j, "lr_decay_power", sa.lr_decay_power);
  read(j, "lr_target_step_fraction", sa.lr_target_step_fraction);
  read(j, "grad_floor", sa.grad_floor);
  read(j, "probe_radius_fraction", sa.probe_radius_fraction);
  read(j, "probe_count", sa.probe_count);
}

ojson grid_json(const GridSpec& g) {
  return {{"domain_lo", g.domain_lo}, {"domain_hi", g.domain_hi}, {"points_per_dim", g.points_per_dim}};
}

ojson synthesis_json(const SynthesisParams& p) {
  return {{"barren_fraction", p.nominal_barren_fraction}, {"plateau_width", p.plateau_width},
          {"border_margin", p.border_margin},             {"smoothing", p.smoothing},
          {"border_value", p.border_value},               {"minimum_scale", p.minimum_scale}};
}

ojson fv_json(const FvConfig& fv) {
  return {{"iterations", fv.iterations},
          {"particles", fv.particles},
          {"burn_in", fv.burn_in},
          {"window", fv.window},
          {"alpha", fv.alpha},
          {"exploration_rate", fv.exploration_rate},
          {"reactivation_rate", fv.reactivation_rate == ReactivationRate::source_initial
                                    ? "source_initial"
                                    : "source_current"}};
}

ojson sa_json(const SaParams& sa) {
  return {{"temperature", sa.temperature},
          {"lr_decay_power", sa.lr_decay_power},
          {"lr_target_step_fraction", sa.lr_target_step_fraction},
          {"grad_floor", sa.grad_floor},
          {"probe_radius_fraction", sa.probe_radius_fraction},
          {"probe_count", sa.probe_count}};
}

}  // namespace

BenchConfig parse_config(std::istream& in) {
  BenchConfig cfg;
  auto& e = cfg.experiment;
  auto& h = cfg.hitting;
  try {
    json j;
    in >> j;
    allow_only(j, "config", {"objective", "synthetic", "qaoa", "fv", "sa", "replications", "ansatz",
                             "master_seed", "threads", "hitting"});
    if (j.contains("objective")) {
      const auto k = j.at("objective").get<std::string>();
      if (k == "synthetic") {
        e.kind = ObjectiveKind::synthetic;
      } else if (k == "qaoa") {
        e.kind = ObjectiveKind::qaoa;
        e.ansatz_rule = AnsatzRule::uniform;
      } else {
        throw Error(ErrorKind::config_error, "objective must be synthetic|qaoa");
      }
    }
    if (j.contains("synthetic")) {
      const auto& s = j.at("synthetic");
      allow_only(s, "synthetic", {"grid", "barren_fraction", "plateau_width", "border_margin",
                                  "smoothing", "border_value", "minimum_scale", "functions"});
      if (s.contains("grid")) read_grid(s.at("grid"), e.synthetic.grid);
      read_synthesis(s, e.synthetic.synthesis);
      read(s, "functions", e.synthetic.functions);
    }
    if (j.contains("qaoa")) {
      const auto& q = j.at("qaoa");
      allow_only(q, "qaoa", {"qubits", "layers", "shots", "graphs", "fd_step_fraction", "worst_value"});
      read(q, "qubits", e.qaoa.qubits);
      read(q, "layers", e.qaoa.layers);
      read(q, "shots", e.qaoa.shots);
      read(q, "graphs", e.qaoa.graphs);
      read(q, "fd_step_fraction", e.qaoa.fd_step_fraction);
      read(q, "worst_value", e.qaoa.worst_value);
    }
    if (j.contains("fv")) read_fv(j.at("fv"), e.fv);
    if (j.contains("sa")) read_sa(j.at("sa"), e.sa);
    read(j, "replications", e.replications);
    if (j.contains("ansatz")) {
      const auto& a = j.at("ansatz");
      allow_only(a, "ansatz", {"rule", "min_distance"});
      if (a.contains("rule")) {
        const auto r = a.at("rule").get<std::string>();
        if (r == "barren_grid") {
          e.ansatz_rule = AnsatzRule::barren_grid;
        } else if (r == "uniform") {
          e.ansatz_rule = AnsatzRule::uniform;
        } else {
          throw Error(ErrorKind::config_error, "ansatz.rule must be barren_grid|uniform");
        }
      }
      read(a, "min_distance", e.ansatz_min_distance);
    }
    read(j, "master_seed", e.master_seed);
    read(j, "threads", e.threads);

    h.fv = e.fv;
    h.sa = e.sa;
    h.seed = e.master_seed;
    h.threads = e.threads;
    if (j.contains("hitting")) {
      const auto& t = j.at("hitting");
      allow_only(t, "hitting", {"grid", "border_margin", "smoothing", "border_value", "minimum_scale",
                                "fractions", "fixed_count", "counts", "fixed_fraction", "trials",
                                "fv", "tolerance", "step_cap"});
      if (t.contains("grid")) read_grid(t.at("grid"), h.grid);
      read_synthesis(t, h.synthesis);
      read(t, "fractions", h.fractions);
      read(t, "fixed_count", h.fixed_count);
      read(t, "counts", h.counts);
      read(t, "fixed_fraction", h.fixed_fraction);
      read(t, "trials", h.trials);
      if (t.contains("fv")) read_fv(t.at("fv"), h.fv);
      read(t, "tolerance", h.tolerance);
      read(t, "step_cap", h.step_cap);
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::config_error, ex.what());
  }
  e.validate();
  return cfg;
}

BenchConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io_error, "cannot open " + path);
  return parse_config(in);
}

std::string dump_config(const BenchConfig& cfg) {
  const auto& e = cfg.experiment;
  const auto& h = cfg.hitting;
  ojson j;
  j["objective"] = e.kind == ObjectiveKind::synthetic ? "synthetic" : "qaoa";
  ojson s = synthesis_json(e.synthetic.synthesis);
  s["grid"] = grid_json(e.synthetic.grid);
  s["functions"] = e.synthetic.functions;
  j["synthetic"] = std::move(s);
  j["qaoa"] = {{"qubits", e.qaoa.qubits},   {"layers", e.qaoa.layers},
               {"shots", e.qaoa.shots},     {"graphs", e.qaoa.graphs},
               {"fd_step_fraction", e.qaoa.fd_step_fraction}, {"worst_value", e.qaoa.worst_value}};
  j["fv"] = fv_json(e.fv);
  j["sa"] = sa_json(e.sa);
  j["replications"] = e.replications;
  j["ansatz"] = {{"rule", e.ansatz_rule == AnsatzRule::barren_grid ? "barren_grid" : "uniform"},
                 {"min_distance", e.ansatz_min_distance}};
  j["master_seed"] = e.master_seed;
  j["threads"] = e.threads;
  ojson t = synthesis_json(h.synthesis);
  t.erase("barren_fraction");
  t.erase("plateau_width");
  t["grid"] = grid_json(h.grid);
  t["fractions"] = h.fractions;
  t["fixed_count"] = h.fixed_count;
  t["counts"] = h.counts;
  t["fixed_fraction"] = h.fixed_fraction;
  t["trials"] = h.trials;
  t["fv"] = fv_json(h.fv);
  t["tolerance"] = h.tolerance;
  t["step_cap"] = h.step_cap;
  j["hitting"] = std::move(t);
  return j.dump(2);
}

}  // namespace fvopt

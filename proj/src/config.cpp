#include "aris/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace aris {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("(line " + std::to_string(lineno) + ")",
                        "expected 'key = value'");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

enum class Unit { None, Db, Dbm, MilliWatt, Watt, MicroWatt };

std::pair<double, Unit> parse_value(const std::string& field, const std::string& raw) {
  std::istringstream in(raw);
  double v;
  if (!(in >> v)) throw ConfigError(field, "not a number: '" + raw + "'");
  std::string suffix;
  in >> suffix;
  std::string rest;
  if (in >> rest) throw ConfigError(field, "trailing junk: '" + raw + "'");
  if (suffix.empty()) return {v, Unit::None};
  if (suffix == "dB") return {v, Unit::Db};
  if (suffix == "dBm") return {v, Unit::Dbm};
  if (suffix == "mW") return {v, Unit::MilliWatt};
  if (suffix == "uW") return {v, Unit::MicroWatt};
  if (suffix == "W") return {v, Unit::Watt};
  throw ConfigError(field, "unknown unit suffix '" + suffix + "'");
}

struct Parser {
  std::map<std::string, std::string> kv;
  std::map<std::string, bool> used;

  bool has(const std::string& k) {
    used[k] = true;
    return kv.count(k) > 0;
  }

  double number(const std::string& k, double def) {
    if (!has(k)) return def;
    auto [v, u] = parse_value(k, kv[k]);
    if (u != Unit::None) throw ConfigError(k, "unit suffix not allowed here");
    return v;
  }

  int integer(const std::string& k) {  // required
    if (!has(k)) throw ConfigError(k, "missing required field");
    auto [v, u] = parse_value(k, kv[k]);
    if (u != Unit::None || v != std::floor(v))
      throw ConfigError(k, "expected a plain integer");
    return (int)v;
  }

  // linear ratio; plain value taken as linear, dB converted
  double ratio(const std::string& k, double def_db) {
    if (!has(k)) return db_to_lin(def_db);
    auto [v, u] = parse_value(k, kv[k]);
    if (u == Unit::Db) return db_to_lin(v);
    if (u == Unit::None) return v;
    throw ConfigError(k, "expected a linear value or dB");
  }

  double db(const std::string& k, double def_db) {
    if (!has(k)) return def_db;
    auto [v, u] = parse_value(k, kv[k]);
    if (u == Unit::Db || u == Unit::None) return v;
    throw ConfigError(k, "expected dB");
  }

  // power in W; plain value taken as W
  double power_w(const std::string& k, double def_w) {
    if (!has(k)) return def_w;
    auto [v, u] = parse_value(k, kv[k]);
    switch (u) {
      case Unit::None:
      case Unit::Watt: return v;
      case Unit::MilliWatt: return v * 1e-3;
      case Unit::MicroWatt: return v * 1e-6;
      case Unit::Dbm: return dbm_to_w(v);
      case Unit::Db: break;
    }
    throw ConfigError(k, "expected a power (W/mW/uW/dBm)");
  }

  std::vector<double> per_user(const std::string& k, int K, double def,
                               bool power, bool ratio_db) {
    std::vector<double> out(K, def);
    if (!has(k)) return out;
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(kv[k]);
    while (std::getline(in, item, ',')) parts.push_back(trim(item));
    if ((int)parts.size() != 1 && (int)parts.size() != K)
      throw ConfigError(k, "expected 1 or K values");
    for (int i = 0; i < K; ++i) {
      const std::string& raw = parts[parts.size() == 1 ? 0 : i];
      auto [v, u] = parse_value(k, raw);
      double x;
      if (power) {
        if (u == Unit::Dbm) x = dbm_to_w(v);
        else if (u == Unit::MilliWatt) x = v * 1e-3;
        else if (u == Unit::MicroWatt) x = v * 1e-6;
        else if (u == Unit::Watt || u == Unit::None) x = v;
        else throw ConfigError(k, "expected a power");
      } else if (ratio_db) {
        if (u == Unit::Db) x = db_to_lin(v);
        else if (u == Unit::None) x = v;
        else throw ConfigError(k, "expected a linear value or dB");
      } else {
        if (u != Unit::None) throw ConfigError(k, "unit suffix not allowed here");
        x = v;
      }
      out[i] = x;
    }
    return out;
  }

  Vec2 position(const std::string& k, Vec2 def) {
    if (!has(k)) return def;
    std::istringstream in(kv[k]);
    Vec2 p;
    char comma;
    if (!(in >> p.x >> comma >> p.y) || comma != ',')
      throw ConfigError(k, "expected 'x, y'");
    return p;
  }
};

}  // namespace

Scenario parse_scenario(const std::string& text) {
  Parser p{parse_kv(text), {}};

  const int M = p.integer("M");
  const int K = p.integer("K");
  const int N = p.integer("N");
  Scenario s = Scenario::defaults(M, K, N);

  s.gamma = p.per_user("gamma", K, s.gamma[0], false, true);
  {
    auto e_w = p.per_user("e", K, 1e-3 * s.e_mw[0], true, false);
    for (int k = 0; k < K; ++k) s.e_mw[k] = 1e3 * e_w[k];
  }
  s.eta = p.per_user("eta", K, 1.0, false, false);
  s.p_max = p.power_w("p_max", s.p_max);
  s.sigma2 = p.per_user("sigma2", K, s.sigma2[0], true, false);
  s.delta2 = p.per_user("delta2", K, s.delta2[0], true, false);
  s.sigma2_v = p.power_w("sigma2_v", s.sigma2_v);
  s.eh_a = p.number("eh_a", s.eh_a);
  s.eh_b = p.number("eh_b", s.eh_b);
  s.eh_c = p.number("eh_c", s.eh_c);
  s.mu = p.number("mu", s.mu);
  s.alpha = p.number("alpha", s.alpha);
  s.beta = p.number("beta", s.beta);
  s.zeta = p.number("zeta", s.zeta);
  s.rician_K_dB = p.db("rician_k", s.rician_K_dB);
  s.bs_pos = p.position("bs_pos", s.bs_pos);
  s.ris_pos = p.position("ris_pos", s.ris_pos);
  s.cluster_center = p.position("cluster_center", s.cluster_center);
  s.cluster_radius = p.number("cluster_radius", s.cluster_radius);
  s.kappa_direct = p.number("kappa_direct", s.kappa_direct);
  s.kappa_reflect = p.number("kappa_reflect", s.kappa_reflect);
  s.C0_dB = p.db("c0", s.C0_dB);
  s.D0 = p.number("d0", s.D0);
  s.rho_min = p.number("rho_min", s.rho_min);
  s.max_outer = (int)p.number("max_outer", s.max_outer);
  s.max_sca = (int)p.number("max_sca", s.max_sca);

  for (const auto& [k, v] : p.kv) {
    (void)v;
    if (!p.used.count(k)) throw ConfigError(k, "unknown field");
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("(scenario)", e.what());
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("(file)", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_scenario(ss.str());
}

std::string scenario_schema_doc() {
  return R"(# Scenario file schema (key = value, '#' comments)
# Required:
#   M                BS antenna count (integer)
#   K                user count (integer)
#   N                RIS element count (integer, 0 = no RIS)
# Optional (defaults in parentheses; per-user fields take 1 or K comma-separated values):
#   gamma            per-user SINR threshold, linear or dB        (10 dB)
#   e                per-user harvested-power target, power unit  (-20 dBm)
#   eta              per-user energy-conversion efficiency        (1)
#   p_max            RIS reflect-power budget, power unit         (10 mW)
#   sigma2           per-user antenna noise, power unit           (-70 dBm)
#   delta2           per-user ID-circuit noise, power unit        (-50 dBm)
#   sigma2_v         active-RIS dynamic noise, power unit         (-70 dBm)
#   eh_a, eh_b, eh_c EH model fit, mW scale                       (2.463, 1.635, 0.826)
#   mu               rank-one penalty factor                      (5e-5)
#   alpha, beta      residual weights                             (1, 1)
#   zeta             convergence tolerance                        (1e-3)
#   rician_k         Rician factor, dB                            (10 dB)
#   bs_pos, ris_pos, cluster_center   "x, y" in meters            ((3.5,0), (0,8), (3.5,8))
#   cluster_radius   user cluster radius, m                       (2.5)
#   kappa_direct, kappa_reflect  pathloss exponents               (3, 2.2)
#   c0               reference pathloss, dB                       (-30 dB)
#   d0               reference distance, m                        (1)
#   rho_min          PS-ratio interior margin                     (1e-4)
#   max_outer        BCD outer-iteration cap                      (30)
#   max_sca          IPPA iteration cap                           (50)
# Power units: W (default), mW, uW, dBm.
)";
}

}  // namespace aris

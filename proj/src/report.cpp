#include "aris/report.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

namespace aris {

using nlohmann::json;

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

namespace {

json scenario_json(const Scenario& s) {
  return json{{"M", s.M},
              {"K", s.K},
              {"N", s.N},
              {"gamma", s.gamma},
              {"e_mw", s.e_mw},
              {"eta", s.eta},
              {"p_max_w", s.p_max},
              {"sigma2_w", s.sigma2},
              {"delta2_w", s.delta2},
              {"sigma2_v_w", s.sigma2_v},
              {"eh", {s.eh_a, s.eh_b, s.eh_c}},
              {"mu", s.mu},
              {"alpha", s.alpha},
              {"beta", s.beta},
              {"zeta", s.zeta},
              {"rician_K_dB", s.rician_K_dB},
              {"bs_pos", {s.bs_pos.x, s.bs_pos.y}},
              {"ris_pos", {s.ris_pos.x, s.ris_pos.y}},
              {"cluster_center", {s.cluster_center.x, s.cluster_center.y}},
              {"cluster_radius", s.cluster_radius},
              {"kappa_direct", s.kappa_direct},
              {"kappa_reflect", s.kappa_reflect},
              {"C0_dB", s.C0_dB},
              {"D0", s.D0}};
}

}  // namespace

std::string run_report_json(const RunResult& r, const Scenario& scn,
                            const std::string& csi_note) {
  json iters = json::array();
  for (const IterRecord& it : r.trace.iters)
    iters.push_back({{"f1_W", it.f1},
                     {"reflect_W", it.reflect},
                     {"total_W", it.total},
                     {"ippa_iters", it.ippa_iters},
                     {"w_rank_residual", it.w_rank_residual},
                     {"t_rank_residual", it.t_rank_residual},
                     {"audit_ok", it.audit_ok}});
  json j{{"schema_version", kSchemaVersion},
         {"scheme", scheme_name(r.trace.scheme)},
         {"seed", r.trace.seed},
         {"scenario", scenario_json(scn)},
         {"converged", r.trace.converged},
         {"stalled", r.trace.stalled},
         {"iterations", r.trace.iters.size()},
         {"f1_W", r.trace.final_f1},
         {"reflect_W", r.trace.final_reflect},
         {"total_W", r.trace.final_total},
         {"sinr_margin", r.trace.sinr_margin},
         {"eh_margin", r.trace.eh_margin},
         {"wall_ms", r.trace.wall_ms},
         {"iters", iters},
         {"csi_error_model", csi_note.empty()
                                 ? "perfect CSI"
                                 : csi_note},
         {"note", r.trace.note}};
  return j.dump(2) + "\n";
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "schema_version,scheme,axis,axis_value,trial,seed,converged,iterations,"
        "f1_W,reflect_W,total_W,min_sinr_margin,min_eh_margin,wall_ms\n";
  for (const SweepRow& r : rows) {
    os << kSchemaVersion << ',' << scheme_name(r.scheme) << ',' << axis_name(r.axis)
       << ',' << format_number(r.axis_value) << ',' << r.trial << ',' << r.seed << ','
       << (r.converged ? 1 : 0) << ',' << r.iterations << ',' << format_number(r.f1)
       << ',' << format_number(r.reflect) << ',' << format_number(r.total) << ','
       << format_number(r.min_sinr_margin) << ',' << format_number(r.min_eh_margin)
       << ',' << format_number(r.wall_ms) << '\n';
  }
}

std::string sweep_summary_json(const std::vector<SweepRow>& rows) {
  struct Cell {
    std::vector<double> totals;
    int failures = 0;
    int csi_violations = 0;
  };
  std::map<std::pair<std::string, double>, Cell> cells;
  std::string axis = rows.empty() ? "" : axis_name(rows.front().axis);
  for (const SweepRow& r : rows) {
    Cell& c = cells[{scheme_name(r.scheme), r.axis_value}];
    if (r.failed) {
      ++c.failures;
      continue;
    }
    c.totals.push_back(r.total);
    if (r.true_csi_violation) ++c.csi_violations;
  }

  json out = json::array();
  for (const auto& [key, c] : cells) {
    const auto& [scheme, value] = key;
    const int n = (int)c.totals.size();
    double mean = 0.0, sd = 0.0;
    for (double t : c.totals) mean += t;
    if (n > 0) mean /= n;
    for (double t : c.totals) sd += (t - mean) * (t - mean);
    sd = n > 1 ? std::sqrt(sd / (n - 1)) : 0.0;
    const double half = n > 0 ? 1.96 * sd / std::sqrt((double)n) : 0.0;
    const int total_rows = n + c.failures;
    out.push_back({{"scheme", scheme},
                   {"axis", axis},
                   {"axis_value", value},
                   {"trials", total_rows},
                   {"failures", c.failures},
                   {"flagged", c.failures * 2 > total_rows},
                   {"mean_total_W", mean},
                   {"ci95_half_width_W", half},
                   {"true_csi_violations", c.csi_violations}});
  }
  return json{{"schema_version", kSchemaVersion}, {"cells", out}}.dump(2) + "\n";
}

void write_convergence_csv(std::ostream& os,
                           const std::vector<std::pair<std::uint64_t, double>>& cells,
                           const std::vector<RunTrace>& traces) {
  os << "schema_version,seed,p_max_W,iter,f1_W\n";
  for (size_t i = 0; i < traces.size(); ++i) {
    for (size_t j = 0; j < traces[i].iters.size(); ++j)
      os << kSchemaVersion << ',' << cells[i].first << ','
         << format_number(cells[i].second) << ',' << j << ','
         << format_number(traces[i].iters[j].f1) << '\n';
  }
}

}  // namespace aris

#pragma once

/**
 * @file report.hpp
 * @brief JSON forms of every report record (schema 1).
 *
 * Non-finite numbers are written as the strings "inf", "-inf" and "nan" so
 * that reports stay valid JSON and round-trip through json_to_double.
 */

#include <string>
#include <vector>

#include "hellinger/complex_io.hpp"
#include "hellinger/exact.hpp"
#include "hellinger/experiments.hpp"
#include "hellinger/lp_analysis.hpp"
#include "hellinger/operator_model.hpp"
#include "hellinger/recurrence.hpp"
#include "hellinger/voc.hpp"

namespace hellinger {

inline constexpr int kReportSchema = 1;

inline json number_list(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(json_number(x));
  return out;
}

inline json exponent_json(double p) { return json_number(p); }

inline void to_json(json& j, const Truncation& t) {
  j = {{"index", t.index}, {"reason", to_string(t.reason)}, {"detail", t.detail}};
}

inline json optional_truncation(const std::optional<Truncation>& t) { return t ? json(*t) : json(nullptr); }

inline void to_json(json& j, const GrowthClass& g) {
  j = {{"kind", to_string(g.kind)},
       {"exponent", json_number(g.exponent)},
       {"ci", {json_number(g.ci_low), json_number(g.ci_high)}},
       {"model", g.power_model ? "power" : "geometric"},
       {"alpha", json_number(g.alpha)},
       {"alpha_stderr", json_number(g.alpha_stderr)},
       {"power_rms", json_number(g.power_rms)},
       {"log_rate", json_number(g.log_rate)},
       {"log_rate_stderr", json_number(g.log_rate_stderr)},
       {"geometric_rms", json_number(g.geometric_rms)},
       {"root_limsup", json_number(g.root_limsup)},
       {"window", {g.window_lo, g.window_hi}},
       {"samples", g.samples},
       {"zeros_excluded", g.zeros_excluded},
       {"note", g.note}};
}

inline void to_json(json& j, const SequenceVerdict& s) {
  j = {{"sequence", to_string(s.sequence)},
       {"verdict", to_string(s.verdict)},
       {"growth", s.growth},
       {"remainder", json_number(s.remainder)},
       {"reason", s.reason}};
}

inline void to_json(json& j, const SideVerdict& s) {
  j = {{"side", to_string(s.side)},
       {"p", exponent_json(s.p)},
       {"verdict", to_string(s.verdict)},
       {"sequences", {s.sequences[0], s.sequences[1]}},
       {"note", s.note}};
}

inline void to_json(json& j, const MembershipReport& r) {
  j = {{"z", complex_to_json(r.z)},
       {"p", exponent_json(r.p)},
       {"J", r.J},
       {"horizon", r.horizon},
       {"reached", r.reached},
       {"truncation", optional_truncation(r.truncation)},
       {"right", r.right},
       {"left", r.left}};
}

inline void to_json(json& j, const IdentityReport& r) {
  json defects = json::array();
  for (const auto& d : r.defects) {
    defects.push_back({{"identity", to_string(d.id)},
                       {"max_defect", json_number(d.max_defect)},
                       {"worst_index", d.worst_index}});
  }
  j = {{"j_range", {r.j_lo, r.j_hi}}, {"max_defect", json_number(r.max_defect())}, {"identities", defects}};
}

inline void to_json(json& j, const Anchor& a) {
  j = {{"C1", matrix_to_json(a.c1)},
       {"C2", matrix_to_json(a.c2)},
       {"condition", json_number(a.condition)},
       {"inverse_defect", json_number(a.inverse_defect)}};
}

inline void to_json(json& j, const DeltaSystemDefect& d) {
  j = {{"homogeneous", json_number(d.homogeneous)}, {"forcing", json_number(d.forcing)}, {"worst_index", d.worst_index}};
}

inline void to_json(json& j, const RepresentationResult& r) {
  j = {{"side", to_string(r.side)},
       {"k", r.k},
       {"J", r.J},
       {"anchor", r.anchor},
       {"max_defect", json_number(r.max_defect)},
       {"worst_index", r.worst_index}};
}

inline void to_json(json& j, const HellingerOptions& o) {
  j = {{"J", o.J},
       {"window", o.window ? json{o.window->first, o.window->second} : json(nullptr)},
       {"threshold", o.threshold},
       {"tol_bound", o.tol_bound},
       {"symmetric_shortcut", o.symmetric_shortcut},
       {"norm", to_string(o.norm)}};
}

inline void to_json(json& j, const BoundCheck& b) {
  j = {{"sequence", to_string(b.sequence)},
       {"N", json_number(b.N)},
       {"C", json_number(b.C)},
       {"M", json_number(b.M)},
       {"bound", json_number(b.bound)},
       {"anchor_condition", json_number(b.anchor_condition)},
       {"ok", b.ok}};
}

inline void to_json(json& j, const GridPoint& g) {
  j = {{"z", complex_to_json(g.z)},
       {"distance", json_number(g.distance)},
       {"k0", g.k0 ? json(*g.k0) : json(nullptr)},
       {"product", json_number(g.product)},
       {"bounds", g.bounds},
       {"right", g.right},
       {"left", g.left ? json(*g.left) : json(nullptr)},
       {"pass", g.pass},
       {"failure", g.failure}};
}

inline void to_json(json& j, const HellingerReport& r) {
  j = {{"z0", complex_to_json(r.z0)},
       {"p", exponent_json(r.p)},
       {"q", exponent_json(r.q)},
       {"options", r.options},
       {"horizon", r.horizon},
       {"status", r.status},
       {"note", r.note},
       {"right_at_z0", r.right_at_z0},
       {"left_at_z0", r.left_at_z0},
       {"symmetric_shortcut_used", r.symmetric_shortcut_used},
       {"points", r.points}};
  if (!r.M_p.empty()) {
    j["M_p_at_0"] = json_number(r.M_p.front());
    j["M_q_plus_at_0"] = json_number(r.M_q_plus.front());
  }
}

inline void to_json(json& j, const PerturbationReport& r) {
  j = {{"p", exponent_json(r.p)},
       {"q", exponent_json(r.q)},
       {"J", r.J},
       {"horizon", r.horizon},
       {"F", r.perturbation_right},
       {"G", r.perturbation_left},
       {"sup_F", json_number(r.sup_F)},
       {"sup_G", json_number(r.sup_G)},
       {"precondition_ok", r.precondition_ok},
       {"note", r.note},
       {"unperturbed_right", r.unperturbed_right},
       {"unperturbed_left", r.unperturbed_left},
       {"right", r.right ? json(*r.right) : json(nullptr)},
       {"left", r.left ? json(*r.left) : json(nullptr)},
       {"pass", r.pass()}};
}

inline void to_json(json& j, const Witness& w) {
  j = {{"z", complex_to_json(w.z)},
       {"column", w.column},
       {"theta", w.theta},
       {"phi", w.phi},
       {"sup", json_number(w.sup)},
       {"trailing_inf", json_number(w.trailing_inf)},
       {"score", json_number(w.score)},
       {"bounded", w.bounded}};
}

inline void to_json(json& j, const CounterexampleReport& r) {
  json fits = json::array();
  for (const auto& f : r.fits) fits.push_back({{"sequence", to_string(f.sequence)}, {"growth", f.growth}, {"pass", f.pass}});
  json verdicts = json::array();
  for (const auto& v : r.verdicts) {
    verdicts.push_back({{"p", exponent_json(v.p)},
                        {"expected", to_string(v.expected)},
                        {"verdict", to_string(v.right.verdict)},
                        {"detail", v.right},
                        {"pass", v.pass}});
  }
  const auto& o = r.options;
  j = {{"options",
        {{"n", o.n},
         {"J_exponent", o.J_exponent},
         {"J_bounded", o.J_bounded},
         {"J_verdict", o.J_verdict},
         {"p_list", number_list(o.p_list)},
         {"exponent_target", o.exponent_target},
         {"exponent_tol", o.exponent_tol},
         {"witness_ratio", o.witness_ratio},
         {"trailing_fraction", o.trailing_fraction},
         {"theta_steps", o.theta_steps},
         {"phi_steps", o.phi_steps}}},
       {"exponents", fits},
       {"verdicts", verdicts},
       {"witnesses", r.witnesses},
       {"pass_exponents", r.pass_exponents},
       {"pass_verdicts", r.pass_verdicts},
       {"pass_witnesses", r.pass_witnesses},
       {"pass", r.pass()},
       {"note", r.note}};
}

inline void to_json(json& j, const OracleComparison& c) {
  j = {{"J", c.J},
       {"max_relative_error", json_number(c.max_relative_error)},
       {"worst_index", c.worst_index},
       {"worst_sequence", to_string(c.worst_sequence)}};
}

}  // namespace hellinger

#include "hsgn/report.hpp"

#include <sstream>

#include "hsgn/error.hpp"

namespace hsgn {

using nlohmann::json;

json report_json(const ExperimentReport& report) {
  json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["experiment"] = report.experiment;
  doc["parameters"] = report.parameters;
  doc["results"] = report.results;
  return doc;
}

std::string render_json(const ExperimentReport& report) { return report_json(report).dump(2) + "\n"; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

namespace {

void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& rows) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, rows);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", rows);
  } else if (j.is_string()) {
    rows.emplace_back(prefix, j.get<std::string>());
  } else {
    rows.emplace_back(prefix, j.dump());
  }
}

}  // namespace

std::string render_csv(const ExperimentReport& report) {
  std::vector<std::pair<std::string, std::string>> rows;
  rows.emplace_back("schema_version", std::to_string(kReportSchemaVersion));
  flatten(report.parameters, "parameters", rows);
  flatten(report.results, "results", rows);
  std::ostringstream out;
  out << "experiment,measurement,value\r\n";
  for (const auto& [k, v] : rows) {
    out << csv_field(report.experiment) << ',' << csv_field(k) << ',' << csv_field(v) << "\r\n";
  }
  return out.str();
}

void validate_report_json(const json& doc) {
  if (!doc.is_object()) throw FormatError("report is not a JSON object");
  for (const char* key : {"schema_version", "experiment", "parameters", "results"}) {
    if (!doc.contains(key)) throw FormatError(std::string("report lacks '") + key + "'");
  }
  if (doc["schema_version"] != kReportSchemaVersion) throw FormatError("unsupported report schema version");
  if (!doc["experiment"].is_string() || !doc["parameters"].is_object() || !doc["results"].is_object()) {
    throw FormatError("report fields have the wrong types");
  }
}

json to_json(const SignReport& r) {
  json j;
  j["X"] = r.X;
  j["n_pos"] = r.n_pos;
  j["n_neg"] = r.n_neg;
  j["n_zero"] = r.n_zero;
  j["sign_changes"] = r.sign_changes;
  j["chowla_sum"] = r.chowla_sum;
  j["pos_neg_ratio"] = r.n_neg ? static_cast<double>(r.n_pos) / static_cast<double>(r.n_neg) : 0.0;
  return j;
}

json to_json(const IntervalScanReport& r) {
  json j;
  j["X"] = r.X;
  j["h"] = r.h;
  j["K"] = r.K;
  j["L"] = r.L;
  j["samples"] = r.samples;
  j["exhaustive"] = r.exhaustive;
  j["C"] = r.C;
  j["c"] = r.c;
  j["frac_S1_small"] = r.frac_S1_small;
  j["frac_S2_large"] = r.frac_S2_large;
  j["frac_certified_sign_change"] = r.frac_certified_sign_change;
  j["certified"] = r.certified;
  j["soundness_failures"] = r.soundness_failures;
  j["empirical_C"] = r.empirical_C;
  j["empirical_c"] = r.empirical_c;
  return j;
}

json to_json(const MomentReport& r) {
  json j;
  j["X"] = r.X;
  j["m1_wprime"] = r.m1_wprime;
  j["m2_wprime"] = r.m2_wprime;
  j["m2_w"] = r.m2_w;
  j["normalizer"] = r.normalizer;
  return j;
}

json to_json(const ShiftedConvolution& r) {
  json j;
  j["sum"] = r.sum;
  j["exponent"] = r.exponent;
  j["terms"] = r.terms;
  j["solvable"] = r.solvable;
  return j;
}

json to_json(const PrimeMomentReport& r) {
  json j;
  j["windows"] = json::array();
  for (const auto& w : r.windows) j["windows"].push_back({{"w", w.w}, {"z", w.z}, {"diff", w.diff}});
  j["large"] = json::array();
  for (const auto& l : r.large) {
    j["large"].push_back({{"y", l.y}, {"sum", l.sum}, {"threshold", l.threshold}, {"holds", l.holds}});
  }
  j["grid_points"] = r.grid_points;
  j["grid_violations"] = r.grid_violations;
  j["grid_max_slack"] = r.grid_max_slack;
  return j;
}

json to_json(const SatoTateHistogram& r) {
  json j;
  j["P"] = r.P;
  j["count"] = r.count;
  j["edges"] = r.edges;
  j["empirical"] = r.empirical;
  j["theoretical"] = r.theoretical;
  j["max_discrepancy"] = r.max_discrepancy;
  j["total_mass"] = r.total_mass;
  j["negative_fraction"] = r.negative_fraction;
  return j;
}

json to_json(const SerreDensity& r) {
  return {{"vanishing_sum", r.vanishing_sum}, {"reference", r.reference}, {"difference", r.vanishing_sum - r.reference}};
}

json to_json(const CorProofReport& r) {
  json j;
  j["found_b"] = r.found_b;
  j["trivial_branch"] = r.trivial_branch;
  j["b"] = r.b;
  j["j"] = r.j;
  j["g2"] = r.g2;
  j["X"] = r.X;
  j["checked"] = r.checked;
  j["multiplicativity_failures"] = r.multiplicativity_failures;
  j["disjunction_failures"] = r.disjunction_failures;
  return j;
}

json to_json(const SieveParams& p) {
  json j;
  j["X"] = p.X;
  j["delta"] = p.delta;
  j["y"] = p.y;
  j["gamma"] = p.gamma();
  j["max_m"] = p.max_m;
  return j;
}

}  // namespace hsgn

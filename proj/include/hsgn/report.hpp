#pragma once

// Experiment reports: JSON with sorted keys, or CSV with one row per measurement.

#include <json.hpp>
#include <string>

#include "hsgn/sieveweights.hpp"
#include "hsgn/stats.hpp"

namespace hsgn {

inline constexpr int kReportSchemaVersion = 1;

struct ExperimentReport {
  std::string experiment;
  nlohmann::json parameters = nlohmann::json::object();
  nlohmann::json results = nlohmann::json::object();
};

nlohmann::json report_json(const ExperimentReport& report);
std::string render_json(const ExperimentReport& report);
// Header "experiment,measurement,value"; nested keys are joined with '.',
// array elements get [i]; fields are quoted per RFC 4180 when needed.
std::string render_csv(const ExperimentReport& report);
std::string csv_field(const std::string& s);

// Accepts a document written by render_json; throws FormatError otherwise.
void validate_report_json(const nlohmann::json& doc);

nlohmann::json to_json(const SignReport& r);
nlohmann::json to_json(const IntervalScanReport& r);
nlohmann::json to_json(const MomentReport& r);
nlohmann::json to_json(const ShiftedConvolution& r);
nlohmann::json to_json(const PrimeMomentReport& r);
nlohmann::json to_json(const SatoTateHistogram& r);
nlohmann::json to_json(const SerreDensity& r);
nlohmann::json to_json(const CorProofReport& r);
nlohmann::json to_json(const SieveParams& p);

}  // namespace hsgn

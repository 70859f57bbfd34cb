#pragma once

#include "sigpal/engines.hpp"
#include "sigpal/sim_harness.hpp"
#include "sigpal/spectrum.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace sigpal {

using Json = nlohmann::ordered_json;

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

Json to_json(const EigenSpectrum& s);
EigenSpectrum spectrum_from_json(const Json& j);

Json to_json(const AssignerSpec& s);
/// Missing keys keep their defaults.
AssignerSpec assigner_from_json(const Json& j, AssignerSpec base = {});

Json to_json(const TestResult& r);

/// One value per line.
void write_null_stats_csv(std::ostream& out, const TestResult& r);

namespace sim {
Json to_json(const GeneratorSpec& s);
GeneratorSpec generator_from_json(const Json& j);
Json to_json(const MethodConfig& m);
MethodConfig method_from_json(const Json& j);
Json to_json(const Preset& p);
Preset preset_from_json(const Json& j);

/// `replicate,method,p_value,seed` rows.
void write_report_csv(std::ostream& out, const ExperimentReport& report);
Json summary_json(const ExperimentReport& report);
}  // namespace sim

}  // namespace sigpal

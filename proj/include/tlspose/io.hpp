#pragma once

#include "scenario.hpp"

#include <string>

namespace tlspose
{

// Scenario document: key-value tree with "attitude" (3x3 row-major),
// "position" (3), "features" list of {r, v, optional b/u, R_r, R_b, R_u,
// R_v}. Missing b/u are regenerated from the pose constraint.
[[nodiscard]] Scenario load_scenario(const std::string& path);
[[nodiscard]] Scenario parse_scenario(const std::string& text);
void save_scenario(const Scenario& scenario, const std::string& path);
[[nodiscard]] std::string serialize_scenario(const Scenario& scenario);

// Measurement document: {"measurements": [{r, b, u, v}, ...]}.
[[nodiscard]] MeasurementSet load_measurements(const std::string& path);
void save_measurements(const MeasurementSet& meas, const std::string& path);

// Full-precision decimal rendering used by every emitted artifact.
[[nodiscard]] std::string format_double(double x);

}

#pragma once

// Report serialization: nested JSON and a flat CSV with one row per residual.

#include <string>

#include <json.hpp>

#include "geodecomp/harness_run.hpp"

namespace geodecomp::harness {

enum class Format { Json, Csv };
Format format_from_string(const std::string& s);

/// Non-finite numbers are written as the strings "inf", "-inf" and "nan" so
/// that report_from_json restores every residual bit for bit.
nlohmann::json to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& j);

/// Header check,quantity,geodesic,t0,t1,value followed by one row per residual.
std::string to_csv(const RunReport& report);

std::string render(const RunReport& report, Format format);

/// Writes the rendered report; throws std::runtime_error carrying the system
/// error text on I/O failure.
void emit(const RunReport& report, Format format, const std::string& path);

}  // namespace geodecomp::harness

#include "geodecomp/harness_emit.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace geodecomp::harness {

using nlohmann::json;

namespace {

json number(double x) {
  if (std::isnan(x)) {
    return "nan";
  }
  if (std::isinf(x)) {
    return x > 0 ? "inf" : "-inf";
  }
  return x;
}

double number(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") {
      return std::numeric_limits<double>::quiet_NaN();
    }
    if (s == "inf") {
      return std::numeric_limits<double>::infinity();
    }
    if (s == "-inf") {
      return -std::numeric_limits<double>::infinity();
    }
    throw DomainError("report: '" + s + "' is not a number");
  }
  return j.get<double>();
}

std::string csv_number(double x) {
  if (std::isnan(x)) {
    return "nan";
  }
  if (std::isinf(x)) {
    return x > 0 ? "inf" : "-inf";
  }
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace

Format format_from_string(const std::string& s) {
  if (s == "json") {
    return Format::Json;
  }
  if (s == "csv") {
    return Format::Csv;
  }
  throw DomainError("unknown format '" + s + "' (json, csv)");
}

json to_json(const RunReport& report) {
  json checks = json::array();
  for (const auto& c : report.checks) {
    json metrics = json::object();
    for (const auto& [k, v] : c.metrics) {
      metrics[k] = number(v);
    }
    json rows = json::array();
    for (const auto& r : c.residuals) {
      rows.push_back({{"quantity", r.quantity},
                      {"geodesic", r.geodesic},
                      {"t0", number(r.t0)},
                      {"t1", number(r.t1)},
                      {"value", number(r.value)}});
    }
    json entry{{"name", c.name},
               {"status", to_string(c.status)},
               {"message", c.message},
               {"metrics", metrics},
               {"residuals", rows}};
    if (c.seconds) {
      entry["seconds"] = *c.seconds;
    }
    checks.push_back(entry);
  }
  json out{{"schema_version", report.schema_version},
           {"tool_version", report.tool_version},
           {"scenario", report.scenario},
           {"seed", report.seed},
           {"status", report.any_failed() ? "fail" : "pass"},
           {"config", report.config},
           {"checks", checks}};
  if (report.seconds) {
    out["seconds"] = *report.seconds;
  }
  return out;
}

RunReport report_from_json(const json& j) {
  RunReport r;
  r.schema_version = j.at("schema_version").get<int>();
  r.tool_version = j.at("tool_version").get<std::string>();
  r.scenario = j.at("scenario").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.config = j.at("config");
  if (j.contains("seconds")) {
    r.seconds = j.at("seconds").get<double>();
  }
  for (const auto& c : j.at("checks")) {
    CheckResult out;
    out.name = c.at("name").get<std::string>();
    out.status = status_from_string(c.at("status").get<std::string>());
    out.message = c.at("message").get<std::string>();
    for (const auto& item : c.at("metrics").items()) {
      out.metrics.emplace_back(item.key(), number(item.value()));
    }
    for (const auto& row : c.at("residuals")) {
      out.residuals.push_back({row.at("quantity").get<std::string>(), row.at("geodesic").get<std::int64_t>(),
                               number(row.at("t0")), number(row.at("t1")), number(row.at("value"))});
    }
    if (c.contains("seconds")) {
      out.seconds = c.at("seconds").get<double>();
    }
    r.checks.push_back(std::move(out));
  }
  return r;
}

std::string to_csv(const RunReport& report) {
  std::string out = "check,quantity,geodesic,t0,t1,value\n";
  for (const auto& c : report.checks) {
    for (const auto& r : c.residuals) {
      out += c.name + "," + r.quantity + "," + std::to_string(r.geodesic) + "," + csv_number(r.t0) + "," +
             csv_number(r.t1) + "," + csv_number(r.value) + "\n";
    }
  }
  return out;
}

std::string render(const RunReport& report, Format format) {
  return format == Format::Json ? to_json(report).dump(2) + "\n" : to_csv(report);
}

void emit(const RunReport& report, Format format, const std::string& path) {
  const std::string text = render(report, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error(path + ": " + std::strerror(errno));
  }
  out << text;
  out.flush();
  if (!out) {
    throw std::runtime_error(path + ": " + std::strerror(errno));
  }
}

}  // namespace geodecomp::harness

#include "pq/settings.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "pq/error.hpp"

namespace pq {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

void Thresholds::validate() const {
  if (!(interruption_pu >= 0.0 && interruption_pu < sag_pu && sag_pu < 1.0))
    throw Error(ErrorCode::domain,
                "thresholds must satisfy 0 <= interruption_pu < sag_pu < 1");
  if (!(surge_pu > 1.0)) throw Error(ErrorCode::domain, "surge_pu must exceed 1");
}

void Settings::validate() const {
  conversion.validate();
  thresholds.validate();
}

double parse_double(std::string_view text, std::string_view what) {
  text = trim(text);
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty() || !std::isfinite(value))
    throw Error(ErrorCode::invalid_argument,
                "invalid number for " + std::string(what) + ": '" + std::string(text) + "'");
  return value;
}

void apply_setting(Settings& settings, std::string_view key, std::string_view value) {
  key = trim(key);
  const double v = parse_double(value, key);
  if (key == "vref_volts") settings.conversion.vref = v;
  else if (key == "offset_volts") settings.conversion.offset = v;
  else if (key == "divider_ratio") settings.conversion.ratio = v;
  else if (key == "nominal_voltage") settings.conversion.nominal_voltage = v;
  else if (key == "sag_pu") settings.thresholds.sag_pu = v;
  else if (key == "surge_pu") settings.thresholds.surge_pu = v;
  else if (key == "interruption_pu") settings.thresholds.interruption_pu = v;
  else
    throw Error(ErrorCode::invalid_argument, "unknown setting '" + std::string(key) + "'");
}

void load_settings_file(Settings& settings, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open config file " + path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::invalid_argument,
                  path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    try {
      apply_setting(settings, view.substr(0, eq), view.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace pq

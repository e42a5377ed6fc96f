#include <charconv>
#include <cstdio>
#include <string>

#include "visattn/error.hpp"
#include "visattn/intervention.hpp"

namespace visattn {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ParseError("spec: '" + key + "' is not a number: '" + value + "'", 0);
  }
}

}  // namespace

std::map<std::string, std::string> parse_flat_config(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("config line " + std::to_string(line_no) + ": expected key = value", line_no);
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ParseError("config line " + std::to_string(line_no) + ": empty key", line_no);
    out[key] = value;
  }
  return out;
}

std::string format_spec(const InterventionSpec& spec) {
  std::string s;
  s += "method = " + std::string(to_string(spec.method)) + "\n";
  const double w1 = spec.method == Method::adaptive ? spec.alpha1 : spec.alpha;
  s += "weight1 = " + fmt_double(w1) + "\n";
  s += "weight2 = " + fmt_double(spec.alpha2) + "\n";
  s += "threshold = " + fmt_double(spec.beta) + "\n";
  s += "constant = " + fmt_double(spec.constant) + "\n";
  s += std::string("confidence = ") +
       (spec.confidence == ConfidenceMode::first_token ? "first_token" : "geometric_mean") + "\n";
  return s;
}

InterventionSpec parse_spec(std::string_view text) {
  InterventionSpec spec;
  for (const auto& [key, value] : parse_flat_config(text)) {
    if (key == "method") {
      const auto m = parse_method(value);
      if (!m) throw ParseError("spec: unknown method '" + value + "'", 0);
      spec.method = *m;
    } else if (key == "weight1") {
      spec.alpha = spec.alpha1 = to_double(key, value);
    } else if (key == "weight2") {
      spec.alpha2 = to_double(key, value);
    } else if (key == "threshold") {
      spec.beta = to_double(key, value);
    } else if (key == "constant") {
      spec.constant = to_double(key, value);
    } else if (key == "confidence") {
      if (value == "first_token") {
        spec.confidence = ConfidenceMode::first_token;
      } else if (value == "geometric_mean") {
        spec.confidence = ConfidenceMode::geometric_mean;
      } else {
        throw ParseError("spec: unknown confidence mode '" + value + "'", 0);
      }
    } else {
      throw ParseError("spec: unknown key '" + key + "'", 0);
    }
  }
  // Keep the unused coefficient at its neutral value so round trips compare equal.
  if (spec.method == Method::adaptive) spec.alpha = 1.0;
  if (spec.method != Method::adaptive) spec.alpha1 = 1.0;
  return spec;
}

}  // namespace visattn

/*
 * Copyright 2026 The SoundMLM Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "soundmlm/explain.h"

namespace soundmlm {
namespace {

std::string html_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string signed_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%+.4f", v);
  return buf;
}

// Linear blend from white towards pure red (positive) or blue (negative).
struct Shade {
  int r = 255, g = 255, b = 255;
  double alpha = 0.0;
  bool neutral = true;
};

Shade shade_for(double value, double max_abs) {
  Shade s;
  if (max_abs <= 0.0 || value == 0.0) return s;
  s.alpha = std::min(1.0, std::abs(value) / max_abs);
  s.neutral = false;
  const int fade = static_cast<int>(std::lround(255.0 * (1.0 - s.alpha)));
  if (value > 0) {
    s.g = fade;
    s.b = fade;
  } else {
    s.r = fade;
    s.g = fade;
  }
  return s;
}

}  // namespace

std::string render_report(const AttributionReport& report, RenderFormat format) {
  double max_abs = 0.0;
  for (double v : report.shap_values) max_abs = std::max(max_abs, std::abs(v));

  std::string out;
  if (format == RenderFormat::kAnsi) {
    for (std::size_t i = 0; i < report.words.size(); ++i) {
      const double v = i < report.shap_values.size() ? report.shap_values[i] : 0.0;
      const Shade s = shade_for(v, max_abs);
      if (i > 0) out.push_back(' ');
      const std::string label = report.words[i] + "(" + signed_value(v) + ")";
      if (s.neutral) {
        out += label;
      } else {
        out += "\x1b[48;2;" + std::to_string(s.r) + ";" + std::to_string(s.g) + ";" +
               std::to_string(s.b) + "m\x1b[38;2;0;0;0m" + label + "\x1b[0m";
      }
    }
    out += "\nbase=" + signed_value(report.base_value) +
           " f(x)=" + signed_value(report.full_value) +
           " class=" + std::to_string(report.target_class) + "\n";
    return out;
  }

  out += "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\"/>\n";
  out += "<title>Word attributions</title>\n<style>\n";
  out += ".word{padding:2px 4px;margin:1px;border-radius:3px;display:inline-block}\n";
  out += ".value{font-size:70%;color:#333;margin-left:2px}\n</style>\n</head>\n<body>\n";
  out += "<p class=\"summary\">target class " + std::to_string(report.target_class) +
         ", base value " + signed_value(report.base_value) + ", model output " +
         signed_value(report.full_value) + "</p>\n<div class=\"attribution\">\n";
  for (std::size_t i = 0; i < report.words.size(); ++i) {
    const double v = i < report.shap_values.size() ? report.shap_values[i] : 0.0;
    const Shade s = shade_for(v, max_abs);
    char color[64];
    if (s.neutral) {
      std::snprintf(color, sizeof(color), "transparent");
    } else {
      std::snprintf(color, sizeof(color), "rgb(%d,%d,%d)", s.r, s.g, s.b);
    }
    out += "<span class=\"word\" style=\"background-color:" + std::string(color) +
           "\" title=\"" + signed_value(v) + "\">" + html_escape(report.words[i]) +
           "<span class=\"value\">" + signed_value(v) + "</span></span>\n";
  }
  out += "</div>\n</body>\n</html>\n";
  return out;
}

}  // namespace soundmlm

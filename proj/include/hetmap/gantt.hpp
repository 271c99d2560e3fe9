/**
 * Copyright 2026 The hetmap Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <tuple>
#include <vector>

#include "hetmap/problem.hpp"
#include "hetmap/schedule.hpp"

namespace hetmap {

namespace gantt_detail {

inline std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace gantt_detail

/// One lane per device, one rectangle per batch. Output depends only on the
/// schedule contents (batches drawn in device, start, task order).
inline std::string render_gantt_svg(const Problem& p, const Schedule& s) {
  using gantt_detail::escape;
  using gantt_detail::num;
  const double width = 960.0;
  const double label = 120.0;
  const double lane = 28.0;
  const double top = 24.0;
  const int K = p.device_count();
  const double span = std::max(makespan(s), 1e-9);
  const double scale = (width - label - 20.0) / span;
  const double height = top + lane * K + 30.0;

  std::vector<const Batch*> order;
  for (const auto& b : s.batches) order.push_back(&b);
  std::sort(order.begin(), order.end(), [](const Batch* a, const Batch* b) {
    return std::tie(a->device, a->start, a->task, a->inputs) < std::tie(b->device, b->start, b->task, b->inputs);
  });

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
         "\" font-family=\"monospace\" font-size=\"10\">\n";
  out += "<text x=\"4\" y=\"14\">makespan " + num(makespan(s)) + " ms</text>\n";
  for (int u = 0; u < K; ++u) {
    const double y = top + lane * u;
    out += "<text x=\"4\" y=\"" + num(y + lane * 0.6) + "\">" + escape(p.hardware().id(u)) + "</text>\n";
    out += "<line x1=\"" + num(label) + "\" y1=\"" + num(y + lane) + "\" x2=\"" + num(width - 20.0) + "\" y2=\"" +
           num(y + lane) + "\" stroke=\"#ccc\"/>\n";
  }
  for (const Batch* b : order) {
    const double x = label + b->start * scale;
    const double w = std::max(0.5, (b->end - b->start) * scale);
    const double y = top + lane * b->device + 3.0;
    std::string name = escape(p.graph().id(b->task));
    std::string inputs;
    for (size_t k = 0; k < b->inputs.size(); ++k) inputs += (k ? "," : "") + std::to_string(b->inputs[k]);
    out += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" + num(lane - 6.0) +
           "\" fill=\"#8ab\" stroke=\"#345\"><title>" + name + " [" + inputs + "] " + num(b->start) + "-" +
           num(b->end) + "</title></rect>\n";
    out += "<text x=\"" + num(x + 2.0) + "\" y=\"" + num(y + lane * 0.5) + "\">" + name + "</text>\n";
  }
  out += "<text x=\"" + num(label) + "\" y=\"" + num(height - 8.0) + "\">0</text>\n";
  out += "<text x=\"" + num(width - 60.0) + "\" y=\"" + num(height - 8.0) + "\">" + num(span) + "</text>\n";
  out += "</svg>\n";
  return out;
}

}  // namespace hetmap

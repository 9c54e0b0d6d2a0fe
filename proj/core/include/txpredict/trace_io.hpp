#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "txpredict/history.hpp"
#include "txpredict/trace.hpp"

namespace txpredict {

/// Parses the line-based trace format. Throws ParseError on syntax errors and
/// SemanticError on inconsistent content.
Trace parse_trace(std::string_view text);

/// Canonical text form. parse_trace(emit_trace(t)) == t for any valid trace.
std::string emit_trace(const Trace& trace);

Trace read_trace_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// An extra edge drawn in red on top of the history's own edges.
struct DotEdge {
  TxnId from{};
  TxnId to{};
  std::string label;
};

struct DotOptions {
  bool show_values = false;
  std::vector<DotEdge> highlight;
};

std::string emit_dot(const ExecutionHistory& history, const DotOptions& options = {});

}  // namespace txpredict

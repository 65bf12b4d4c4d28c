#include <cmath>
#include <fstream>
#include <sstream>

#include "tricam/clickcalib.hpp"
#include "tricam/error.hpp"

namespace tricam::click {

namespace {

constexpr std::pair<AppContext, std::string_view> kContextNames[] = {
    {AppContext::kFileManaging, "file_managing"}, {AppContext::kBrowsing, "browsing"},
    {AppContext::kTextEditing, "text_editing"},   {AppContext::kVideo, "video"},
    {AppContext::kGaming, "gaming"},              {AppContext::kOther, "other"}};

[[noreturn]] void bad_line(std::size_t line, const std::string& what) {
  throw Error(ErrorKind::kMalformed, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::string_view to_string(AppContext c) {
  for (const auto& [ctx, name] : kContextNames)
    if (ctx == c) return name;
  return "other";
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::kPress: return "press";
    case EventKind::kRelease: return "release";
    case EventKind::kContext: return "context";
    case EventKind::kGaze: return "gaze";
    case EventKind::kFrame: return "frame";
  }
  return "frame";
}

AppContext parse_context(std::string_view label) {
  for (const auto& [ctx, name] : kContextNames)
    if (name == label) return ctx;
  throw Error(ErrorKind::kMalformed, "unknown application context '" + std::string(label) + "'");
}

std::vector<UsageEvent> parse_log(std::istream& in) {
  std::vector<UsageEvent> events;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::string t_text;
    if (!(ls >> t_text)) continue;  // blank or comment-only

    UsageEvent e;
    e.line = line_no;
    std::size_t used = 0;
    try {
      e.t = std::stod(t_text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t_text.size() || !std::isfinite(e.t)) bad_line(line_no, "bad time '" + t_text + "'");

    std::string kind;
    if (!(ls >> kind)) bad_line(line_no, "missing event kind");
    auto read_point = [&]() {
      if (!(ls >> e.point.x >> e.point.y)) bad_line(line_no, kind + " needs x and y");
    };
    if (kind == "press") {
      e.kind = EventKind::kPress;
      read_point();
    } else if (kind == "release") {
      e.kind = EventKind::kRelease;
      read_point();
    } else if (kind == "gaze") {
      e.kind = EventKind::kGaze;
      read_point();
    } else if (kind == "context") {
      e.kind = EventKind::kContext;
      std::string label;
      if (!(ls >> label)) bad_line(line_no, "context needs a label");
      try {
        e.context = parse_context(label);
      } catch (const Error& err) {
        bad_line(line_no, err.detail());
      }
    } else if (kind == "frame") {
      e.kind = EventKind::kFrame;
    } else {
      bad_line(line_no, "unknown event kind '" + kind + "'");
    }
    std::string extra;
    if (ls >> extra) bad_line(line_no, "unexpected trailing field '" + extra + "'");

    if (!events.empty() && e.t < events.back().t) {
      throw Error(ErrorKind::kUnsorted, "line " + std::to_string(line_no) + ": time " + t_text +
                                            " is earlier than line " +
                                            std::to_string(events.back().line));
    }
    events.push_back(e);
  }
  return events;
}

std::vector<UsageEvent> load_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  try {
    return parse_log(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.detail());
  }
}

std::string format_event(const UsageEvent& e) {
  std::ostringstream out;
  out.precision(17);
  out << e.t << ' ' << to_string(e.kind);
  switch (e.kind) {
    case EventKind::kPress:
    case EventKind::kRelease:
    case EventKind::kGaze: out << ' ' << e.point.x << ' ' << e.point.y; break;
    case EventKind::kContext: out << ' ' << to_string(e.context); break;
    case EventKind::kFrame: break;
  }
  return out.str();
}

}  // namespace tricam::click

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>

#include "tricam/clickcalib.hpp"
#include "tricam/error.hpp"

namespace tricam::click {

void FilterCriteria::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::kInvalidArgument, std::string(what) + " must be positive");
    }
  };
  if (allowed_contexts.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "allowed_contexts must not be empty");
  }
  positive(max_duration_s, "max_duration_s");
  positive(corner_margin_px, "corner_margin_px");
  positive(frame_rate_hz, "frame_rate_hz");
  positive(post_release_s, "post_release_s");
  positive(max_gaze_gap_s, "max_gaze_gap_s");
}

nlohmann::json criteria_to_json(const FilterCriteria& c) {
  std::vector<std::string> ctx;
  for (auto a : c.allowed_contexts) ctx.emplace_back(to_string(a));
  return {{"allowed_contexts", ctx},
          {"max_duration_s", c.max_duration_s},
          {"corner_margin_px", c.corner_margin_px},
          {"corner_metric", c.corner_metric == CornerMetric::kEuclidean ? "euclidean" : "chebyshev"},
          {"frame_rate_hz", c.frame_rate_hz},
          {"post_release_s", c.post_release_s},
          {"max_gaze_gap_s", c.max_gaze_gap_s}};
}

FilterCriteria criteria_from_json(const nlohmann::json& doc) {
  FilterCriteria c;
  try {
    if (doc.contains("allowed_contexts")) {
      c.allowed_contexts.clear();
      for (const auto& label : doc.at("allowed_contexts")) {
        c.allowed_contexts.insert(parse_context(label.get<std::string>()));
      }
    }
    c.max_duration_s = doc.value("max_duration_s", c.max_duration_s);
    c.corner_margin_px = doc.value("corner_margin_px", c.corner_margin_px);
    c.frame_rate_hz = doc.value("frame_rate_hz", c.frame_rate_hz);
    c.post_release_s = doc.value("post_release_s", c.post_release_s);
    c.max_gaze_gap_s = doc.value("max_gaze_gap_s", c.max_gaze_gap_s);
    const std::string metric = doc.value("corner_metric", std::string("euclidean"));
    if (metric == "euclidean") {
      c.corner_metric = CornerMetric::kEuclidean;
    } else if (metric == "chebyshev") {
      c.corner_metric = CornerMetric::kChebyshev;
    } else {
      throw Error(ErrorKind::kMalformed, "corner_metric must be euclidean or chebyshev");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kMalformed, std::string("criteria: ") + e.what());
  }
  c.validate();
  return c;
}

FilterCriteria load_criteria(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  try {
    return criteria_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kMalformed, path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.detail());
  }
}

std::vector<ClickOpportunity> detect_clicks(const std::vector<UsageEvent>& log) {
  std::vector<ClickOpportunity> out;
  AppContext context = AppContext::kOther;
  std::optional<ClickOpportunity> pending;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const UsageEvent& e = log[i];
    if (i > 0 && e.t < log[i - 1].t) {
      const std::size_t where = e.line ? e.line : i + 1;
      throw Error(ErrorKind::kUnsorted, "event " + std::to_string(where) + " goes back in time");
    }
    switch (e.kind) {
      case EventKind::kContext: context = e.context; break;
      case EventKind::kPress:
        pending = ClickOpportunity{0, e.t, e.t, e.point, context};
        break;
      case EventKind::kRelease:
        if (pending) {
          pending->release_t = e.t;
          pending->id = out.size();
          out.push_back(*pending);
          pending.reset();
        }
        break;
      default: break;
    }
  }
  return out;
}

std::vector<ClickOpportunity> filter_context(const std::vector<ClickOpportunity>& opps,
                                             const FilterCriteria& c) {
  std::vector<ClickOpportunity> out;
  std::copy_if(opps.begin(), opps.end(), std::back_inserter(out),
               [&](const ClickOpportunity& o) { return c.allowed_contexts.contains(o.context); });
  return out;
}

std::vector<ClickOpportunity> filter_duration(const std::vector<ClickOpportunity>& opps,
                                              const FilterCriteria& c) {
  std::vector<ClickOpportunity> out;
  std::copy_if(opps.begin(), opps.end(), std::back_inserter(out), [&](const ClickOpportunity& o) {
    return o.duration() <= c.max_duration_s + kTimeSlack;
  });
  return out;
}

double corner_distance(const geometry::PixelPoint& p, const geometry::ScreenModel& screen,
                       CornerMetric metric) {
  const double w = screen.width_px, h = screen.height_px;
  const geometry::PixelPoint corners[] = {{0, 0}, {w, 0}, {0, h}, {w, h}};
  double best = std::numeric_limits<double>::infinity();
  for (const auto& k : corners) {
    const double dx = std::abs(p.x - k.x), dy = std::abs(p.y - k.y);
    best = std::min(best, metric == CornerMetric::kEuclidean ? std::hypot(dx, dy) : std::max(dx, dy));
  }
  return best;
}

std::vector<ClickOpportunity> filter_location(const std::vector<ClickOpportunity>& opps,
                                              const FilterCriteria& c,
                                              const geometry::ScreenModel& screen) {
  std::vector<ClickOpportunity> out;
  std::copy_if(opps.begin(), opps.end(), std::back_inserter(out), [&](const ClickOpportunity& o) {
    return corner_distance(o.cursor, screen, c.corner_metric) >= c.corner_margin_px;
  });
  return out;
}

std::string_view to_string(Phase p) {
  return p == Phase::kPressWindow ? "press_window" : "post_release";
}

std::vector<AlignedClickSample> extract_samples(const ClickOpportunity& opp,
                                                const FilterCriteria& c) {
  std::vector<AlignedClickSample> out;
  const double period = 1.0 / c.frame_rate_hz;
  const double window_end = std::min(opp.release_t, opp.press_t + c.max_duration_s);
  for (std::size_t k = 0;; ++k) {
    const double t = opp.press_t + static_cast<double>(k) * period;
    if (t > window_end + kTimeSlack) break;
    out.push_back({t, opp.cursor, opp.id, Phase::kPressWindow});
  }
  const auto post = static_cast<std::size_t>(std::floor(c.post_release_s * c.frame_rate_hz + kTimeSlack));
  for (std::size_t k = 1; k <= post; ++k) {
    out.push_back({opp.release_t + static_cast<double>(k) * period, opp.cursor, opp.id,
                   Phase::kPostRelease});
  }
  return out;
}

std::vector<GazePoint> gaze_stream(const std::vector<UsageEvent>& log) {
  std::vector<GazePoint> out;
  for (const auto& e : log)
    if (e.kind == EventKind::kGaze) out.push_back({e.t, e.point});
  return out;
}

std::optional<GazePoint> nearest_gaze(const std::vector<GazePoint>& stream, double t,
                                      double max_gap) {
  if (stream.empty()) return std::nullopt;
  auto it = std::lower_bound(stream.begin(), stream.end(), t,
                             [](const GazePoint& g, double v) { return g.t < v; });
  const GazePoint* best = nullptr;
  if (it != stream.end()) best = &*it;
  if (it != stream.begin()) {
    const GazePoint& prev = *std::prev(it);
    if (!best || t - prev.t <= best->t - t) best = &prev;
  }
  if (std::abs(best->t - t) > max_gap + kTimeSlack) return std::nullopt;
  return *best;
}

}  // namespace tricam::click

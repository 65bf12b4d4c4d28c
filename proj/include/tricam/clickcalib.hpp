#pragma once

// Implicit calibration from mouse clicks: replay a usage log, pair presses
// with releases, filter by application context (A), press duration (B) and
// screen-corner distance (C), then list the frame times at which eye images
// would be captured.
//
// Event log: one event per line, whitespace separated, '#' starts a comment.
//
//   <t_seconds> press   <x_px> <y_px>
//   <t_seconds> release <x_px> <y_px>
//   <t_seconds> context <label>
//   <t_seconds> gaze    <x_px> <y_px>
//   <t_seconds> frame
//
// Times must be non-decreasing.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tricam/geometry.hpp"

namespace tricam::click {

enum class EventKind { kPress, kRelease, kContext, kGaze, kFrame };

enum class AppContext { kFileManaging, kBrowsing, kTextEditing, kVideo, kGaming, kOther };

inline constexpr AppContext kAllContexts[] = {AppContext::kFileManaging, AppContext::kBrowsing,
                                              AppContext::kTextEditing,  AppContext::kVideo,
                                              AppContext::kGaming,       AppContext::kOther};

std::string_view to_string(AppContext c);
std::string_view to_string(EventKind k);
/// Throws Error(kMalformed) for unknown labels.
AppContext parse_context(std::string_view label);

struct UsageEvent {
  double t = 0.0;
  EventKind kind = EventKind::kFrame;
  geometry::PixelPoint point;  // cursor for press/release, gaze point for gaze
  AppContext context = AppContext::kOther;
  std::size_t line = 0;  // 1-based source line, 0 when built in memory
};

/// Throws Error(kMalformed) naming the line for bad records and
/// Error(kUnsorted) naming the first line whose time goes backwards.
std::vector<UsageEvent> parse_log(std::istream& in);
std::vector<UsageEvent> load_log(const std::filesystem::path& path);
std::string format_event(const UsageEvent& e);

struct ClickOpportunity {
  std::size_t id = 0;
  double press_t = 0.0;
  double release_t = 0.0;
  geometry::PixelPoint cursor;  // position at press time
  AppContext context = AppContext::kOther;

  double duration() const { return release_t - press_t; }
};

enum class CornerMetric { kEuclidean, kChebyshev };

struct FilterCriteria {
  std::set<AppContext> allowed_contexts{AppContext::kFileManaging, AppContext::kBrowsing,
                                        AppContext::kTextEditing};
  double max_duration_s = 0.1;
  double corner_margin_px = 100.0;
  double frame_rate_hz = 30.0;
  double post_release_s = 0.2;
  CornerMetric corner_metric = CornerMetric::kEuclidean;
  double max_gaze_gap_s = 0.05;

  /// Throws Error(kInvalidArgument).
  void validate() const;
};

nlohmann::json criteria_to_json(const FilterCriteria& c);
FilterCriteria criteria_from_json(const nlohmann::json& doc);
FilterCriteria load_criteria(const std::filesystem::path& path);

/// Slack for comparisons of times derived by floating-point arithmetic, so
/// that e.g. a 0.1 s press whose endpoints are 1.0 and 1.1 counts as 0.1 s.
inline constexpr double kTimeSlack = 1e-9;

/// Pairs each press with the next release; a press followed by another press
/// is dropped, as is a trailing press. Context is the latest context event
/// at press time (other when none). Throws Error(kUnsorted).
std::vector<ClickOpportunity> detect_clicks(const std::vector<UsageEvent>& log);

/// Criterion A.
std::vector<ClickOpportunity> filter_context(const std::vector<ClickOpportunity>& opps,
                                             const FilterCriteria& c);
/// Criterion B, inclusive bound.
std::vector<ClickOpportunity> filter_duration(const std::vector<ClickOpportunity>& opps,
                                              const FilterCriteria& c);
/// Criterion C: drops clicks closer than the margin to any screen corner.
std::vector<ClickOpportunity> filter_location(const std::vector<ClickOpportunity>& opps,
                                              const FilterCriteria& c,
                                              const geometry::ScreenModel& screen);
double corner_distance(const geometry::PixelPoint& p, const geometry::ScreenModel& screen,
                       CornerMetric metric);

enum class Phase { kPressWindow, kPostRelease };
std::string_view to_string(Phase p);

struct AlignedClickSample {
  double capture_t = 0.0;
  geometry::PixelPoint cursor;
  std::size_t opportunity = 0;
  Phase phase = Phase::kPressWindow;
};

/// Frame times press_t + k/fps up to min(release_t, press_t + max_duration),
/// then release_t + k/fps for k = 1..floor(post_release_s * fps).
std::vector<AlignedClickSample> extract_samples(const ClickOpportunity& opp,
                                                const FilterCriteria& c);

struct GazePoint {
  double t = 0.0;
  geometry::PixelPoint point;
};
std::vector<GazePoint> gaze_stream(const std::vector<UsageEvent>& log);

/// Gaze point closest in time to t (earlier wins ties), or nullopt when the
/// gap exceeds max_gap. stream must be sorted by time.
std::optional<GazePoint> nearest_gaze(const std::vector<GazePoint>& stream, double t,
                                      double max_gap);

struct StageStats {
  std::size_t count = 0;
  std::size_t matched = 0;  // clicks with a gaze point inside the gap
  double mean_error_cm = 0.0;
};

struct ContextStats {
  std::size_t clicks = 0;
  std::size_t matched = 0;
  double mean_error_cm = 0.0;
};

struct AlignmentReport {
  StageStats raw, after_a, after_b, after_c;
  std::map<AppContext, ContextStats> per_context;  // over raw clicks
  std::vector<ClickOpportunity> accepted;
  std::vector<std::size_t> samples_per_opportunity;  // parallel to accepted
  std::vector<AlignedClickSample> samples;
  double samples_per_click = 0.0;
  double log_minutes = 0.0;
  double samples_per_minute = 0.0;
};

/// Runs the full pipeline over a log. Click errors use the gaze point
/// nearest to press_t. Throws Error(kNoObservation) if clicks exist but the
/// gaze stream is empty.
AlignmentReport alignment_report(const std::vector<UsageEvent>& log,
                                 const std::vector<GazePoint>& gaze, const FilterCriteria& c,
                                 const geometry::ScreenModel& screen);

/// Tab-separated per-stage and per-context tables.
std::string report_table(const AlignmentReport& r);
nlohmann::json report_json(const AlignmentReport& r);
/// One line per extracted sample: capture time, cursor, opportunity, phase.
std::string samples_table(const AlignmentReport& r);

}  // namespace tricam::click

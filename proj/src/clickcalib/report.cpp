#include <iomanip>
#include <sstream>

#include "tricam/clickcalib.hpp"
#include "tricam/error.hpp"

namespace tricam::click {

namespace {

struct Accum {
  std::size_t count = 0, matched = 0;
  double sum = 0.0;
};

}  // namespace

AlignmentReport alignment_report(const std::vector<UsageEvent>& log,
                                 const std::vector<GazePoint>& gaze, const FilterCriteria& c,
                                 const geometry::ScreenModel& screen) {
  c.validate();
  AlignmentReport r;
  const auto raw = detect_clicks(log);
  if (!raw.empty() && gaze.empty()) {
    throw Error(ErrorKind::kNoObservation, "gaze stream is empty");
  }
  const auto after_a = filter_context(raw, c);
  const auto after_b = filter_duration(after_a, c);
  const auto after_c = filter_location(after_b, c, screen);

  // Alignment error per raw click, indexed by opportunity id.
  std::vector<std::optional<double>> err(raw.size());
  for (const auto& o : raw) {
    if (auto g = nearest_gaze(gaze, o.press_t, c.max_gaze_gap_s)) {
      err[o.id] = geometry::pixel_distance_cm(screen, o.cursor, g->point);
    }
  }
  auto stage = [&](const std::vector<ClickOpportunity>& opps) {
    Accum a;
    for (const auto& o : opps) {
      ++a.count;
      if (err[o.id]) {
        ++a.matched;
        a.sum += *err[o.id];
      }
    }
    return StageStats{a.count, a.matched, a.matched ? a.sum / static_cast<double>(a.matched) : 0.0};
  };
  r.raw = stage(raw);
  r.after_a = stage(after_a);
  r.after_b = stage(after_b);
  r.after_c = stage(after_c);

  std::map<AppContext, Accum> ctx;
  for (const auto& o : raw) {
    Accum& a = ctx[o.context];
    ++a.count;
    if (err[o.id]) {
      ++a.matched;
      a.sum += *err[o.id];
    }
  }
  for (const auto& [k, a] : ctx) {
    r.per_context[k] = {a.count, a.matched, a.matched ? a.sum / static_cast<double>(a.matched) : 0.0};
  }

  r.accepted = after_c;
  for (const auto& o : after_c) {
    auto s = extract_samples(o, c);
    r.samples_per_opportunity.push_back(s.size());
    r.samples.insert(r.samples.end(), s.begin(), s.end());
  }
  if (!after_c.empty()) {
    r.samples_per_click = static_cast<double>(r.samples.size()) / static_cast<double>(after_c.size());
  }
  if (log.size() >= 2) r.log_minutes = (log.back().t - log.front().t) / 60.0;
  if (r.log_minutes > 0.0) {
    r.samples_per_minute = static_cast<double>(r.samples.size()) / r.log_minutes;
  }
  return r;
}

std::string report_table(const AlignmentReport& r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "stage\tclicks\tmatched\tmean_error_cm\n";
  const std::pair<const char*, const StageStats*> stages[] = {
      {"raw", &r.raw}, {"criterion_a", &r.after_a}, {"criterion_b", &r.after_b},
      {"criterion_c", &r.after_c}};
  for (const auto& [name, s] : stages) {
    out << name << '\t' << s->count << '\t' << s->matched << '\t' << s->mean_error_cm << '\n';
  }
  out << "\ncontext\tclicks\tmatched\tmean_error_cm\n";
  for (const auto& [k, s] : r.per_context) {
    out << to_string(k) << '\t' << s.clicks << '\t' << s.matched << '\t' << s.mean_error_cm << '\n';
  }
  out << "\nsamples\tsamples_per_click\tlog_minutes\tsamples_per_minute\n";
  out << r.samples.size() << '\t' << r.samples_per_click << '\t' << r.log_minutes << '\t'
      << r.samples_per_minute << '\n';
  return out.str();
}

nlohmann::json report_json(const AlignmentReport& r) {
  auto stage = [](const StageStats& s) {
    return nlohmann::json{{"clicks", s.count}, {"matched", s.matched}, {"mean_error_cm", s.mean_error_cm}};
  };
  nlohmann::json ctx = nlohmann::json::object();
  for (const auto& [k, s] : r.per_context) {
    ctx[std::string(to_string(k))] = {
        {"clicks", s.clicks}, {"matched", s.matched}, {"mean_error_cm", s.mean_error_cm}};
  }
  return {{"stage_counts", {r.raw.count, r.after_a.count, r.after_b.count, r.after_c.count}},
          {"stages",
           {{"raw", stage(r.raw)},
            {"criterion_a", stage(r.after_a)},
            {"criterion_b", stage(r.after_b)},
            {"criterion_c", stage(r.after_c)}}},
          {"per_context", ctx},
          {"samples_per_opportunity", r.samples_per_opportunity},
          {"samples", r.samples.size()},
          {"samples_per_click", r.samples_per_click},
          {"log_minutes", r.log_minutes},
          {"samples_per_minute", r.samples_per_minute}};
}

std::string samples_table(const AlignmentReport& r) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "capture_t\tcursor_x\tcursor_y\topportunity\tphase\n";
  for (const auto& s : r.samples) {
    out << s.capture_t << '\t' << s.cursor.x << '\t' << s.cursor.y << '\t' << s.opportunity << '\t'
        << to_string(s.phase) << '\n';
  }
  return out.str();
}

}  // namespace tricam::click

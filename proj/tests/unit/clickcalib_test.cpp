#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "tricam/clickcalib.hpp"
#include "tricam/error.hpp"

using namespace tricam;
using namespace tricam::click;

namespace {

const geometry::ScreenModel kScreen = geometry::reference_screen();

UsageEvent ev(double t, EventKind k, double x = 0, double y = 0) {
  UsageEvent e;
  e.t = t;
  e.kind = k;
  e.point = {x, y};
  return e;
}

UsageEvent ctx(double t, AppContext c) {
  UsageEvent e;
  e.t = t;
  e.kind = EventKind::kContext;
  e.context = c;
  return e;
}

ClickOpportunity opp(double press, double release, double x = 960, double y = 540,
                     AppContext c = AppContext::kBrowsing) {
  return {0, press, release, {x, y}, c};
}

std::vector<UsageEvent> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_log(in);
}

std::size_t count_phase(const std::vector<AlignedClickSample>& s, Phase p) {
  std::size_t n = 0;
  for (const auto& a : s) n += a.phase == p;
  return n;
}

// Random log with interleaved contexts, presses, releases and gaze samples.
std::vector<UsageEvent> random_log(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> gap(0.0, 0.5), px(0, 1920), py(0, 1080), dur(0.0, 0.3);
  std::uniform_int_distribution<int> pick(0, 9), cpick(0, 5);
  std::vector<UsageEvent> log;
  double t = 0;
  const int n = std::uniform_int_distribution<int>(0, 40)(rng);
  for (int i = 0; i < n; ++i) {
    t += gap(rng);
    const int k = pick(rng);
    if (k == 0) {
      log.push_back(ctx(t, kAllContexts[cpick(rng)]));
    } else if (k <= 2) {
      log.push_back(ev(t, EventKind::kGaze, px(rng), py(rng)));
    } else if (k == 3) {
      log.push_back(ev(t, EventKind::kPress, px(rng), py(rng)));  // may be orphaned
    } else {
      const double x = px(rng), y = py(rng);
      log.push_back(ev(t, EventKind::kGaze, x + 5, y));
      log.push_back(ev(t, EventKind::kPress, x, y));
      t += dur(rng);
      log.push_back(ev(t, EventKind::kRelease, x, y));
    }
  }
  return log;
}

std::vector<double> press_times(const std::vector<ClickOpportunity>& v) {
  std::vector<double> out;
  for (const auto& o : v) out.push_back(o.press_t);
  return out;
}

}  // namespace

TEST(Parse, ReadsAllKinds) {
  const auto log = parse("# header\n0.5 context text_editing\n1 press 10 20\n1.05 release 11 21\n"
                         "\n1.1 gaze 3.5 4\n2 frame   # trailing comment\n");
  ASSERT_EQ(log.size(), 5u);
  EXPECT_EQ(log[0].context, AppContext::kTextEditing);
  EXPECT_EQ(log[1].kind, EventKind::kPress);
  EXPECT_EQ(log[1].point.x, 10.0);
  EXPECT_EQ(log[3].point.x, 3.5);
  EXPECT_EQ(log[4].kind, EventKind::kFrame);
  EXPECT_EQ(log[4].line, 7u);
}

TEST(Parse, MalformedNamesLine) {
  const char* bad[] = {"1 press 10\n", "1 hover 1 2\n", "x press 1 2\n", "1 context chess\n",
                       "1 frame extra\n", "1.0abc frame\n"};
  for (const char* text : bad) {
    try {
      parse(std::string("0 frame\n") + text);
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kMalformed) << text;
      EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
  }
}

TEST(Parse, UnsortedNamesFirstOffendingLine) {
  try {
    parse("1 frame\n2 frame\n1.5 frame\n0.1 frame\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnsorted);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Parse, FormatRoundTrip) {
  std::mt19937_64 rng(5);
  const auto log = random_log(rng);
  std::string text;
  for (const auto& e : log) text += format_event(e) + "\n";
  const auto back = parse(text);
  ASSERT_EQ(back.size(), log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    EXPECT_EQ(back[i].t, log[i].t);
    EXPECT_EQ(back[i].kind, log[i].kind);
    EXPECT_EQ(back[i].point.x, log[i].point.x);
  }
}

TEST(Detect, SingleClick) {
  const auto c = detect_clicks({ev(1.0, EventKind::kPress, 5, 6), ev(1.05, EventKind::kRelease, 7, 8)});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_NEAR(c[0].duration(), 0.05, 1e-12);
  EXPECT_EQ(c[0].cursor.x, 5.0);
  EXPECT_EQ(c[0].context, AppContext::kOther);
}

TEST(Detect, SecondPressReplacesFirst) {
  const auto c = detect_clicks({ev(1.0, EventKind::kPress), ev(2.0, EventKind::kPress),
                                ev(2.1, EventKind::kRelease)});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].press_t, 2.0);
  EXPECT_EQ(c[0].release_t, 2.1);
}

TEST(Detect, EmptyAndOrphans) {
  EXPECT_TRUE(detect_clicks({}).empty());
  EXPECT_TRUE(detect_clicks({ev(1, EventKind::kRelease), ev(2, EventKind::kPress)}).empty());
}

TEST(Detect, ContextIsLatestAtPress) {
  const auto c = detect_clicks({ctx(0, AppContext::kVideo), ctx(1, AppContext::kBrowsing),
                                ev(2, EventKind::kPress), ctx(2.01, AppContext::kGaming),
                                ev(2.05, EventKind::kRelease)});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].context, AppContext::kBrowsing);
}

TEST(Detect, UnsortedInMemoryLog) {
  try {
    detect_clicks({ev(2, EventKind::kPress), ev(1, EventKind::kRelease)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnsorted);
  }
}

TEST(FilterContext, Rules) {
  const FilterCriteria c;
  EXPECT_TRUE(filter_context({opp(0, 0.05, 960, 540, AppContext::kGaming)}, c).empty());
  EXPECT_EQ(filter_context({opp(0, 0.05, 960, 540, AppContext::kTextEditing)}, c).size(), 1u);
  EXPECT_TRUE(filter_context({}, c).empty());
}

TEST(FilterDuration, Rules) {
  const FilterCriteria c;
  EXPECT_EQ(filter_duration({opp(1, 1.0786)}, c).size(), 1u);
  EXPECT_TRUE(filter_duration({opp(1, 1.25)}, c).empty());
  EXPECT_EQ(filter_duration({opp(1.0, 1.1)}, c).size(), 1u);  // inclusive
  EXPECT_TRUE(filter_duration({opp(1.0, 1.1001)}, c).empty());
}

TEST(FilterLocation, Rules) {
  const FilterCriteria c;
  EXPECT_TRUE(filter_location({opp(0, 0.05, 50, 50)}, c, kScreen).empty());
  EXPECT_EQ(filter_location({opp(0, 0.05, 960, 540)}, c, kScreen).size(), 1u);
  EXPECT_NEAR(corner_distance({1820, 100}, kScreen, CornerMetric::kEuclidean),
              std::sqrt(100.0 * 100 + 100.0 * 100), 1e-12);
  EXPECT_EQ(filter_location({opp(0, 0.05, 1820, 100)}, c, kScreen).size(), 1u);
}

TEST(FilterLocation, ChebyshevOption) {
  FilterCriteria c;
  c.corner_metric = CornerMetric::kChebyshev;
  // 80 px along x, 90 px along y from (0, 0): radial 120 px, per-axis 90 px.
  EXPECT_TRUE(filter_location({opp(0, 0.05, 80, 90)}, c, kScreen).empty());
  c.corner_metric = CornerMetric::kEuclidean;
  EXPECT_EQ(filter_location({opp(0, 0.05, 80, 90)}, c, kScreen).size(), 1u);
}

TEST(Extract, PressWindowCounts) {
  const FilterCriteria c;
  EXPECT_EQ(count_phase(extract_samples(opp(5.0, 5.01), c), Phase::kPressWindow), 1u);
  EXPECT_EQ(count_phase(extract_samples(opp(5.0, 5.065), c), Phase::kPressWindow), 2u);
  EXPECT_EQ(count_phase(extract_samples(opp(5.0, 5.067), c), Phase::kPressWindow), 3u);
}

TEST(Extract, SixPostReleaseSamples) {
  const FilterCriteria c;
  for (double d : {0.0, 0.01, 0.05, 0.1}) {
    const auto s = extract_samples(opp(3.0, 3.0 + d), c);
    EXPECT_EQ(count_phase(s, Phase::kPostRelease), 6u);
  }
}

TEST(Extract, TimestampsInsideWindows) {
  const FilterCriteria c;
  const ClickOpportunity o = opp(7.0, 7.0786);
  for (const auto& s : extract_samples(o, c)) {
    EXPECT_EQ(s.cursor.x, 960.0);
    if (s.phase == Phase::kPressWindow) {
      EXPECT_GE(s.capture_t, o.press_t);
      EXPECT_LE(s.capture_t, std::min(o.release_t, o.press_t + c.max_duration_s) + kTimeSlack);
    } else {
      EXPECT_GT(s.capture_t, o.release_t);
      EXPECT_LE(s.capture_t, o.release_t + c.post_release_s + kTimeSlack);
    }
  }
}

TEST(Extract, CountFormulaProperty) {
  const FilterCriteria c;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(0.0, 0.1), start(0, 1000);
  for (int i = 0; i < 1000; ++i) {
    const double p = start(rng), dur = d(rng);
    const auto s = extract_samples(opp(p, p + dur), c);
    // Direct enumeration of frame times, independent of the formula.
    std::size_t direct = 0;
    for (int k = 0; k < 100; ++k) direct += k / 30.0 <= std::min(dur, 0.1) + 1e-9;
    EXPECT_EQ(count_phase(s, Phase::kPressWindow), direct);
    EXPECT_EQ(count_phase(s, Phase::kPressWindow),
              static_cast<std::size_t>(std::floor(std::min(dur, 0.1) * 30 + 1e-9)) + 1);
    EXPECT_EQ(count_phase(s, Phase::kPostRelease), 6u);
  }
}

TEST(Gaze, NearestWithinGap) {
  const std::vector<GazePoint> g{{1.0, {1, 1}}, {1.04, {2, 2}}, {2.0, {3, 3}}};
  EXPECT_EQ(nearest_gaze(g, 1.01, 0.05)->point.x, 1.0);
  EXPECT_EQ(nearest_gaze(g, 1.02, 0.05)->point.x, 1.0);  // tie: earlier wins
  EXPECT_EQ(nearest_gaze(g, 1.03, 0.05)->point.x, 2.0);
  EXPECT_FALSE(nearest_gaze(g, 1.5, 0.05).has_value());
  EXPECT_FALSE(nearest_gaze({}, 1.0, 0.05).has_value());
}

TEST(Report, ErrorsInCentimeters) {
  const FilterCriteria c;
  const std::vector<UsageEvent> log{ev(1, EventKind::kPress, 500, 500), ev(1.05, EventKind::kRelease, 500, 500)};
  const auto same = alignment_report(log, {{1.0, {500, 500}}}, c, kScreen);
  EXPECT_EQ(same.raw.mean_error_cm, 0.0);
  const auto off = alignment_report(log, {{1.0, {821.146, 500}}}, c, kScreen);
  EXPECT_NEAR(off.raw.mean_error_cm, 10.0, 1e-3);
  EXPECT_NEAR(off.raw.mean_error_cm, 321.146 * 59.789 / 1920.0, 1e-12);
}

TEST(Report, EmptyGazeStream) {
  const std::vector<UsageEvent> log{ev(1, EventKind::kPress), ev(1.05, EventKind::kRelease)};
  try {
    alignment_report(log, {}, FilterCriteria{}, kScreen);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNoObservation);
  }
  const auto empty = alignment_report({}, {}, FilterCriteria{}, kScreen);
  EXPECT_EQ(empty.raw.count, 0u);
  EXPECT_EQ(empty.samples.size(), 0u);
}

TEST(Report, Fixture) {
  const auto log = load_log(TRICAM_FIXTURE_DIR "/click_fixture.log");
  const auto r = alignment_report(log, gaze_stream(log), FilterCriteria{}, kScreen);
  EXPECT_EQ(r.raw.count, 5u);
  EXPECT_EQ(r.after_a.count, 4u);
  EXPECT_EQ(r.after_b.count, 3u);
  EXPECT_EQ(r.after_c.count, 3u);
  ASSERT_EQ(r.accepted.size(), 3u);
  const std::size_t press[] = {1, 3, 3};
  std::size_t offset = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<AlignedClickSample> mine(r.samples.begin() + static_cast<std::ptrdiff_t>(offset),
                                         r.samples.begin() + static_cast<std::ptrdiff_t>(offset + r.samples_per_opportunity[i]));
    EXPECT_EQ(count_phase(mine, Phase::kPressWindow), press[i]);
    EXPECT_EQ(count_phase(mine, Phase::kPostRelease), 6u);
    offset += r.samples_per_opportunity[i];
  }
  EXPECT_NEAR(r.log_minutes, 1.0, 1e-12);
  EXPECT_NEAR(r.samples_per_minute, 25.0, 1e-9);
  EXPECT_NEAR(r.samples_per_click, 25.0 / 3.0, 1e-12);
  const auto j = report_json(r);
  EXPECT_EQ(j["stage_counts"], (nlohmann::json{5, 4, 3, 3}));
}

TEST(Report, PropertiesOnRandomLogs) {
  std::mt19937_64 rng(2024);
  const FilterCriteria c;
  for (int i = 0; i < 1000; ++i) {
    const auto log = random_log(rng);
    const auto gaze = gaze_stream(log);
    const auto raw = detect_clicks(log);
    if (raw.empty() || gaze.empty()) continue;
    const auto r = alignment_report(log, gaze, c, kScreen);
    EXPECT_LE(r.after_c.count, r.after_b.count);
    EXPECT_LE(r.after_b.count, r.after_a.count);
    EXPECT_LE(r.after_a.count, r.raw.count);

    const auto abc = filter_location(filter_duration(filter_context(raw, c), c), c, kScreen);
    const auto cba = filter_context(filter_duration(filter_location(raw, c, kScreen), c), c);
    const auto bca = filter_context(filter_location(filter_duration(raw, c), c, kScreen), c);
    EXPECT_EQ(press_times(abc), press_times(cba));
    EXPECT_EQ(press_times(abc), press_times(bca));

    const auto again = alignment_report(log, gaze, c, kScreen);
    EXPECT_EQ(report_json(again), report_json(r));
  }
}

TEST(Criteria, JsonRoundTripAndValidation) {
  FilterCriteria c;
  c.allowed_contexts = {AppContext::kVideo};
  c.corner_metric = CornerMetric::kChebyshev;
  const auto back = criteria_from_json(criteria_to_json(c));
  EXPECT_EQ(back.allowed_contexts, c.allowed_contexts);
  EXPECT_EQ(back.corner_metric, c.corner_metric);
  EXPECT_THROW(criteria_from_json({{"max_duration_s", -1}}), Error);
  EXPECT_THROW(criteria_from_json({{"allowed_contexts", nlohmann::json::array()}}), Error);
  EXPECT_THROW(criteria_from_json({{"allowed_contexts", {"chess"}}}), Error);
}

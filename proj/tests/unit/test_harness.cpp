#include <doctest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "plprep/error.hpp"
#include "plprep/harness/contour.hpp"
#include "plprep/harness/experiment.hpp"
#include "plprep/harness/parallel.hpp"
#include "plprep/harness/studies.hpp"

using namespace plprep;

TEST_CASE("statistic ids") {
  const auto a = StatisticId::parse("pw_w:e");
  CHECK(a.kind == StatisticKind::PW_W);
  CHECK(a.provenance == InfoProvenance::HatAtThetaHat);
  CHECK(a.label() == "pw_w^e");
  CHECK(a.needs_estimate());
  CHECK(StatisticId::parse("pw_s").provenance == InfoProvenance::McTrue);
  CHECK(StatisticId::parse("pw_s").label() == "pw_s");
  CHECK(StatisticId::parse("w").full_lr);
  CHECK(StatisticId::parse("pw_us").provenance_label() == "none");
  CHECK_THROWS(StatisticId::parse("pw_s:x"));
}

TEST_CASE("grid layout is row-major") {
  GridSpec g;
  g.free = {1, 2};
  g.axes = {{0.5, 1.5, 3}, {0.0, 0.4, 5}};
  CHECK(g.size() == 15);
  CHECK(g.point(0)(0) == 0.5);
  CHECK(g.point(1)(1) == doctest::Approx(0.1));
  CHECK(g.point(5)(0) == 1.0);
  CHECK(g.point(14)(1) == doctest::Approx(0.4));
}

TEST_CASE("spec parsing") {
  const std::string text = R"({"study":"rejection","model":{"type":"mvn","q":4,"theta":[0,1,0.5]},
    "n":20,"statistics":["pw_us","pw:n"],"trials":3,"B":39,"M":20,"seed":9,"threads":2})";
  const ExperimentSpec s = parse_spec_json(text);
  CHECK(s.model.q == 4);
  CHECK(s.statistics.size() == 2);
  CHECK(s.alphas.size() == 3);
  CHECK(s.threads == 2);
  const ExperimentSpec t = parse_spec_json(spec_to_json(s));
  CHECK(t.statistics == s.statistics);
  CHECK(t.B == 39);
  CHECK_THROWS_AS(parse_spec_json("{"), ParseError);
  CHECK_THROWS(parse_spec_json(R"({"model":{"type":"mvn","q":4,"theta":[0,1]}})").validate());
  CHECK_THROWS(parse_spec_json(R"({"study":"coverage","model":{"type":"mvn","q":4,"theta":[0,1,0.5]}})").validate());
}

TEST_CASE("six significant digits") {
  CHECK(format6(0.123456789) == "0.123457");
  CHECK(format6(1234567.0) == "1.23457e+06");
  CHECK(format6(0.05) == "0.05");
}

TEST_CASE("parallel_for covers every index and rethrows the first failure") {
  std::vector<std::atomic<int>> hit(100);
  parallel_for(100, 4, [&](std::size_t i, std::size_t w) {
    CHECK(w < 4);
    hit[i]++;
  });
  for (auto& h : hit) CHECK(h.load() == 1);
  try {
    parallel_for(50, 3, [](std::size_t i, std::size_t) {
      if (i == 7 || i == 30) throw std::runtime_error(std::to_string(i));
    });
    FAIL("no exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "7");
  }
}

TEST_CASE("contours of a linear field are straight") {
  ContourGrid g;
  g.x = {0, 1, 2, 3};
  g.y = {0, 1, 2};
  g.z = Matrix(4, 3);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) g.z(i, j) = g.x[i];
  const auto segs = contour_segments(g, 1.5);
  CHECK(segs.size() == 2);
  for (const auto& s : segs) {
    CHECK(s.x0 == doctest::Approx(1.5));
    CHECK(s.x1 == doctest::Approx(1.5));
  }
  const std::string svg = contour_svg(g, {1.5}, "t", "x", "y");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("small rejection study is deterministic across thread counts") {
  const std::string text = R"({"study":"rejection","model":{"type":"mvn","q":3,"theta":[0,1,0.3]},
    "n":20,"statistics":["pw_us","pw","pw_s:n","w"],"alphas":[0.1,0.05],"trials":6,"B":39,"M":20,"seed":3,
    "info":{"n_mc":10000,"seed":5}})";
  ExperimentSpec s = parse_spec_json(text);
  s.threads = 1;
  const auto a = run_rejection_study(s);
  s.threads = 3;
  const auto b = run_rejection_study(s);
  CHECK(rejection_csv(a) == rejection_csv(b));
  CHECK(a.rows.size() == 8);
  const auto& r = a.find("pw_us", 0.1);
  CHECK(r.trials == 6);
  CHECK(r.hits <= 6);
  const auto d = nlohmann::json::parse(diagnostics_json(s, a));
  CHECK(d.contains("mc_true_info"));
}

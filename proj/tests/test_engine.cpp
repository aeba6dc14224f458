#include <catch_amalgamated.hpp>

#include <chrono>
#include <vector>

#include "towsync/engine.hpp"

using namespace towsync;
using Catch::Matchers::WithinAbs;

namespace {

SimConfig two_nodes(double a, double b) {
  SimConfig c;
  c.node_count = 2;
  c.initial_phases = std::vector<double>{a, b};
  return c;
}

StepDraws quiet_draws(std::size_t nodes, std::size_t channels, std::vector<double> tie_break) {
  return {std::vector<std::vector<double>>(nodes, std::vector<double>(channels, 0.0)), std::move(tie_break),
          std::vector<double>(nodes, 0.99)};
}

}  // namespace

TEST_CASE("init_world") {
  SECTION("explicit phases pass through") {
    const auto w = init_world(two_nodes(0.0, kPi));
    CHECK(w.phases[0].radians() == 0.0);
    CHECK(w.phases[1].radians() == kPi);
    CHECK(w.time == 0);
    CHECK(w.bandits[0] == BanditState::zeros(5));
  }
  SECTION("seeded initialization is reproducible") {
    SimConfig c;
    c.seed = 99;
    CHECK(init_world(c).phases == init_world(c).phases);
    c.seed = 100;
    CHECK(init_world(c).phases != init_world(SimConfig{}).phases);
  }
  SECTION("uniform initialization has mean near pi") {
    SimConfig c;
    c.node_count = 10000;
    const auto w = init_world(c);
    double sum = 0.0;
    for (Phase p : w.phases) sum += p.radians();
    // sd of the mean: 2*pi / sqrt(12 * 10000) ~= 0.0181
    CHECK(std::abs(sum / 10000.0 - kPi) < 3 * 0.0182);
  }
  SECTION("invalid config is rejected") {
    SimConfig c;
    c.channel_probs = {0.5};
    CHECK_THROWS_AS(init_world(c), ConfigError);
  }
}

TEST_CASE("a lone node only advances") {
  SimConfig c;
  c.node_count = 1;
  c.initial_phases = std::vector<double>{0.3};
  auto w = init_world(c);
  for (int n = 0; n < 16; ++n) {
    const Phase before = w.phases[0];
    step(w, c);
    CHECK(w.phases[0] == before + wrap_phase(kPi / 4));
  }
  CHECK_THAT(w.phases[0].radians(), WithinAbs(0.3, 1e-15));
}

TEST_CASE("coupling term of one step") {
  const auto c = two_nodes(0.0, 0.1);

  SECTION("same channel pushes apart") {
    auto w = init_world(c);
    const auto rec = apply_step(w, c, quiet_draws(2, 5, {0.0, 0.0}));
    REQUIRE(rec[0].channel == rec[1].channel);
    CHECK(rec[0].gated);
    CHECK(rec[0].collided);
    CHECK_THAT(w.phases[0].radians(), WithinAbs(0.7354814550740342, 1e-12));
    CHECK_THAT(w.phases[1].radians(), WithinAbs(0.1 + kPi / 4 + 0.04991670832341408, 1e-12));
  }
  SECTION("different channels pull together") {
    auto w = init_world(c);
    const auto rec = apply_step(w, c, quiet_draws(2, 5, {0.0, 0.99}));
    REQUIRE(rec[0].channel != rec[1].channel);
    CHECK_FALSE(rec[0].collided);
    CHECK_THAT(w.phases[0].radians(), WithinAbs(0.8353148717208624, 1e-12));
  }
  SECTION("ungated nodes feel no coupling") {
    const auto late = two_nodes(1.0, 1.1);
    auto w = init_world(late);
    const auto rec = apply_step(w, late, quiet_draws(2, 5, {0.0, 0.0}));
    CHECK_FALSE(rec[0].gated);
    CHECK_THAT(w.phases[0].radians(), WithinAbs(1.0 + kPi / 4, 1e-12));
  }
}

TEST_CASE("step bookkeeping") {
  SimConfig c;
  c.seed = 5;
  auto w = init_world(c);
  for (int n = 0; n < 300; ++n) {
    const auto rec = step(w, c);
    REQUIRE(rec.size() == c.node_count);
    for (const auto& r : rec) {
      CHECK(r.t == static_cast<std::uint64_t>(n));
      CHECK(r.phase >= 0.0);
      CHECK(r.phase < kTwoPi);
      CHECK((r.reward == 1.0) == r.success);
      if (r.success) CHECK_FALSE(r.collided);
    }
  }
  CHECK(w.time == 300);
  std::uint64_t plays = 0;
  for (const auto& b : w.bandits) {
    for (auto p : b.play_counts) plays += p;
  }
  CHECK(plays == 300 * c.node_count);
}

TEST_CASE("run") {
  SimConfig c;
  c.steps = 0;
  MemorySink sink;
  TraceSink* sinks[] = {&sink};
  const auto w = run(c, sinks);
  CHECK(sink.records().empty());
  CHECK(w.phases == init_world(c).phases);

  SECTION("same seed, same trace") {
    c.steps = 500;
    MemorySink a;
    MemorySink b;
    TraceSink* sa[] = {&a};
    TraceSink* sb[] = {&b};
    run(c, sa);
    run(c, sb);
    CHECK(a.records().size() == 500 * c.node_count);
    CHECK(a.records() == b.records());
  }

  SECTION("sink failures carry the step index") {
    struct Failing : TraceSink {
      void consume(std::span<const StepRecord> r) override {
        if (r.front().t == 7) throw std::runtime_error("disk full");
      }
    } failing;
    c.steps = 20;
    TraceSink* sf[] = {&failing};
    CHECK_THROWS_WITH(run(c, sf), Catch::Matchers::ContainsSubstring("step 7"));
  }

  SECTION("default scenario runs well inside the time budget") {
    c.steps = 10000;
    const auto start = std::chrono::steady_clock::now();
    run(c);
    CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(10));
  }
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "fvopt/error.hpp"
#include "fvopt/fv.hpp"
#include "fvopt/landscape.hpp"
#include "step_well.hpp"
#include "test_objectives.hpp"

using namespace fvopt;

namespace {

FvConfig config(std::size_t n, std::size_t b, std::size_t t, double alpha, double eps,
                std::uint64_t seed = 1) {
  FvConfig c;
  c.particles = n;
  c.burn_in = b;
  c.iterations = t;
  c.alpha = alpha;
  c.exploration_rate = eps;
  c.seed = seed;
  return c;
}

std::vector<Point> uniform_ansatze(std::size_t n, std::uint64_t seed) {
  Stream rng(seed);
  std::vector<Point> out;
  for (std::size_t j = 0; j < n; ++j) out.push_back({rng.uniform(), rng.uniform()});
  return out;
}

std::shared_ptr<const Landscape> landscape(std::uint64_t seed) {
  SynthesisParams p;
  p.plateau_width = 5;
  p.nominal_barren_fraction = 0.5;
  p.rng_seed = seed;
  return std::make_shared<const Landscape>(synthesize({{0, 0}, {1, 1}, 40}, p));
}

}  // namespace

TEST_CASE("configuration validation") {
  CHECK_THROWS_AS(config(1, 5, 5, 1, 0.5).validate(), Error);
  CHECK_THROWS_AS(config(4, 0, 5, 1, 0.5).validate(), Error);
  CHECK_THROWS_AS(config(4, 5, 5, -1, 0.5).validate(), Error);
  CHECK_THROWS_AS(config(4, 5, 5, 1, 1.5).validate(), Error);
  CHECK_NOTHROW(config(4, 5, 0, 0, 0.0).validate());
}

TEST_CASE("reference gradient from burn-in norms") {
  const SaParams sa;
  const auto ans = uniform_ansatze(4, 2);
  SUBCASE("alpha 0 gives 0") {
    const testobj::Linear lin({0.3, 0.4});
    FvSwarm s(config(4, 3, 5, 0.0, 0.5), lin, ans, sa);
    s.burn_in();
    CHECK(*s.ref_gradient() == 0.0);
  }
  SUBCASE("constant norms give alpha times the norm") {
    const testobj::Linear lin({0.3, 0.4});
    FvSwarm s(config(4, 3, 5, 0.7, 0.5), lin, ans, sa);
    s.burn_in();
    CHECK(*s.ref_gradient() == doctest::Approx(0.7 * 0.5));
  }
  SUBCASE("N = 2, B = 2 with norms 1..4") {
    const testobj::Scripted obj({1.0, 2.0, 3.0, 4.0}, 2 * sa.probe_count);
    FvSwarm s(config(2, 2, 5, 0.8, 0.5), obj, uniform_ansatze(2, 3), sa);
    s.burn_in();
    CHECK(*s.ref_gradient() == doctest::Approx(2.5 * 0.8));
  }
}

TEST_CASE("flat objective never absorbs") {
  const testobj::Constant flat;
  const auto out = fv_run(config(5, 3, 30, 1.0, 0.5), flat, uniform_ansatze(5, 4), SaParams{});
  CHECK(out.ref_gradient == 0.0);
  CHECK(out.events.empty());
}

TEST_CASE("alpha 0 reproduces independent SA particles") {
  const auto l = landscape(5);
  const auto obj = synthetic_objective(l);
  const SaParams sa;
  const auto cfg = config(6, 5, 40, 0.0, 0.5, 77);
  const auto ans = uniform_ansatze(6, 6);
  const auto out = fv_run(cfg, *obj, ans, sa);
  CHECK(out.events.empty());
  const Stream root(cfg.seed);
  for (std::size_t j = 0; j < 6; ++j) {
    auto p = make_particle(*obj, ans[j], sa, cfg.window, root.split(j));
    for (std::size_t k = 0; k < cfg.burn_in + cfg.iterations; ++k) sa_step(p, *obj, sa);
    CHECK(p.best.value == out.particle_best[j]);
  }
}

TEST_CASE("exploration rate 1 never reactivates") {
  const auto obj = synthetic_objective(landscape(7));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto out = fv_run(config(8, 5, 50, 1.0, 1.0, seed), *obj, uniform_ansatze(8, seed), SaParams{});
    CHECK(out.reactivations == 0);
    for (const auto& e : out.events) CHECK_FALSE(e.source.has_value());
  }
}

TEST_CASE("reinitialization resets the particle") {
  const testobj::Constant flat;
  auto p = make_particle(flat, std::array{0.5, 0.5}, SaParams{}, 5, Stream(8));
  for (int k = 0; k < 4; ++k) sa_step(p, flat, SaParams{});
  const auto best = p.best;
  reinitialize(p, flat, SaParams{});
  CHECK(p.step_index == 0);
  CHECK(p.history.empty());
  CHECK(std::isinf(windowed_grad_norm(p)));
  CHECK(p.best == best);
  CHECK(flat.domain().contains(p.position));
}

TEST_CASE("reinitialized positions are uniform") {
  const testobj::Constant flat;
  Particle p = make_particle(flat, std::array{0.5, 0.5}, SaParams{}, 5, Stream(9));
  std::vector<int> bins(100, 0);
  const int n = 10000;
  for (int t = 0; t < n; ++t) {
    reinitialize(p, flat, SaParams{});
    const auto i = static_cast<std::size_t>(p.position[0] * 10);
    const auto j = static_cast<std::size_t>(p.position[1] * 10);
    ++bins[i * 10 + j];
  }
  double chi2 = 0.0;
  for (int c : bins) chi2 += (c - 100.0) * (c - 100.0) / 100.0;
  CHECK(chi2 < 134.6);  // 99 dof, 1% level
}

TEST_CASE("reactivation copies the source") {
  const testobj::Bowl bowl({0.5, 0.5});
  SaParams sa;
  auto src = make_particle(bowl, std::array{0.1, 0.9}, sa, 5, Stream(10));
  for (int k = 0; k < 7; ++k) sa_step(src, bowl, sa);
  auto p = make_particle(bowl, std::array{0.8, 0.2}, sa, 5, Stream(11));
  sa_step(p, bowl, sa);

  const Particle* alive[] = {&src};
  CHECK(reactivate(p, alive, sa) == 0);
  CHECK(p.position == src.position);
  CHECK(p.history == src.history);
  CHECK(windowed_grad_norm(p) == windowed_grad_norm(src));
  CHECK(p.eta0 == src.eta0);
  CHECK(p.step_index == 0);

  sa_step(p, bowl, sa);
  sa_step(src, bowl, sa);
  CHECK(p.position != src.position);

  auto q = make_particle(bowl, std::array{0.8, 0.2}, sa, 5, Stream(12));
  reactivate(q, alive, sa, ReactivationRate::source_current);
  CHECK(q.eta0 == src.current_learning_rate(sa));

  try {
    reactivate(q, {}, sa);
    FAIL("expected NoAliveSource");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::no_alive_source);
  }
}

TEST_CASE("everything absorbed with epsilon 0 falls back to reinitialization") {
  const testobj::Linear lin({0.3, 0.4});
  const auto out = fv_run(config(4, 2, 3, 2.0, 0.0), lin, uniform_ansatze(4, 13), SaParams{});
  CHECK(out.absorptions == 12);
  std::size_t fallback = 0;
  for (const auto& e : out.events) fallback += e.kind == EventKind::fallback_reinitialized;
  CHECK(fallback == 12);
}

TEST_CASE("event log agrees with the absorption predicate at every iteration") {
  const auto obj = synthetic_objective(landscape(14));
  for (double eps : {0.0, 0.5, 1.0}) {
    const auto cfg = config(10, 5, 60, 1.0, eps, 15);
    FvSwarm swarm(cfg, *obj, uniform_ansatze(10, 16), SaParams{});
    swarm.burn_in();
    std::size_t seen = 0;
    for (std::size_t t = 1; t <= cfg.iterations; ++t) {
      swarm.iterate();
      const double ref = *swarm.ref_gradient();
      std::set<std::size_t> absorbed;
      const auto& ev = swarm.events();
      for (; seen < ev.size(); ++seen) {
        CHECK(ev[seen].iteration == t);
        if (ev[seen].kind == EventKind::absorbed) {
          absorbed.insert(ev[seen].particle);
          CHECK(ev[seen].window_mean < ref);
        }
        if (ev[seen].kind == EventKind::reactivated) {
          REQUIRE(ev[seen].source.has_value());
          CHECK(absorbed.count(*ev[seen].source) == 0);
        }
      }
      for (std::size_t j = 0; j < 10; ++j) {
        CHECK(swarm.particles()[j].status == ParticleStatus::alive);
        if (!absorbed.count(j)) CHECK(windowed_grad_norm(swarm.particles()[j]) >= ref);
      }
    }
    const auto out = swarm.outcome();
    CHECK(out.steps == 10 * (5 + 60));
    CHECK(out.eval_count == out.steps);  // analytic gradient: one evaluation per step
  }
}

TEST_CASE("absorption happens exactly where the window predicts") {
  const testobj::StepWell obj(4.0, 0.2, 0.5);
  SaParams sa;
  sa.temperature = 0.0;
  const std::size_t ramp = 3, well = 3, b = 3, w = 4, iters = 30;
  std::size_t with_events = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Stream rng(seed);
    const double x0 = rng.uniform(0.03, 0.17);
    std::vector<Point> ans;
    for (std::size_t j = 0; j < ramp; ++j) ans.push_back({x0, rng.uniform()});
    for (std::size_t j = 0; j < well; ++j) ans.push_back({rng.uniform(0.53, 0.97), rng.uniform()});
    auto cfg = config(ramp + well, b, iters, 1.0, 0.0, seed);
    cfg.window = w;
    const auto out = fv_run(cfg, obj, ans, sa);
    const auto pred = stepwell::predict(obj, x0, ramp, well, b, w, 1.0, iters);
    CHECK(out.ref_gradient == pred.ref_gradient);
    if (!pred.absorbed_at) {
      CHECK(out.events.empty());
      continue;
    }
    ++with_events;
    REQUIRE(out.events.size() == 2 * ramp);
    for (std::size_t j = 0; j < ramp; ++j) {
      CHECK(out.events[2 * j].kind == EventKind::absorbed);
      CHECK(out.events[2 * j].particle == j);
      CHECK(out.events[2 * j].iteration == *pred.absorbed_at);
      CHECK(out.events[2 * j + 1].kind == EventKind::reactivated);
      CHECK(*out.events[2 * j + 1].source >= ramp);
    }
  }
  CHECK(with_events == 10);
}

TEST_CASE("runs are reproducible") {
  const auto obj = synthetic_objective(landscape(17));
  const auto cfg = config(8, 5, 40, 1.0, 0.5, 18);
  const auto a = fv_run(cfg, *obj, uniform_ansatze(8, 19), SaParams{});
  const auto b = fv_run(cfg, *obj, uniform_ansatze(8, 19), SaParams{});
  CHECK(a == b);
  std::ostringstream la, lb;
  write_event_log(la, a.events);
  write_event_log(lb, b.events);
  CHECK(la.str() == lb.str());
  CHECK(la.str().rfind("iter,particle,event,source,ref_gradient,window_mean\n", 0) == 0);
}

TEST_CASE("ansatz count must match the particle count") {
  const testobj::Constant flat;
  CHECK_THROWS_AS(FvSwarm(config(4, 2, 2, 1, 0.5), flat, uniform_ansatze(3, 1), SaParams{}), Error);
}

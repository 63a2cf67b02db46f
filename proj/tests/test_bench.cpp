#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fvopt/bench.hpp"
#include "fvopt/error.hpp"

using namespace fvopt;

namespace {

ExperimentSpec small_spec(std::uint64_t seed = 3) {
  ExperimentSpec s;
  s.synthetic.grid.points_per_dim = 30;
  s.synthetic.synthesis.plateau_width = 4;
  s.synthetic.synthesis.nominal_barren_fraction = 0.5;
  s.synthetic.functions = 2;
  s.fv.iterations = 20;
  s.fv.particles = 5;
  s.replications = 5;
  s.ansatz_min_distance = 0.3;
  s.master_seed = seed;
  s.threads = 2;
  return s;
}

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an fvopt::Error");
  return ErrorKind::io_error;
}

std::string csv(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  write_csv(out, records);
  return out.str();
}

}  // namespace

TEST_CASE("relative error and advantage") {
  CHECK(relative_error(0.05, 0.0, 1.0, Sense::minimize) == doctest::Approx(0.05));
  CHECK(relative_error(9.0, 10.0, 0.0, Sense::maximize) == doctest::Approx(0.1));
  CHECK(kind_of([] { relative_error(1.0, 2.0, 2.0, Sense::minimize); }) == ErrorKind::degenerate_range);

  const std::vector<double> sa{0.3, 0.2, 0.4}, fv{0.1, 0.1, 0.2};
  CHECK(advantage(sa, fv) == doctest::Approx(0.2));
  CHECK(advantage(fv, sa) == doctest::Approx(-0.2));
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK(median({5.0}) == 5.0);
}

TEST_CASE("advantage is antisymmetric") {
  Stream rng(1);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> a(7), b(7);
    for (auto& v : a) v = rng.uniform();
    for (auto& v : b) v = rng.uniform();
    CHECK(advantage(a, b) == -advantage(b, a));
  }
}

TEST_CASE("bench runs produce paired records with equal budgets") {
  const auto spec = small_spec();
  const auto functions = build_bench(spec);
  const auto records = run_bench(spec, functions);
  REQUIRE(records.size() == 2 * 2 * 5);
  const std::uint64_t budget = spec.fv.particles * (spec.fv.burn_in + spec.fv.iterations);
  for (std::size_t i = 0; i < records.size(); i += 2) {
    CHECK(records[i].method == Method::sa);
    CHECK(records[i + 1].method == Method::fv);
    CHECK(records[i].seed == records[i + 1].seed);
    CHECK(records[i].eval_count == budget);
    CHECK(records[i + 1].eval_count == budget);
    CHECK(records[i].absorptions == 0);
    CHECK(records[i].relative_error >= 0.0);
  }
}

TEST_CASE("records do not depend on the thread count") {
  auto spec = small_spec(9);
  const auto functions = build_bench(spec);
  spec.threads = 1;
  const auto one = csv(run_bench(spec, functions));
  spec.threads = 4;
  const auto four = csv(run_bench(spec, functions));
  CHECK(one == four);
  CHECK(one == csv(run_bench(spec, build_bench(spec))));
}

TEST_CASE("alpha 0 makes both methods identical") {
  auto spec = small_spec(4);
  spec.fv.alpha = 0.0;
  const auto records = run_bench(spec, build_bench(spec));
  for (std::size_t i = 0; i < records.size(); i += 2) {
    CHECK(records[i].best_value == records[i + 1].best_value);
    CHECK(records[i].particle_best == records[i + 1].particle_best);
  }
}

TEST_CASE("CSV round trip keeps full precision") {
  const auto spec = small_spec(5);
  const auto records = run_bench(spec, build_bench(spec));
  std::stringstream s;
  write_csv(s, records);
  CHECK(s.str().rfind(std::string(kCsvHeader) + "\n", 0) == 0);
  const auto back = parse_csv(s);
  REQUIRE(back.size() == records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].function_id == records[i].function_id);
    CHECK(back[i].method == records[i].method);
    CHECK(back[i].replication == records[i].replication);
    CHECK(back[i].best_value == records[i].best_value);
    CHECK(back[i].relative_error == records[i].relative_error);
    CHECK(back[i].eval_count == records[i].eval_count);
    CHECK(back[i].seed == records[i].seed);
  }
  std::stringstream bad("function_id,method\n1,SA\n");
  CHECK_THROWS_AS(parse_csv(bad), Error);
}

TEST_CASE("summary is sorted by decreasing advantage") {
  std::vector<RunRecord> records;
  auto add = [&](std::size_t f, Method m, double err) {
    RunRecord r;
    r.function_id = f;
    r.method = m;
    r.relative_error = err;
    records.push_back(r);
  };
  add(0, Method::sa, 0.2);
  add(0, Method::fv, 0.1);
  add(1, Method::sa, 0.1);
  add(1, Method::fv, 0.3);
  add(2, Method::sa, 0.5);
  add(2, Method::fv, 0.1);
  const auto s = summarize(records);
  REQUIRE(s.size() == 3);
  CHECK(s[0].function_id == 2);
  CHECK(s[1].function_id == 0);
  CHECK(s[2].function_id == 1);
  const auto stats = advantage_stats(s);
  CHECK(stats.positive == 2);
  CHECK(stats.mean == doctest::Approx((0.4 + 0.1 - 0.2) / 3));
}

TEST_CASE("quartiles") {
  std::vector<RunRecord> records;
  for (int k = 1; k <= 5; ++k) {
    RunRecord r;
    r.method = Method::sa;
    r.relative_error = k;
    records.push_back(r);
    r.method = Method::fv;
    records.push_back(r);
  }
  const auto s = summarize(records).at(0);
  CHECK(s.sa.min == 1.0);
  CHECK(s.sa.q1 == 2.0);
  CHECK(s.sa.median == 3.0);
  CHECK(s.sa.q3 == 4.0);
  CHECK(s.sa.max == 5.0);
  CHECK(s.advantage == 0.0);
}

TEST_CASE("barren-grid ansatze lie on plateaus away from the minimum") {
  const auto spec = small_spec(6);
  const auto functions = build_bench(spec);
  for (const auto& f : functions) {
    Stream rng(f.id);
    const auto ans = draw_ansatze(spec, f, rng);
    REQUIRE(ans.size() == spec.fv.particles);
    const auto m = f.landscape->global_min_pos();
    const auto& g = f.landscape->grid();
    for (const auto& a : ans) {
      CHECK(std::hypot(a[0] - m[0], a[1] - m[1]) > spec.ansatz_min_distance);
      const auto i = static_cast<std::size_t>(std::lround(a[0] / g.spacing(0)));
      const auto j = static_cast<std::size_t>(std::lround(a[1] / g.spacing(1)));
      CHECK(f.landscape->is_barren(i, j));
    }
  }
}

TEST_CASE("an unreachable minimum distance is infeasible") {
  auto spec = small_spec();
  spec.ansatz_min_distance = 2.0;
  spec.synthetic.functions = 1;
  CHECK(kind_of([&] { build_bench(spec); }) == ErrorKind::ansatz_infeasible);
  spec.ansatz_min_distance = 0.3;
  const auto functions = build_bench(spec);
  spec.ansatz_min_distance = 2.0;
  Stream rng(0);
  CHECK(kind_of([&] { draw_ansatze(spec, functions[0], rng); }) == ErrorKind::ansatz_infeasible);
}

TEST_CASE("spec validation") {
  auto spec = small_spec();
  spec.replications = 0;
  CHECK(kind_of([&] { spec.validate(); }) == ErrorKind::config_error);
  spec = small_spec();
  spec.kind = ObjectiveKind::qaoa;
  CHECK(kind_of([&] { spec.validate(); }) == ErrorKind::config_error);  // barren rule on QAOA
  spec.ansatz_rule = AnsatzRule::uniform;
  CHECK_NOTHROW(spec.validate());
  spec.fv.exploration_rate = 2.0;
  CHECK(kind_of([&] { spec.validate(); }) == ErrorKind::config_error);
}

TEST_CASE("small QAOA bench") {
  ExperimentSpec spec;
  spec.kind = ObjectiveKind::qaoa;
  spec.ansatz_rule = AnsatzRule::uniform;
  spec.qaoa.qubits = 5;
  spec.qaoa.graphs = 2;
  spec.qaoa.shots = 64;
  spec.fv.iterations = 10;
  spec.fv.particles = 4;
  spec.replications = 2;
  spec.master_seed = 8;
  const auto functions = build_bench(spec);
  const auto records = run_bench(spec, functions);
  REQUIRE(records.size() == 8);
  for (const auto& r : records) {
    CHECK(r.eval_count == 4 * (5 + 10) * (2 * 2 + 1));
    CHECK(r.best_value <= functions[r.function_id].fstar + 1e-12);  // sample means never beat the max cut
    CHECK(r.relative_error >= 0.0);
  }
  CHECK(csv(records) == csv(run_bench(spec, build_bench(spec))));
}

TEST_CASE("export writes the three files") {
  const auto dir = std::filesystem::temp_directory_path() / "fvopt_export_test";
  std::filesystem::remove_all(dir);
  const auto spec = small_spec(10);
  export_records(dir.string(), run_bench(spec, build_bench(spec)));
  for (const char* name : {"records.csv", "summary.json", "events.csv"}) {
    CHECK(std::filesystem::exists(dir / name));
  }
  std::ifstream in(dir / "records.csv");
  CHECK(parse_csv(in).size() == 20);
  std::filesystem::remove_all(dir);
}

TEST_CASE("hitting cells are undefined when every run is capped") {
  HittingConfig cfg;
  cfg.grid.points_per_dim = 30;
  cfg.synthesis.plateau_width = 4;
  cfg.fractions = {0.0, 0.3};
  cfg.counts = {1};
  cfg.trials = 4;
  cfg.step_cap = 0;
  cfg.fv.particles = 4;
  const auto table = hitting_time_study(cfg);
  for (const auto& c : table.fraction_sweep) {
    CHECK(c.undefined);
    CHECK(std::isnan(c.delta));
  }
  CHECK_FALSE(table.zero_cell_covers_zero);
}

TEST_CASE("hitting trials are reproducible") {
  HittingConfig cfg;
  cfg.grid.points_per_dim = 30;
  cfg.synthesis.plateau_width = 4;
  cfg.trials = 6;
  cfg.fv.particles = 4;
  cfg.step_cap = 300;
  const auto a = hitting_cell(cfg, 0.3, 2);
  const auto b = hitting_cell(cfg, 0.3, 2);
  CHECK(a.mean_sa == b.mean_sa);
  CHECK(a.mean_fv == b.mean_fv);
  CHECK(a.trials == 6);
}

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gnrg/csv.hpp"
#include "gnrg/experiments.hpp"
#include "gnrg/verify.hpp"

using namespace gnrg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gnrg_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig tiny_pe() {
  auto c = ExperimentConfig::defaults(ExperimentKind::PeCompare);
  c.reps = 1;
  c.samples = {10};
  c.archs = {"2-4-1"};
  c.first_order_iters = 20;
  c.second_order_iters = 5;
  c.trace_every = 5;
  c.jobs = 1;
  return c;
}

ExperimentConfig tiny_gen(ExperimentKind kind) {
  auto c = ExperimentConfig::defaults(kind);
  c.reps = 2;
  c.samples = {10, 20};
  if (kind == ExperimentKind::GenSingle) c.archs = {"2-4-1"};
  else c.archs = {"2-3-1", "2-4-4-1"};
  c.second_order_iters = 10;
  c.grid_points = 10;
  c.surface_points = 5;
  c.jobs = 2;
  return c;
}

}  // namespace

TEST(Config, KindNames) {
  for (auto k : {ExperimentKind::QuadConv, ExperimentKind::PeCompare, ExperimentKind::GenSingle,
                 ExperimentKind::GenMulti, ExperimentKind::PolicyIter})
    EXPECT_EQ(parse_experiment_kind(to_string(k)), k);
  EXPECT_THROW(parse_experiment_kind("verify-all"), ConfigError);
}

TEST(Config, DefaultsAreValid) {
  for (auto k : {ExperimentKind::QuadConv, ExperimentKind::PeCompare, ExperimentKind::GenSingle,
                 ExperimentKind::GenMulti, ExperimentKind::PolicyIter})
    EXPECT_NO_THROW(ExperimentConfig::defaults(k).validate()) << to_string(k);
}

TEST(Config, ReferenceDefaults) {
  const auto q = ExperimentConfig::defaults(ExperimentKind::QuadConv);
  EXPECT_EQ(q.env, "baird-star");
  EXPECT_EQ(q.archs, std::vector<std::string>{"2-7-1"});
  const auto pe = ExperimentConfig::defaults(ExperimentKind::PeCompare);
  EXPECT_EQ(pe.methods.size(), 4u);
  EXPECT_EQ(pe.alphas, (std::vector<double>{1.0, 0.1, 0.01, 0.001}));
  EXPECT_EQ(pe.samples, std::vector<int>{100});
  EXPECT_EQ(pe.first_order_iters, 10'000);
  EXPECT_EQ(pe.second_order_iters, 1'500);
  EXPECT_EQ(pe.reps, 25);
  const auto pi = ExperimentConfig::defaults(ExperimentKind::PolicyIter);
  EXPECT_EQ(pi.archs, std::vector<std::string>{"5-10-10-1"});
  EXPECT_EQ(pi.sweeps, 25);
  EXPECT_EQ(pi.eval_iters.front(), 500);
  EXPECT_EQ(pi.eval_iters.back(), 4500);
}

TEST(Config, RejectsInvalidSettings) {
  auto c = ExperimentConfig::defaults(ExperimentKind::QuadConv);
  c.archs = {"2-10-10-1"};
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig::defaults(ExperimentKind::PeCompare);
  c.env = "cart-pole";
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig::defaults(ExperimentKind::PeCompare);
  c.alphas = {-1.0};
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig::defaults(ExperimentKind::GenSingle);
  c.archs = {"2-10-x-1"};
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig::defaults(ExperimentKind::GenSingle);
  c.grid_points = 5000;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig::defaults(ExperimentKind::PolicyIter);
  c.archs = {"4-10-1"};
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig::defaults(ExperimentKind::PolicyIter);
  c.reps = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, RepetitionSeeds) {
  auto c = ExperimentConfig::defaults(ExperimentKind::PeCompare);
  c.seed = 100;
  EXPECT_EQ(c.repetition_seed(0), 100u);
  EXPECT_EQ(c.repetition_seed(7), 107u);
}

TEST(NearestSampleSize, TiesGoDown) {
  const std::vector<int> grid{50, 100, 150, 200};
  EXPECT_EQ(nearest_sample_size(grid, 151), 150);
  EXPECT_EQ(nearest_sample_size(grid, 125), 100);
  EXPECT_EQ(nearest_sample_size(grid, 10), 50);
  EXPECT_EQ(nearest_sample_size(grid, 1000), 200);
}

TEST(ParallelFor, RunsEveryTaskAndRethrows) {
  std::vector<int> hit(50, 0);
  parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
  EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 50);

  std::atomic<int> ran{0};
  EXPECT_THROW(parallel_for(10, 3,
                            [&](std::size_t i) {
                              ++ran;
                              if (i == 2) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
  EXPECT_EQ(ran.load(), 10);
}

TEST(PeCompare, SixteenCellsPerRepetition) {
  const auto cells = run_pe_compare(tiny_pe());
  ASSERT_EQ(cells.size(), 16u);
  for (const auto& c : cells) {
    const int budget = c.method.order == Order::First ? 20 : 5;
    if (c.trace.diverged()) EXPECT_LE(c.trace.iterations, budget);
    else EXPECT_EQ(c.trace.iterations, budget);
    EXPECT_EQ(c.run_id.rfind("pe-r0-", 0), 0u);
  }
}

TEST(PeCompare, HooksSeeEveryEvaluation) {
  std::atomic<int> calls{0};
  ExperimentHooks hooks;
  hooks.on_evaluation = [&](const std::string&, int, const ObjectiveEvaluation&) { ++calls; };
  const auto cells = run_pe_compare(tiny_pe(), hooks);
  // One evaluation per iterate, including the last.
  int expected = 0;
  for (const auto& c : cells) expected += c.trace.iterations + 1;
  EXPECT_EQ(calls.load(), expected);
}

TEST(PeCompare, CsvOutputsAndIndex) {
  auto c = tiny_pe();
  c.out = scratch("pe");
  run_experiment(c);
  const CsvTable summary = read_csv(c.out / "pe_compare_summary.csv");
  EXPECT_EQ(summary.rows.size(), 16u);
  EXPECT_EQ(summary.header.back(), "diverged_flag");
  const CsvTable trace = read_csv(c.out / "pe_compare_trace.csv");
  EXPECT_EQ(trace.header.front(), "run_id");
  EXPECT_TRUE(fs::exists(c.out / "index.json"));
  const std::string index = slurp(c.out / "index.json");
  EXPECT_NE(index.find("pe-r0-residual-second-a"), std::string::npos);
  fs::remove_all(c.out);
}

TEST(QuadConv, ByteIdenticalReruns) {
  auto c = ExperimentConfig::defaults(ExperimentKind::QuadConv);
  c.second_order_iters = 15;
  c.out = scratch("qc_a");
  run_experiment(c);
  const fs::path first = c.out;
  c.out = scratch("qc_b");
  run_experiment(c);
  EXPECT_EQ(slurp(first / "quadconv.csv"), slurp(c.out / "quadconv.csv"));
  EXPECT_EQ(slurp(first / "index.json"), slurp(c.out / "index.json"));
  const CsvTable t = read_csv(c.out / "quadconv.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"iteration", "distance", "nmsbe"}));
  EXPECT_EQ(t.number(t.rows.size() - 1, "distance"), 0.0);
  fs::remove_all(first);
  fs::remove_all(c.out);
}

TEST(Generalisation, SingleArchitectureOutputs) {
  auto c = tiny_gen(ExperimentKind::GenSingle);
  c.out = scratch("gen_single");
  run_experiment(c);
  const CsvTable t = read_csv(c.out / "gen_single.csv");
  EXPECT_EQ(t.rows.size(), 4u);
  EXPECT_TRUE(fs::exists(c.out / "surfaces" / "value_N10.csv"));
  EXPECT_TRUE(fs::exists(c.out / "surfaces" / "value_N20.csv"));
  fs::remove_all(c.out);
}

TEST(Generalisation, MultiArchitectureOutputs) {
  auto c = tiny_gen(ExperimentKind::GenMulti);
  c.out = scratch("gen_multi");
  run_experiment(c);
  EXPECT_EQ(read_csv(c.out / "gen_multi.csv").rows.size(), 8u);
  const CsvTable mean = read_csv(c.out / "gen_multi_mean.csv");
  EXPECT_EQ(mean.rows.size(), 4u);
  const CsvTable line = read_csv(c.out / "condition_line.csv");
  ASSERT_EQ(line.rows.size(), 2u);
  EXPECT_EQ(line.number(0, "n_net"), 13.0);
  EXPECT_EQ(line.number(0, "nearest_n"), 10.0);
  fs::remove_all(c.out);
}

TEST(Generalisation, RepetitionsDifferButRerunsAgree) {
  const auto a = run_generalisation(tiny_gen(ExperimentKind::GenSingle));
  const auto b = run_generalisation(tiny_gen(ExperimentKind::GenSingle));
  ASSERT_EQ(a.records.size(), 4u);
  EXPECT_NE(a.records[0].train_nmsbe, a.records[1].train_nmsbe);
  for (std::size_t i = 0; i < a.records.size(); ++i)
    EXPECT_EQ(a.records[i].test_nmsbe, b.records[i].test_nmsbe);
}

TEST(PolicyIter, GroupedCsvsAndCheckpoints) {
  auto c = ExperimentConfig::defaults(ExperimentKind::PolicyIter);
  c.samples = {10};
  c.eval_iters = {3};
  c.modes = {EvaluationMode::Persistent};
  c.sweeps = 2;
  c.reps = 2;
  c.n_rollouts = 1;
  c.horizon = 20;
  c.out = scratch("pi");
  run_experiment(c);
  const CsvTable t = read_csv(c.out / "policy_iter_N10_i3_persistent.csv");
  EXPECT_EQ(t.rows.size(), 6u);  // 2 reps x (initial + 2 sweeps)
  EXPECT_TRUE(fs::exists(c.out / "raw" / "pi-N10-i3-persistent-r1.csv"));
  EXPECT_TRUE(fs::exists(c.out / "checkpoints" / "pi-N10-i3-persistent-r0_sweep2.bin"));
  fs::remove_all(c.out);
}

TEST(Verify, QuickChecksPassExceptDocumentedRankCheck) {
  const auto results = run_verification({.seed = 0, .successor_sign = -1.0, .quick = true});
  ASSERT_FALSE(results.empty());
  for (const auto& r : results)
    if (r.id != "AD-2") EXPECT_TRUE(r.passed) << r.id << ": " << r.detail;
}

TEST(Verify, MutationIsCaught) {
  const auto results = run_verification({.seed = 0, .successor_sign = +1.0, .quick = true});
  const auto it = std::find_if(results.begin(), results.end(),
                               [](const CheckResult& r) { return r.id == "OBJ-1"; });
  ASSERT_NE(it, results.end());
  EXPECT_FALSE(it->passed);
  EXPECT_FALSE(all_passed(results));
}

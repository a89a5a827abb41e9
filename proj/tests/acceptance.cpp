// Acceptance runner: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.
//
// Usage: layoutforge_acceptance <path-to-cli> [work-dir]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "model_checks.hpp"

using namespace layoutforge;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kGradTol = 1e-4;
constexpr double kGradSeconds = 60.0;
constexpr double kClosedFormTol = 1e-12;
constexpr int kRandomCases = 1000;
constexpr double kMinHeldOutR2 = 0.7;
constexpr double kTrainSeconds = 30 * 60.0;
constexpr double kMinPhotoImprovement = 0.02;
constexpr double kOptimizeSeconds = 10 * 60.0;
constexpr double kMinRecipeImprovement = 0.01;

constexpr int kOracleUsers = 8;
constexpr std::uint64_t kOracleSeed = 4242;  // unused by data generation

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s  %-26s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  const lf_test::ToyProblem p(1);
  const auto r = lf_test::check_model_gradients(p);
  const double secs = seconds_since(t0);
  const bool ok = r.weights_error <= kGradTol && r.inputs_error <= kGradTol && secs < kGradSeconds &&
                  r.weights_checked > 0 && r.inputs_checked == 16;
  report(ok, "gradient-correctness",
         fmt("weights %zu max rel %.2e, inputs %zu max rel %.2e (tol %.0e), %.1fs", r.weights_checked,
             r.weights_error, r.inputs_checked, r.inputs_error, kGradTol, secs));
}

void formula_fidelity() {
  std::vector<std::string> bad;
  auto check = [&](bool ok, const char* what) {
    if (!ok) bad.push_back(what);
  };
  auto near = [](double a, double b) { return std::abs(a - b) <= kClosedFormTol; };

  check(near(task_metric(1000, 0.2, 0), 1100), "task_metric minor");
  check(near(task_metric(1000, 0, 0.25), 1200), "task_metric severe");

  const std::vector<double> obs{1, 2, 3};
  check(near(loss_ls(std::vector<double>{2, 2, 2}, obs), 1.0), "loss mean");
  check(near(loss_ls(std::vector<double>{1, 2, 4}, obs), 0.5), "loss 0.5");

  const std::vector<TrialKey> keys{{"a", 1}, {"a", 1}, {"b", 1}, {"b", 1}};
  const std::vector<double> gobs{1, 3, 5, 3};
  check(near(target_level_r2(std::vector<double>{3, 3, 3, 3}, gobs, keys), 0.0), "r2 zero");
  check(near(target_level_r2(std::vector<double>{2, 3, 3.5, 3.5}, gobs, keys), 0.75), "r2 0.75");

  check(mad_filter(std::vector<double>{1, 2, 3, 4, 100}) == std::vector<double>{2, 3, 4}, "mad");

  using lf_test::free_layout;
  using lf_test::icon;
  const Layout pair = free_layout({icon("a", "undo", {0.5, 0.5, 0.3, 0.2}), icon("b", "upload", {0.6, 0.5, 0.3, 0.2})});
  check(near(penalty_overlap(pair), 0.04), "overlap 0.04");
  PenaltyConfig forced;
  forced.overlap_constant = 10000;
  const double total = predict_sequence(pair, lf_test::tap_sequence({"a", "b"}), ModelParams::initialize(1),
                                        lf_test::builtin_table())
                           .total;
  check(std::abs(objective(pair, lf_test::tap_sequence({"a", "b"}), ModelParams::initialize(1),
                           lf_test::builtin_table(), forced) -
                 total - 400.0) <= 1e-9,
        "overlap constant");
  check(near(penalty_boundary(free_layout({icon("a", "undo", Rect::from_edges(0.85, 0.1, 1.05, 0.2))})), 0.05),
        "boundary right");
  check(near(penalty_boundary(free_layout({icon("a", "undo", Rect::from_edges(-0.3, 0.4, -0.1, 0.5))})), 0.3),
        "boundary outside");
  PenaltyConfig floor;
  floor.constraints = {Constraint{ConstraintType::min_size, {"a"}, {{"min_w", 0.08}, {"min_h", 0.1}}, 1.0}};
  check(near(penalty_values(free_layout({icon("a", "undo", {0.5, 0.5, 0.05, 0.1})}), floor).constraints, 0.03),
        "min size");

  // Brute-force oracles: interval products and the ReLU definition.
  Rng rng(2024);
  int overlap_misses = 0, relu_misses = 0;
  for (int t = 0; t < kRandomCases; ++t) {
    const Rect a{rng.uniform(), rng.uniform(), rng.uniform(0.01, 0.6), rng.uniform(0.01, 0.6)};
    const Rect b{rng.uniform(), rng.uniform(), rng.uniform(0.01, 0.6), rng.uniform(0.01, 0.6)};
    const double ox = std::max(0.0, std::min(a.cx + a.w / 2, b.cx + b.w / 2) - std::max(a.cx - a.w / 2, b.cx - b.w / 2));
    const double oy = std::max(0.0, std::min(a.cy + a.h / 2, b.cy + b.h / 2) - std::max(a.cy - a.h / 2, b.cy - b.h / 2));
    const double got = penalty_overlap(free_layout({icon("a", "undo", a), icon("b", "upload", b)}));
    if (std::abs(got - ox * oy) > kClosedFormTol) ++overlap_misses;

    ad::Tape tape;
    const double x = rng.uniform(-5, 5);
    if (ad::relu(tape.scalar(x)).scalar() != (x > 0 ? x : 0.0)) ++relu_misses;
  }
  check(overlap_misses == 0, "overlap random");
  check(relu_misses == 0, "relu random");

  std::string detail = fmt("closed-form tol %.0e, %d random overlap + relu cases", kClosedFormTol, kRandomCases);
  for (const auto& b : bad) detail += "; mismatch: " + b;
  report(bad.empty(), "formula-fidelity", detail);
}

struct Trained {
  ModelParams params;
  TaskSequence sequence;
};

Trained closed_loop_training() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto tmpl = photo_editing_template();
  const auto good = good_photo_layouts();
  const auto seq = build_photo_editing_sequence(3, 7);
  std::vector<NamedLayout> layouts;
  for (int i = 0; i < 24; ++i) layouts.push_back({"random_" + std::to_string(i), generate_random_layout(tmpl, 500 + i)});
  for (int i = 0; i < 6; ++i) layouts.push_back({"perturbed_" + std::to_string(i), perturb_layout(good[i % 5], 900 + i)});
  const Dataset all = simulate_dataset(layouts, seq, 4, 11);

  Dataset train_set, held_out;
  for (std::size_t i = 0; i < all.records.size(); ++i) (i % 5 == 4 ? held_out : train_set).records.push_back(all.records[i]);

  ModelParams init = ModelParams::initialize(3);
  fit_output_scale(init, train_set);
  const TrainResult r = train(train_set, init, TrainConfig{}, lf_test::builtin_table());
  const EvalReport e = evaluate_model(r.params, held_out, lf_test::builtin_table());
  const double secs = seconds_since(t0);
  report(e.target_level_r2 >= kMinHeldOutR2 && secs <= kTrainSeconds, "closed-loop-training",
         fmt("%zu tasks, %zu train / %zu held-out layouts, best epoch %d, held-out target R2 %.3f (min %.2f), %.0fs",
             seq.tasks.size(), train_set.records.size(), held_out.records.size(), r.best_epoch, e.target_level_r2,
             kMinHeldOutR2, secs));
  return {r.params, seq};
}

struct OptimizeOutcome {
  double improvement = 0.0;
  bool feasible = false;
  double seconds = 0.0;
};

OptimizeOutcome optimize_and_score(const Layout& initial, const TaskSequence& seq, const ModelParams& params) {
  const auto t0 = std::chrono::steady_clock::now();
  PenaltyConfig pen;
  pen.constraints = size_floor_constraints(initial);
  OptimizerConfig cfg;
  cfg.steps = 200;
  const OptimizationTrace trace = optimize(initial, seq, params, lf_test::builtin_table(), cfg, pen);
  OptimizeOutcome out;
  out.seconds = seconds_since(t0);
  const StepRecord* best = trace.best();
  if (best == nullptr) return out;
  const PenaltyValues v = penalty_values(best->layout, {});
  out.feasible = v.overlap == 0.0 && v.boundary == 0.0;
  const double before = oracle_sequence_metric(initial, seq, kOracleUsers, kOracleSeed);
  const double after = oracle_sequence_metric(best->layout, seq, kOracleUsers, kOracleSeed);
  out.improvement = (before - after) / before;
  return out;
}

void closed_loop_optimization(const Trained& m) {
  const auto tmpl = photo_editing_template();
  bool ok = true;
  std::string detail;
  for (int k = 0; k < 3; ++k) {
    const auto o = optimize_and_score(generate_random_layout(tmpl, 7000 + k), m.sequence, m.params);
    ok = ok && o.feasible && o.improvement >= kMinPhotoImprovement && o.seconds <= kOptimizeSeconds;
    detail += fmt("%s%+.1f%% %s %.1fs", k ? ", " : "", 100 * o.improvement, o.feasible ? "feasible" : "INFEASIBLE",
                  o.seconds);
  }
  report(ok, "closed-loop-optimization", detail + fmt(" (min %+.0f%%)", 100 * kMinPhotoImprovement));
}

void generalization(const Trained& m) {
  const auto seq = truncate_sequence(build_recipe_sequence(7), 40);
  const auto o = optimize_and_score(recipe_layouts().front(), seq, m.params);
  report(o.feasible && o.improvement >= kMinRecipeImprovement && o.seconds <= kOptimizeSeconds, "recipe-generalization",
         fmt("%zu tasks, oracle %+.1f%% %s (min %+.0f%%), %.1fs", seq.tasks.size(), 100 * o.improvement,
             o.feasible ? "feasible" : "INFEASIBLE", 100 * kMinRecipeImprovement, o.seconds));
}

void sanity_ordering() {
  const auto seq = build_photo_editing_sequence(3, 7);
  const auto tmpl = photo_editing_template();
  auto mean = [&](const std::vector<Layout>& ls) {
    double s = 0;
    for (const auto& l : ls) s += oracle_sequence_metric(l, seq, kOracleUsers, 99);
    return s / static_cast<double>(ls.size());
  };
  std::vector<Layout> random;
  for (int i = 0; i < 5; ++i) random.push_back(generate_random_layout(tmpl, 1000 + i));
  const auto good = good_photo_layouts();
  const auto bad = bad_photo_layouts();
  const double g = mean(good), r = mean(random), b = mean(bad);
  report(good.size() == 5 && bad.size() == 3 && g < r && r < b, "sanity-ordering",
         fmt("good %.0f < random %.0f < bad %.0f", g, r, b));
}

// Every file under `dir`, keyed by relative path.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_text(e.path());
  return out;
}

void cli_determinism(const fs::path& cli, const fs::path& work) {
  const fs::path dir = work / "determinism";
  const std::string q = "\"" + cli.string() + "\" --seed 5 ";
  const std::string d = "\"" + dir.string() + "\"";
  const std::vector<std::string> commands{
      q + "gen-layouts --good 2 --random 2 --out " + d + "/layouts",
      q + "gen-sequence --photos 1 --out " + d + "/sequence.json",
      q + "gen-sequence --template recipe-planner --rounds 1 --truncate 10 --out " + d + "/recipe.json",
      q + "simulate --layouts " + d + "/layouts --sequence " + d + "/sequence.json --users 3 --out " + d + "/data",
      q + "train --dataset " + d + "/data --epochs 2 --out " + d + "/model",
      q + "eval --model " + d + "/model/model.json --dataset " + d + "/data --out " + d + "/eval",
      q + "optimize --layout " + d + "/layouts/random_000.layout.json --sequence " + d + "/sequence.json --model " + d +
          "/model/model.json --steps 5 --size-floors --out " + d + "/trace",
  };
  auto run_all = [&]() -> std::optional<std::map<std::string, std::string>> {
    fs::remove_all(dir);
    fs::create_directories(dir);
    for (const auto& c : commands)
      if (std::system((c + " > /dev/null 2>&1").c_str()) != 0) return std::nullopt;
    return snapshot(dir);
  };
  const auto a = run_all();
  const auto b = run_all();
  std::size_t differing = 0;
  if (a && b)
    for (const auto& [path, text] : *a)
      if (!b->contains(path) || b->at(path) != text) ++differing;
  const bool ok = a && b && a->size() == b->size() && differing == 0 && !a->empty();
  report(ok, "cli-determinism",
         !a || !b ? std::string("a CLI command failed")
                  : fmt("%zu commands, %zu files compared, %zu differ", commands.size(), a->size(), differing));
  fs::remove_all(dir);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <layoutforge-cli> [work-dir]\n", argv[0]);
    return 2;
  }
  const fs::path work = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "layoutforge_acceptance";
  fs::create_directories(work);

  gradient_correctness();
  formula_fidelity();
  sanity_ordering();
  cli_determinism(argv[1], work);
  const Trained m = closed_loop_training();
  closed_loop_optimization(m);
  generalization(m);
  return failures;
}

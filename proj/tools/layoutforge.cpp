// layoutforge command-line front end.
//
// Exit codes: 0 success, 2 usage or input error, 3 runtime failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "layoutforge/layoutforge.hpp"
#include "layoutforge/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace layoutforge;

namespace {

constexpr const char* kToolVersion = "0.3.0";
constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Manifest {
  std::string command;
  json config = json::object();
  json seeds = json::object();
  json inputs = json::object();
  json outputs = json::object();
};

void write_manifest(const fs::path& dir, const Manifest& m) {
  write_json(dir / "manifest.json", {{"command", m.command},
                                     {"config", m.config},
                                     {"seeds", m.seeds},
                                     {"inputs", m.inputs},
                                     {"outputs", m.outputs},
                                     {"tool_version", kToolVersion}});
}

std::string padded(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", i);
  return buf;
}

// Layout files in a directory, sorted by name; id = file stem.
std::vector<NamedLayout> load_layout_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("layout directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.ends_with(".layout.json")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<NamedLayout> out;
  for (const auto& f : files) {
    std::string id = f.filename().string();
    id.resize(id.size() - std::string(".layout.json").size());
    out.push_back({id, layout_from_json(read_json(f))});
  }
  if (out.empty()) throw InputError("no *.layout.json files in " + dir.string());
  return out;
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("dataset directory not found: " + dir.string());
  return dataset_from_jsonl(read_text(dir / "dataset.jsonl"), read_json(dir / "dataset.meta.json"));
}

EmbeddingTable load_table(const std::string& path) {
  return path.empty() ? EmbeddingTable::builtin() : EmbeddingTable::from_json(read_json(path));
}

json eval_report(const ModelParams& p, const Dataset& d, const EmbeddingTable& table,
                 std::span<const std::size_t> which = {}) {
  const EvalReport r = evaluate_model(p, d, table, which);
  return {{"loss_ls", r.mean_loss}, {"target_level_r2", r.target_level_r2}, {"pooled_r2", r.pooled_r2}};
}

// ---------------------------------------------------------------------------

struct GenLayouts {
  std::string template_name = "photo-editing";
  int good = 50;
  int random = 50;
  std::string out = "layouts";
};

int run_gen_layouts(const GenLayouts& o, std::uint64_t seed) {
  const LayoutTemplate t = template_by_name(o.template_name);
  if (o.good < 0 || o.random < 0) throw InputError("counts must be >= 0");
  const std::vector<Layout> bases = o.template_name == "photo-editing" ? good_photo_layouts() : recipe_layouts();
  Manifest m{"gen-layouts"};
  m.config = {{"template", o.template_name}, {"good", o.good}, {"random", o.random}};
  m.seeds = {{"seed", seed}};
  json files = json::array();
  fs::create_directories(o.out);
  for (int i = 0; i < o.good; ++i) {
    const std::string name = "perturbed_" + padded(i) + ".layout.json";
    write_json(fs::path(o.out) / name,
               to_json(perturb_layout(bases[static_cast<std::size_t>(i) % bases.size()], mix_seed(seed, 2 * i))));
    files.push_back(name);
  }
  for (int i = 0; i < o.random; ++i) {
    const std::string name = "random_" + padded(i) + ".layout.json";
    write_json(fs::path(o.out) / name, to_json(generate_random_layout(t, mix_seed(seed, 2 * i + 1))));
    files.push_back(name);
  }
  m.outputs = {{"dir", o.out}, {"files", files}};
  write_manifest(o.out, m);
  return 0;
}

struct GenSequence {
  std::string template_name = "photo-editing";
  int photos = 20;
  int rounds = kRecipeRounds;
  int truncate = 0;
  std::string out = "sequence.json";
};

TaskSequence make_sequence(const GenSequence& o, std::uint64_t seed) {
  TaskSequence s;
  if (o.template_name == "photo-editing") {
    s = build_photo_editing_sequence(o.photos, seed);
  } else if (o.template_name == "recipe-planner") {
    if (o.rounds < 1) throw InputError("rounds must be >= 1");
    s = build_recipe_sequence(seed, o.rounds);
  } else {
    throw InputError("unknown template: " + o.template_name);
  }
  if (o.truncate > 0) s = truncate_sequence(std::move(s), static_cast<std::size_t>(o.truncate));
  return s;
}

int run_gen_sequence(const GenSequence& o, std::uint64_t seed) {
  const TaskSequence s = make_sequence(o, seed);
  write_json(o.out, to_json(s));
  Manifest m{"gen-sequence"};
  m.config = {{"template", o.template_name}, {"photos", o.photos}, {"rounds", o.rounds}, {"truncate", o.truncate}};
  m.seeds = {{"seed", seed}};
  m.outputs = {{"sequence", o.out}, {"tasks", s.tasks.size()}};
  write_manifest(fs::path(o.out).parent_path(), m);
  return 0;
}

struct Simulate {
  std::string layouts = "layouts";
  std::string sequence = "sequence.json";
  int users = 4;
  std::string out = "dataset";
};

int run_simulate(const Simulate& o, std::uint64_t seed) {
  if (o.users < kMinUsers) throw InputError("--users must be at least 3");
  const auto layouts = load_layout_dir(o.layouts);
  const TaskSequence seq = sequence_from_json(read_json(o.sequence));
  const Dataset d = simulate_dataset(layouts, seq, o.users, seed);
  write_text(fs::path(o.out) / "dataset.jsonl", dataset_to_jsonl(d));
  write_json(fs::path(o.out) / "dataset.meta.json", dataset_meta(d));
  Manifest m{"simulate"};
  m.config = {{"users", o.users}};
  m.seeds = {{"seed", seed}};
  m.inputs = {{"layouts", o.layouts}, {"sequence", o.sequence}};
  m.outputs = {{"dir", o.out}, {"records", d.records.size()}};
  write_manifest(o.out, m);
  return 0;
}

struct Train {
  std::string dataset = "dataset";
  int epochs = 300;
  double learning_rate = 3e-4;
  std::string embeddings;
  std::string out = "model";
};

int run_train(const Train& o, std::uint64_t seed) {
  if (o.epochs < 0) throw InputError("--epochs must be >= 0");
  const Dataset d = load_dataset(o.dataset);
  if (d.records.empty()) throw InputError("dataset is empty");
  const EmbeddingTable table = load_table(o.embeddings);
  ModelParams init = ModelParams::initialize(seed);
  fit_output_scale(init, d);
  TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.learning_rate = o.learning_rate;
  cfg.seed = seed;
  if (o.epochs == 0) std::cerr << "warning: --epochs 0 saves the randomly initialized model\n";
  cfg.on_epoch = [](int e, double tr, double val) {
    if (e % 10 == 0) std::cerr << "epoch " << e << " train " << tr << " validation " << val << "\n";
  };
  const TrainResult r = train(d, init, cfg, table);
  const fs::path dir = o.out;
  write_json(dir / "model.json", to_json(r.params));
  json report = {{"epochs", o.epochs},
                 {"best_epoch", r.best_epoch},
                 {"train_loss", r.train_loss},
                 {"validation_loss", r.validation_loss},
                 {"validation_layouts", json::array()},
                 {"all", eval_report(r.params, d, table)}};
  for (auto i : r.validation_records) report["validation_layouts"].push_back(d.records[i].layout_id);
  if (r.validation_records.size() >= 1) report["validation"] = eval_report(r.params, d, table, r.validation_records);
  report["final_loss_ls"] = report["all"]["loss_ls"];
  report["target_level_r2"] = report["all"]["target_level_r2"];
  write_json(dir / "report.json", report);
  Manifest m{"train"};
  m.config = {{"epochs", o.epochs}, {"learning_rate", o.learning_rate}, {"embeddings", o.embeddings}};
  m.seeds = {{"seed", seed}};
  m.inputs = {{"dataset", o.dataset}};
  m.outputs = {{"model", (dir / "model.json").string()}, {"report", (dir / "report.json").string()}};
  write_manifest(dir, m);
  return 0;
}

struct Eval {
  std::string model = "model/model.json";
  std::string dataset = "dataset";
  std::string embeddings;
  std::string out;
};

int run_eval(const Eval& o) {
  const ModelParams p = model_from_json(read_json(o.model));
  const Dataset d = load_dataset(o.dataset);
  const json report = eval_report(p, d, load_table(o.embeddings));
  if (o.out.empty()) {
    std::cout << report.dump(2) << "\n";
    return 0;
  }
  write_json(fs::path(o.out) / "report.json", report);
  Manifest m{"eval"};
  m.inputs = {{"model", o.model}, {"dataset", o.dataset}};
  m.outputs = {{"report", (fs::path(o.out) / "report.json").string()}};
  write_manifest(o.out, m);
  return 0;
}

struct Optimize {
  std::string layout;
  std::string sequence = "sequence.json";
  std::string model = "model/model.json";
  std::string constraints;
  std::string embeddings;
  int steps = 500;
  double learning_rate = 0.05;
  bool size_floors = false;
  bool no_swaps = false;
  std::string out = "trace";
};

int run_optimize(const Optimize& o, std::uint64_t seed) {
  const Layout layout = layout_from_json(read_json(o.layout));
  if (!is_feasible(layout)) throw InputError("initial layout is not feasible");
  if (o.steps < 0) throw InputError("--steps must be >= 0");
  const TaskSequence seq = sequence_from_json(read_json(o.sequence));
  const ModelParams p = model_from_json(read_json(o.model));
  PenaltyConfig pen = o.constraints.empty() ? PenaltyConfig{} : penalty_config_from_json(read_json(o.constraints));
  if (o.size_floors) {
    auto floors = size_floor_constraints(layout);
    pen.constraints.insert(pen.constraints.end(), floors.begin(), floors.end());
  }
  penalty_values(layout, pen);  // unknown targets are input errors
  OptimizerConfig oc;
  oc.steps = o.steps;
  oc.learning_rate = o.learning_rate;
  oc.seed = seed;
  oc.swaps = !o.no_swaps;
  const OptimizationTrace t = optimize(layout, seq, p, load_table(o.embeddings), oc, pen);
  write_trace(o.out, t);
  Manifest m{"optimize"};
  m.config = {{"steps", o.steps},
              {"learning_rate", o.learning_rate},
              {"clip_norm", oc.clip_norm},
              {"size_floors", o.size_floors},
              {"swaps", oc.swaps},
              {"penalties", to_json(pen)}};
  m.seeds = {{"seed", seed}};
  m.inputs = {{"layout", o.layout}, {"sequence", o.sequence}, {"model", o.model}, {"constraints", o.constraints}};
  m.outputs = {{"dir", o.out}, {"best_step", t.best_step ? json(*t.best_step) : json(nullptr)}};
  write_manifest(o.out, m);
  if (t.error) {
    std::cerr << "error: " << *t.error << "\n";
    return kExitRuntime;
  }
  return 0;
}

struct Serve {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string model = "model/model.json";
  std::string embeddings;
  std::string jobs = "jobs";
  std::size_t max_queued = 16;
};

int run_serve(const Serve& o) {
  ServiceConfig cfg;
  cfg.jobs_dir = o.jobs;
  cfg.max_queued = o.max_queued;
  Service service(model_from_json(read_json(o.model)), load_table(o.embeddings), cfg);
  httplib::Server srv;
  service.mount(srv);
  std::cerr << "listening on " << o.host << ":" << o.port << "\n";
  if (!srv.listen(o.host, o.port)) throw Error("cannot listen on " + o.host + ":" + std::to_string(o.port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layout performance modelling and gradient-based layout optimization"};
  app.set_config("--config", "", "TOML/INI file with option values");
  app.require_subcommand(1);
  std::uint64_t seed = 1;
  app.add_option("--seed", seed, "Random seed")->envname("LAYOUTFORGE_SEED")->capture_default_str();

  GenLayouts gl;
  auto* c_gl = app.add_subcommand("gen-layouts", "Write perturbed-good and random layouts");
  c_gl->add_option("--template", gl.template_name, "photo-editing or recipe-planner")->capture_default_str();
  c_gl->add_option("--good", gl.good, "Perturbed copies of the hand-built layouts")->capture_default_str();
  c_gl->add_option("--random", gl.random, "Randomly generated layouts")->capture_default_str();
  c_gl->add_option("--out", gl.out, "Output directory")->capture_default_str();

  GenSequence gs;
  auto* c_gs = app.add_subcommand("gen-sequence", "Write a task sequence");
  c_gs->add_option("--template", gs.template_name, "photo-editing or recipe-planner")->capture_default_str();
  c_gs->add_option("--photos", gs.photos, "Photos edited (photo-editing)")->capture_default_str();
  c_gs->add_option("--rounds", gs.rounds, "Rounds (recipe-planner)")->capture_default_str();
  c_gs->add_option("--truncate", gs.truncate, "Keep only the first N tasks (0 keeps all)")->capture_default_str();
  c_gs->add_option("--out", gs.out, "Output file")->capture_default_str();

  Simulate sim;
  auto* c_sim = app.add_subcommand("simulate", "Run virtual users over layouts and aggregate a dataset");
  c_sim->add_option("--layouts", sim.layouts, "Directory of *.layout.json")->capture_default_str();
  c_sim->add_option("--sequence", sim.sequence, "Task sequence file")->capture_default_str();
  c_sim->add_option("--users", sim.users, "Virtual users per layout (>= 3)")->capture_default_str();
  c_sim->add_option("--out", sim.out, "Output directory")->capture_default_str();

  Train tr;
  auto* c_tr = app.add_subcommand("train", "Fit the performance model");
  c_tr->add_option("--dataset", tr.dataset, "Dataset directory")->capture_default_str();
  c_tr->add_option("--epochs", tr.epochs, "Training epochs")->capture_default_str();
  c_tr->add_option("--learning-rate", tr.learning_rate, "Adam learning rate")->capture_default_str();
  c_tr->add_option("--embeddings", tr.embeddings, "Label embedding table (default: built-in)");
  c_tr->add_option("--out", tr.out, "Output directory")->capture_default_str();

  Eval ev;
  auto* c_ev = app.add_subcommand("eval", "Report loss and target-level R^2 of a model on a dataset");
  c_ev->add_option("--model", ev.model, "Model file")->capture_default_str();
  c_ev->add_option("--dataset", ev.dataset, "Dataset directory")->capture_default_str();
  c_ev->add_option("--embeddings", ev.embeddings, "Label embedding table (default: built-in)");
  c_ev->add_option("--out", ev.out, "Output directory (default: print to stdout)");

  Optimize op;
  auto* c_op = app.add_subcommand("optimize", "Gradient descent on a layout through the model");
  c_op->add_option("--layout", op.layout, "Initial layout file")->required();
  c_op->add_option("--sequence", op.sequence, "Task sequence file")->capture_default_str();
  c_op->add_option("--model", op.model, "Model file")->capture_default_str();
  c_op->add_option("--constraints", op.constraints, "Penalty config / constraints file");
  c_op->add_option("--embeddings", op.embeddings, "Label embedding table (default: built-in)");
  c_op->add_option("--steps", op.steps, "Gradient steps")->capture_default_str();
  c_op->add_option("--learning-rate", op.learning_rate, "Step size")->capture_default_str();
  c_op->add_flag("--size-floors", op.size_floors, "Add min-size constraints at every block's initial size");
  c_op->add_flag("--no-swaps", op.no_swaps, "Disable location swapping");
  c_op->add_option("--out", op.out, "Trace directory")->capture_default_str();

  Serve sv;
  auto* c_sv = app.add_subcommand("serve", "Run the HTTP service");
  c_sv->add_option("--host", sv.host, "Bind address")->capture_default_str();
  c_sv->add_option("--port", sv.port, "Port")->capture_default_str();
  c_sv->add_option("--model", sv.model, "Model file")->capture_default_str();
  c_sv->add_option("--embeddings", sv.embeddings, "Label embedding table (default: built-in)");
  c_sv->add_option("--jobs", sv.jobs, "Directory for job traces")->capture_default_str();
  c_sv->add_option("--max-queued", sv.max_queued, "Waiting jobs before submissions are refused")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (c_gl->parsed()) return run_gen_layouts(gl, seed);
    if (c_gs->parsed()) return run_gen_sequence(gs, seed);
    if (c_sim->parsed()) return run_simulate(sim, seed);
    if (c_tr->parsed()) return run_train(tr, seed);
    if (c_ev->parsed()) return run_eval(ev);
    if (c_op->parsed()) return run_optimize(op, seed);
    if (c_sv->parsed()) return run_serve(sv);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const UnknownLabel& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const UnknownConstraintTarget& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ShapeMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitInput;
}

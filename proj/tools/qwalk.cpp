// qwalk: simulate walks, build labeled datasets, train and inspect CQCNN models.
//
// Exit codes: 0 success, 1 runtime or validation failure, 2 usage error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "manifest.hpp"
#include "qwalk/cqcnn.hpp"
#include "qwalk/dataset.hpp"
#include "qwalk/error.hpp"
#include "qwalk/evaluation.hpp"
#include "qwalk/parallel.hpp"
#include "qwalk/walkers.hpp"

namespace fs = std::filesystem;
using namespace qwalk;
using qwalk::cli::Artifact;
using qwalk::cli::RunManifest;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string exact(double v) { return fmt(v, "%.17g"); }

std::string absolute(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

void ensure_writable(const fs::path& p, bool force) {
  if (fs::exists(p) && !force) throw std::runtime_error(p.string() + " already exists (pass --force to overwrite)");
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + p.string());
}

std::uint64_t fresh_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

int default_jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void finish_manifest(RunManifest& m, const std::vector<fs::path>& outputs, const Stopwatch& clock) {
  for (const auto& p : outputs) m.outputs.push_back(cli::artifact(p));
  m.duration_seconds = clock.seconds();
  cli::write_manifest(m, cli::manifest_path(outputs.front()));
}

// ---------------------------------------------------------------------------
// Walk options shared by simulate and gen-dataset

struct WalkOptions {
  double gamma = 1.0;
  double dt = 0.01;
  std::optional<double> threshold;
  std::optional<double> t_max;
  bool full_horizon = false;

  void attach(CLI::App* app) {
    app->add_option("--gamma", gamma, "Sink decay rate")->capture_default_str();
    app->add_option("--dt", dt, "RK4 step for the quantum walk")->capture_default_str();
    app->add_option("--threshold", threshold, "Detection threshold (default 1/ln n)");
    app->add_option("--t-max", t_max, "Simulation horizon (default 10 n^3)");
    app->add_flag("--full-horizon", full_horizon, "Integrate the quantum walk to the horizon even after the "
                                                  "classical walker has crossed");
  }

  WalkConfig config() const {
    WalkConfig c;
    c.gamma = gamma;
    c.dt = dt;
    c.p_threshold_override = threshold;
    c.t_max_cap = t_max;
    c.stop_at_decision = !full_horizon;
    c.validate();
    return c;
  }

  void resolve(std::vector<std::string>& argv) const {
    argv.insert(argv.end(), {"--gamma", exact(gamma), "--dt", exact(dt)});
    if (threshold) argv.insert(argv.end(), {"--threshold", exact(*threshold)});
    if (t_max) argv.insert(argv.end(), {"--t-max", exact(*t_max)});
    if (full_horizon) argv.push_back("--full-horizon");
  }
};

std::string describe(const Graph& g) {
  std::string s = "n=" + std::to_string(g.size()) + " edges=";
  bool first = true;
  for (auto [u, v] : g.edges()) {
    s += (first ? "" : ",") + std::to_string(u + 1) + "-" + std::to_string(v + 1);
    first = false;
  }
  return s + " init=" + std::to_string(g.init() + 1) + " target=" + std::to_string(g.target() + 1);
}

std::string label_name(Label l) { return l == Label::kQuantum ? "quantum" : "classical"; }

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  std::string line;
  std::string graph_file;
  int index = 1;
  WalkOptions walk;
  std::string trace;
  std::optional<double> t_end;
  bool force = false;
};

Graph parse_line_spec(const std::string& spec) {
  std::vector<int> labeling;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      labeling.push_back(v - 1);
    } catch (const std::exception&) {
      throw UsageError("--line expects comma-separated vertex labels, got '" + spec + "'");
    }
  }
  std::vector<int> sorted = labeling;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (sorted[i] != static_cast<int>(i))
      throw UsageError("--line must list each of the vertices 1..n exactly once, got '" + spec + "'");
  if (labeling.size() < 3) throw UsageError("--line needs at least 3 vertices");
  return line_graph(labeling);
}

int cmd_simulate(const SimulateOptions& o) {
  const Stopwatch clock;
  Graph g = o.line.empty() ? [&] {
    const Dataset d = load(o.graph_file);
    if (o.index < 1 || static_cast<std::size_t>(o.index) > d.size())
      throw UsageError("--index " + std::to_string(o.index) + " is outside 1.." + std::to_string(d.size()));
    return d.examples[static_cast<std::size_t>(o.index - 1)].graph;
  }()
                           : parse_line_spec(o.line);

  const WalkConfig cfg = o.walk.config();
  const WalkOutcome out = label_graph(g, cfg);
  std::cout << "graph " << describe(g) << '\n';
  std::cout << "threshold " << fmt(out.threshold, "%.3f") << '\n';
  std::cout << "classical hitting time " << (out.classical_hit_time ? fmt(*out.classical_hit_time) : "none") << '\n';
  std::cout << "quantum hitting time " << (out.quantum_hit_time ? fmt(*out.quantum_hit_time) : "none") << '\n';
  std::cout << "label " << label_name(out.label) << (out.indeterminate ? " (indeterminate)" : "") << '\n';

  if (o.trace.empty()) return 0;
  double t_end = 0.0;
  if (o.t_end) {
    t_end = *o.t_end;
  } else {
    t_end = std::max(out.classical_hit_time.value_or(0.0), out.quantum_hit_time.value_or(0.0)) * 1.25;
    if (t_end == 0.0) t_end = std::min(effective_horizon(cfg, g.size()), 100.0);
  }
  const fs::path trace_path = o.trace;
  ensure_writable(trace_path, o.force);
  const WalkTraces tr = trace_walks(g, cfg, t_end);
  std::string csv = "t,p_classical,p_quantum\n";
  for (std::size_t i = 0; i < tr.t.size(); ++i)
    csv += fmt(tr.t[i], "%.10g") + "," + fmt(tr.p_classical[i], "%.10g") + "," + fmt(tr.p_quantum[i], "%.10g") + "\n";
  write_text(trace_path, csv);
  std::cout << "wrote " << tr.t.size() << " trace rows to " << trace_path.string() << '\n';

  RunManifest m;
  m.command = "simulate";
  m.argv = {"simulate"};
  if (!o.line.empty()) {
    m.argv.insert(m.argv.end(), {"--line", o.line});
  } else {
    m.argv.insert(m.argv.end(), {"--graph", absolute(o.graph_file), "--index", std::to_string(o.index)});
    m.inputs.push_back(cli::artifact(absolute(o.graph_file)));
  }
  o.walk.resolve(m.argv);
  m.argv.insert(m.argv.end(), {"--trace", absolute(o.trace), "--t-end", exact(t_end)});
  finish_manifest(m, {absolute(o.trace)}, clock);
  return 0;
}

// ---------------------------------------------------------------------------
// gen-dataset

struct GenOptions {
  std::string kind;
  int n = 0;
  int count = 0;
  std::optional<std::uint64_t> seed;
  std::string out;
  WalkOptions walk;
  int jobs = 1;
  bool force = false;
};

int cmd_gen_dataset(const GenOptions& o) {
  const Stopwatch clock;
  const fs::path out = absolute(o.out);
  ensure_writable(out, o.force);
  const WalkConfig cfg = o.walk.config();

  RunManifest m;
  m.command = "gen-dataset";
  m.argv = {"gen-dataset", o.kind, "--n", std::to_string(o.n)};
  Dataset d;
  if (o.kind == "line") {
    d = build_line_dataset(o.n, cfg, o.jobs);
  } else {
    if (o.count < 1) throw UsageError("random datasets need --count >= 1");
    const std::uint64_t seed = o.seed ? *o.seed : fresh_seed();
    if (!o.seed) std::cout << "seed " << seed << " (generated)\n";
    d = build_random_dataset(o.n, o.count, seed, cfg, o.jobs);
    m.argv.insert(m.argv.end(), {"--count", std::to_string(o.count), "--seed", std::to_string(seed)});
    m.seeds.emplace_back("dataset", seed);
  }
  save(d, out);

  const auto kappa = d.class_fractions();
  const auto indeterminate =
      std::count_if(d.examples.begin(), d.examples.end(), [](const Example& e) { return e.indeterminate; });
  std::cout << "wrote " << d.size() << " examples to " << out.string() << " (classical " << fmt(kappa.classical, "%.4f")
            << ", quantum " << fmt(kappa.quantum, "%.4f") << ", indeterminate " << indeterminate << ")\n";

  o.walk.resolve(m.argv);
  m.argv.insert(m.argv.end(), {"--out", out.string()});
  finish_manifest(m, {out}, clock);
  return 0;
}

// ---------------------------------------------------------------------------
// split

struct SplitOptions {
  std::string in, train_out, test_out;
  double fraction = 0.9;
  std::optional<std::uint64_t> seed;
  bool force = false;
};

int cmd_split(const SplitOptions& o) {
  const Stopwatch clock;
  const fs::path in = absolute(o.in), train_out = absolute(o.train_out), test_out = absolute(o.test_out);
  ensure_writable(train_out, o.force);
  ensure_writable(test_out, o.force);
  const std::uint64_t seed = o.seed ? *o.seed : fresh_seed();
  if (!o.seed) std::cout << "seed " << seed << " (generated)\n";

  const auto [train, test] = split(load(in), o.fraction, seed);
  save(train, train_out);
  save(test, test_out);
  std::cout << "train " << train.size() << " examples -> " << train_out.string() << '\n';
  std::cout << "test " << test.size() << " examples -> " << test_out.string() << '\n';

  RunManifest m;
  m.command = "split";
  m.argv = {"split",       "--in",       in.string(),     "--train-out", train_out.string(), "--test-out",
            test_out.string(), "--fraction", exact(o.fraction), "--seed",      std::to_string(seed)};
  m.seeds.emplace_back("split", seed);
  m.inputs.push_back(cli::artifact(in));
  finish_manifest(m, {train_out, test_out}, clock);
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  std::vector<std::string> train_files;
  std::vector<std::string> test_files;
  std::string out;
  std::string variant = "simple";
  std::optional<int> n_max;
  int hidden = 32;
  double lr = 0.01;
  int epochs = 2000;
  int batches_per_epoch = 1;
  int batch_size = 3;
  int eval_every = 10;
  std::string weighting = "fraction";
  std::string scaling = "none";
  int runs = 1;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool force = false;
};

std::string dataset_name(const std::string& path) {
  std::string name = fs::path(path).filename().string();
  for (const char* ext : {".gz", ".txt", ".dataset"})
    if (name.size() > std::strlen(ext) && name.ends_with(ext)) name.resize(name.size() - std::strlen(ext));
  return name;
}

// dir/model.json -> dir/model<suffix>
fs::path sibling(const fs::path& out, const std::string& suffix) {
  return out.parent_path() / (out.stem().string() + suffix);
}

struct RunResult {
  CqcnnModel model;
  TrainingHistory history;
  Metrics train_metrics;
  std::vector<Metrics> test_metrics;
};

int cmd_train(const TrainOptions& o) {
  const Stopwatch clock;
  if (o.runs < 1) throw UsageError("--runs must be >= 1");
  const fs::path out = absolute(o.out);

  std::vector<Dataset> train_parts;
  for (const auto& f : o.train_files) train_parts.push_back(load(f));
  const Dataset train_set = merge(train_parts);
  std::vector<Dataset> tests;
  for (const auto& f : o.test_files) tests.push_back(load(f));
  const Dataset test_all = merge(tests);

  int needed = train_set.max_vertices();
  for (const auto& t : tests) needed = std::max(needed, t.max_vertices());
  if (o.n_max && *o.n_max < needed)
    throw std::runtime_error("incompatible --n-max " + std::to_string(*o.n_max) + ": the datasets contain graphs with " +
                             std::to_string(needed) + " vertices");
  const int n_max = o.n_max.value_or(needed);

  ModelConfig base;
  base.variant = parse_variant(o.variant);
  base.n_max = n_max;
  base.hidden_width = o.hidden;
  base.learning_rate = o.lr;
  base.weighting = parse_weighting(o.weighting);
  base.scaling = parse_scaling(o.scaling);
  Schedule schedule;
  schedule.epochs = o.epochs;
  schedule.batches_per_epoch = o.batches_per_epoch;
  schedule.batch_size = o.batch_size;
  schedule.eval_every = o.eval_every;
  schedule.validate();

  const std::uint64_t seed = o.seed ? *o.seed : fresh_seed();
  if (!o.seed) std::cout << "seed " << seed << " (generated)\n";

  std::vector<fs::path> outputs;
  const auto run_file = [&](int r, const std::string& suffix) {
    if (o.runs == 1) return suffix == ".json" ? out : sibling(out, suffix);
    char tag[16];
    std::snprintf(tag, sizeof tag, ".run%03d", r);
    return sibling(out, tag + suffix);
  };
  for (int r = 0; r < o.runs; ++r)
    for (const char* s : {".json", ".history.csv"}) outputs.push_back(run_file(r, s));
  outputs.push_back(sibling(out, ".metrics.csv"));
  if (o.runs > 1) {
    outputs.push_back(sibling(out, ".ensemble.csv"));
    outputs.push_back(sibling(out, ".curves.csv"));
  }
  // The manifest is keyed on --out, which must come first.
  if (o.runs > 1) outputs.insert(outputs.begin(), out);
  for (const auto& p : outputs) ensure_writable(p, o.force);

  std::vector<std::optional<RunResult>> results(static_cast<std::size_t>(o.runs));
  parallel_for(results.size(), o.jobs, [&](std::size_t r) {
    ModelConfig c = base;
    c.seed = derive_seed(seed, 2 * r);
    Schedule s = schedule;
    s.seed = derive_seed(seed, 2 * r + 1);
    CqcnnModel model(c);
    auto history = train(model, train_set, test_all.empty() ? nullptr : &test_all, s);
    RunResult res{model, std::move(history), evaluate(model, train_set, std::nullopt), {}};
    for (const auto& t : tests) res.test_metrics.push_back(evaluate(model, t, res.history.weights));
    results[r] = std::move(res);
  });

  std::vector<std::pair<std::string, Metrics>> rows;
  std::vector<CqcnnModel> models;
  std::vector<TrainingHistory> histories;
  for (int r = 0; r < o.runs; ++r) {
    const auto& res = *results[static_cast<std::size_t>(r)];
    save_model(res.model, run_file(r, ".json"));
    write_text(run_file(r, ".history.csv"), history_csv(res.history));
    const std::string prefix = o.runs == 1 ? "" : "run" + std::to_string(r) + ":";
    rows.emplace_back(prefix + "train", res.train_metrics);
    for (std::size_t t = 0; t < tests.size(); ++t) rows.emplace_back(prefix + dataset_name(o.test_files[t]), res.test_metrics[t]);
    models.push_back(res.model);
    histories.push_back(res.history);

    const double last_loss = res.history.epochs.empty() ? 0.0 : res.history.epochs.back().train_loss;
    std::cout << "run " << r << ": last epoch loss " << fmt(last_loss, "%.6g") << ", training-set loss "
              << fmt(res.train_metrics.mean_loss, "%.6g") << ", training accuracy "
              << fmt(res.train_metrics.accuracy, "%.4f") << '\n';
    for (std::size_t t = 0; t < tests.size(); ++t)
      std::cout << "  " << dataset_name(o.test_files[t]) << ": accuracy " << fmt(res.test_metrics[t].accuracy, "%.4f")
                << " (majority baseline " << fmt(res.test_metrics[t].majority_baseline(), "%.4f") << ")\n";
  }
  write_text(sibling(out, ".metrics.csv"), metrics_csv(rows));
  if (o.runs > 1) {
    write_text(sibling(out, ".ensemble.csv"), ensemble_csv(ensemble_stats(models)));
    write_text(sibling(out, ".curves.csv"), curves_csv(ensemble_curves(histories)));
    // --out itself holds the first run's model so that every train invocation has a model at --out.
    save_model(models.front(), out);
    for (std::size_t t = 0; t < tests.size(); ++t) {
      double mean = 0.0;
      for (const auto& res : results) mean += res->test_metrics[t].accuracy;
      std::cout << dataset_name(o.test_files[t]) << ": mean accuracy over " << o.runs << " runs "
                << fmt(mean / o.runs, "%.4f") << '\n';
    }
  }

  RunManifest m;
  m.command = "train";
  m.argv = {"train"};
  for (const auto& f : o.train_files) {
    m.argv.insert(m.argv.end(), {"--train", absolute(f)});
    m.inputs.push_back(cli::artifact(absolute(f)));
  }
  for (const auto& f : o.test_files) {
    m.argv.insert(m.argv.end(), {"--test", absolute(f)});
    m.inputs.push_back(cli::artifact(absolute(f)));
  }
  m.argv.insert(m.argv.end(), {"--out",         out.string(),
                               "--variant",     o.variant,
                               "--n-max",       std::to_string(n_max),
                               "--hidden",      std::to_string(o.hidden),
                               "--lr",          exact(o.lr),
                               "--epochs",      std::to_string(o.epochs),
                               "--batches-per-epoch", std::to_string(o.batches_per_epoch),
                               "--batch-size",  std::to_string(o.batch_size),
                               "--eval-every",  std::to_string(o.eval_every),
                               "--weighting",   o.weighting,
                               "--scaling",     o.scaling,
                               "--runs",        std::to_string(o.runs),
                               "--seed",        std::to_string(seed)});
  m.seeds.emplace_back("train", seed);
  finish_manifest(m, outputs, clock);
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string model;
  std::vector<std::string> data;
  std::string csv;
  int jobs = 1;
  bool force = false;
};

std::string opt(const std::optional<double>& v) { return v ? fmt(*v, "%.4f") : "undefined"; }

int cmd_eval(const EvalOptions& o) {
  const Stopwatch clock;
  const CqcnnModel model = load_model(o.model);
  std::vector<std::pair<std::string, Metrics>> rows;
  for (const auto& f : o.data) {
    const Metrics m = evaluate(model, load(f), std::nullopt, o.jobs);
    rows.emplace_back(dataset_name(f), m);
    std::cout << dataset_name(f) << ": examples " << m.total() << " accuracy " << fmt(m.accuracy, "%.4f")
              << " majority baseline " << fmt(m.majority_baseline(), "%.4f") << " loss " << fmt(m.mean_loss, "%.6g")
              << '\n';
    for (Label c : {Label::kClassical, Label::kQuantum})
      std::cout << "  " << label_name(c) << ": precision " << opt(m.precision(c)) << " recall " << opt(m.recall(c))
                << '\n';
    std::cout << "  confusion (rows true, columns predicted): [[" << m.confusion[0][0] << ' ' << m.confusion[0][1]
              << "] [" << m.confusion[1][0] << ' ' << m.confusion[1][1] << "]]\n";
  }
  if (o.csv.empty()) return 0;

  const fs::path csv = absolute(o.csv);
  ensure_writable(csv, o.force);
  write_text(csv, metrics_csv(rows));
  RunManifest m;
  m.command = "eval";
  m.argv = {"eval", "--model", absolute(o.model)};
  m.inputs.push_back(cli::artifact(absolute(o.model)));
  for (const auto& f : o.data) {
    m.argv.insert(m.argv.end(), {"--data", absolute(f)});
    m.inputs.push_back(cli::artifact(absolute(f)));
  }
  m.argv.insert(m.argv.end(), {"--csv", csv.string()});
  finish_manifest(m, {csv}, clock);
  return 0;
}

// ---------------------------------------------------------------------------
// inspect

struct InspectOptions {
  std::string model;
  std::string ensemble;
  std::string csv;
  bool force = false;
};

std::vector<fs::path> model_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.ends_with(".json") && !name.ends_with(".manifest.json"))
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

int cmd_inspect(const InspectOptions& o) {
  const Stopwatch clock;
  std::string text;
  std::vector<fs::path> inputs;
  if (!o.model.empty()) {
    inputs.push_back(absolute(o.model));
    text = last_layer_csv(export_last_layer(load_model(o.model)));
  } else {
    inputs = model_files(o.ensemble);
    if (inputs.empty()) throw std::runtime_error("no model files in " + o.ensemble);
    std::vector<CqcnnModel> models;
    for (const auto& f : inputs) models.push_back(load_model(f));
    const auto stats = ensemble_stats(models);
    text = ensemble_csv(stats);
    if (models.front().config().variant == Variant::kSimple) {
      std::vector<double> classical, quantum;
      for (const auto& s : stats) (s.cls == Label::kQuantum ? quantum : classical).push_back(s.mean);
      std::cerr << models.size() << " models; pearson r between class columns " << fmt(pearson(classical, quantum), "%.4f")
                << '\n';
    }
  }
  if (o.csv.empty()) {
    std::cout << text;
    return 0;
  }
  const fs::path csv = absolute(o.csv);
  ensure_writable(csv, o.force);
  write_text(csv, text);
  RunManifest m;
  m.command = "inspect";
  m.argv = {"inspect"};
  if (!o.model.empty())
    m.argv.insert(m.argv.end(), {"--model", absolute(o.model)});
  else
    m.argv.insert(m.argv.end(), {"--ensemble", absolute(o.ensemble)});
  m.argv.insert(m.argv.end(), {"--csv", csv.string()});
  for (const auto& f : inputs) m.inputs.push_back(cli::artifact(f));
  finish_manifest(m, {csv}, clock);
  return 0;
}

// ---------------------------------------------------------------------------
// rerun

int qwalk_main(std::vector<std::string> args);

int cmd_rerun(const std::string& manifest_file, int jobs) {
  const RunManifest m = cli::read_manifest(manifest_file);
  for (const auto& in : m.inputs) {
    if (!fs::exists(in.path)) throw std::runtime_error("input " + in.path + " is missing");
    if (cli::sha256_file(in.path) != in.sha256) std::cout << "warning: input changed since the run: " << in.path << '\n';
  }
  std::vector<std::string> args = m.argv;
  if (m.command != "simulate" || std::find(args.begin(), args.end(), "--trace") != args.end()) args.push_back("--force");
  if (m.command == "gen-dataset" || m.command == "train" || m.command == "eval")
    args.insert(args.end(), {"--jobs", std::to_string(jobs)});
  std::cout << "rerunning: qwalk";
  for (const auto& a : args) std::cout << ' ' << a;
  std::cout << '\n';

  if (const int rc = qwalk_main(args); rc != 0) return rc;
  bool same = true;
  for (const auto& out : m.outputs) {
    const bool match = fs::exists(out.path) && cli::sha256_file(out.path) == out.sha256;
    std::cout << (match ? "identical " : "DIFFERS ") << out.path << '\n';
    same = same && match;
  }
  std::cout << (same ? "all artifacts identical" : "artifacts differ") << '\n';
  return same ? 0 : 1;
}

// ---------------------------------------------------------------------------

int qwalk_main(std::vector<std::string> args) {
  CLI::App app{"Quantum vs classical walk speedup: simulation, datasets and CQCNN training", "qwalk"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "qwalk 1.0");

  const auto add_jobs = [](CLI::App* sub, int& jobs) {
    jobs = default_jobs();
    sub->add_option("--jobs,-j", jobs, "Worker threads")->envname("QWALK_JOBS")->check(CLI::PositiveNumber);
  };

  SimulateOptions sim;
  auto* s = app.add_subcommand("simulate", "Race the two walkers on one graph and report the label");
  auto* line_opt = s->add_option("--line", sim.line, "Line graph as a vertex sequence, e.g. 1,3,2");
  auto* graph_opt = s->add_option("--graph", sim.graph_file, "Dataset file")->check(CLI::ExistingFile);
  line_opt->excludes(graph_opt);
  s->add_option("--index", sim.index, "1-based example index in --graph")->capture_default_str()->needs(graph_opt);
  sim.walk.attach(s);
  s->add_option("--trace", sim.trace, "Write t, p_classical, p_quantum CSV");
  s->add_option("--t-end", sim.t_end, "Trace length (default 1.25 x the later hitting time)");
  s->add_flag("--force", sim.force, "Overwrite existing outputs");

  GenOptions gen;
  auto* g = app.add_subcommand("gen-dataset", "Label every line graph or a batch of random graphs");
  g->add_option("kind", gen.kind, "line or random")->required()->check(CLI::IsMember({"line", "random"}));
  g->add_option("--n", gen.n, "Number of vertices")->required();
  g->add_option("--count", gen.count, "Number of random graphs");
  g->add_option("--seed", gen.seed, "Seed for random graphs (generated and printed if omitted)");
  g->add_option("--out", gen.out, "Output dataset (.gz for compression)")->required();
  gen.walk.attach(g);
  add_jobs(g, gen.jobs);
  g->add_flag("--force", gen.force, "Overwrite existing outputs");

  SplitOptions spl;
  auto* sp = app.add_subcommand("split", "Shuffle and split a dataset into train and test parts");
  sp->add_option("--in", spl.in, "Input dataset")->required()->check(CLI::ExistingFile);
  sp->add_option("--train-out", spl.train_out, "Training part")->required();
  sp->add_option("--test-out", spl.test_out, "Test part")->required();
  sp->add_option("--fraction", spl.fraction, "Training fraction")->capture_default_str();
  sp->add_option("--seed", spl.seed, "Shuffle seed (generated and printed if omitted)");
  sp->add_flag("--force", spl.force, "Overwrite existing outputs");

  TrainOptions tr;
  auto* t = app.add_subcommand("train", "Train CQCNN models");
  t->add_option("--train", tr.train_files, "Training dataset (repeatable, merged)")->required()->check(CLI::ExistingFile);
  t->add_option("--test", tr.test_files, "Test dataset (repeatable, reported separately)")->check(CLI::ExistingFile);
  t->add_option("--out", tr.out, "Model file; history and metrics CSVs are written next to it")->required();
  t->add_option("--variant", tr.variant, "simple or full")->capture_default_str()->check(CLI::IsMember({"simple", "full"}));
  t->add_option("--n-max", tr.n_max, "Largest graph the model accepts (default: largest in the data)");
  t->add_option("--hidden", tr.hidden, "Hidden width (full variant)")->capture_default_str();
  t->add_option("--lr", tr.lr, "Learning rate")->capture_default_str();
  t->add_option("--epochs", tr.epochs, "Epochs")->capture_default_str();
  t->add_option("--batches-per-epoch", tr.batches_per_epoch, "Mini-batches per epoch")->capture_default_str();
  t->add_option("--batch-size", tr.batch_size, "Examples per mini-batch")->capture_default_str();
  t->add_option("--eval-every", tr.eval_every, "Epochs between test evaluations")->capture_default_str();
  t->add_option("--weighting", tr.weighting, "Loss class weights: fraction or inverse")
      ->capture_default_str()
      ->check(CLI::IsMember({"fraction", "inverse"}));
  t->add_option("--scaling", tr.scaling, "Feature scaling: none or degree")
      ->capture_default_str()
      ->check(CLI::IsMember({"none", "degree"}));
  t->add_option("--runs", tr.runs, "Independent runs (ensemble)")->capture_default_str();
  t->add_option("--seed", tr.seed, "Run seed (generated and printed if omitted)");
  add_jobs(t, tr.jobs);
  t->add_flag("--force", tr.force, "Overwrite existing outputs");

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "Evaluate a model on datasets");
  e->add_option("--model", ev.model, "Model file")->required()->check(CLI::ExistingFile);
  e->add_option("--data", ev.data, "Dataset (repeatable)")->required()->check(CLI::ExistingFile);
  e->add_option("--csv", ev.csv, "Write metrics CSV");
  add_jobs(e, ev.jobs);
  e->add_flag("--force", ev.force, "Overwrite existing outputs");

  InspectOptions in;
  auto* i = app.add_subcommand("inspect", "Export last-layer weights");
  auto* model_opt = i->add_option("--model", in.model, "Model file")->check(CLI::ExistingFile);
  auto* ens_opt = i->add_option("--ensemble", in.ensemble, "Directory of models")->check(CLI::ExistingDirectory);
  model_opt->excludes(ens_opt);
  i->add_option("--csv", in.csv, "Write CSV here instead of stdout");
  i->add_flag("--force", in.force, "Overwrite existing outputs");

  std::string manifest_file;
  int rerun_jobs = 1;
  auto* r = app.add_subcommand("rerun", "Re-execute a run from its manifest and compare artifact checksums");
  r->add_option("manifest", manifest_file, "Manifest file")->required()->check(CLI::ExistingFile);
  add_jobs(r, rerun_jobs);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
    if (s->parsed() && sim.line.empty() && sim.graph_file.empty())
      throw CLI::RequiredError("simulate needs --line or --graph");
    if (i->parsed() && in.model.empty() && in.ensemble.empty())
      throw CLI::RequiredError("inspect needs --model or --ensemble");
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (s->parsed()) return cmd_simulate(sim);
    if (g->parsed()) return cmd_gen_dataset(gen);
    if (sp->parsed()) return cmd_split(spl);
    if (t->parsed()) return cmd_train(tr);
    if (e->parsed()) return cmd_eval(ev);
    if (i->parsed()) return cmd_inspect(in);
    if (r->parsed()) return cmd_rerun(manifest_file, rerun_jobs);
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << "\nRun with --help for more information.\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) { return qwalk_main(std::vector<std::string>(argv + 1, argv + argc)); }

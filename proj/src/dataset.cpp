#include "qwalk/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <zlib.h>

#include "qwalk/error.hpp"
#include "qwalk/parallel.hpp"
#include "qwalk/rng.hpp"

namespace qwalk {

ClassFractions Dataset::class_fractions() const {
  if (examples.empty()) return {};
  const auto quantum = std::count_if(examples.begin(), examples.end(),
                                     [](const Example& e) { return e.label == Label::kQuantum; });
  const double total = static_cast<double>(examples.size());
  return {static_cast<double>(static_cast<std::ptrdiff_t>(examples.size()) - quantum) / total,
          static_cast<double>(quantum) / total};
}

int Dataset::max_vertices() const {
  int m = 0;
  for (const auto& e : examples) m = std::max(m, e.graph.size());
  return m;
}

double quantize_time(double t) { return std::round(t * 1e12) / 1e12; }

Example make_example(Graph graph, const WalkOutcome& outcome, std::uint64_t seed, std::string generator) {
  Example e{std::move(graph)};
  e.label = outcome.label;
  if (outcome.classical_hit_time) e.classical_hit_time = quantize_time(*outcome.classical_hit_time);
  if (outcome.quantum_hit_time) e.quantum_hit_time = quantize_time(*outcome.quantum_hit_time);
  e.indeterminate = outcome.indeterminate;
  e.seed = seed;
  e.generator = std::move(generator);
  return e;
}

namespace {

std::string describe(const Graph& g) {
  std::ostringstream os;
  os << "n=" << g.size() << " edges=";
  bool first = true;
  for (auto [u, v] : g.edges()) {
    os << (first ? "" : ",") << u + 1 << '-' << v + 1;
    first = false;
  }
  return os.str();
}

Dataset label_all(std::vector<Graph> graphs, const std::vector<std::uint64_t>& seeds,
                  const std::string& generator, const WalkConfig& cfg, int jobs) {
  std::vector<std::optional<Example>> slots(graphs.size());
  parallel_for(graphs.size(), jobs, [&](std::size_t i) {
    try {
      const WalkOutcome outcome = label_graph(graphs[i], cfg);
      slots[i] = make_example(graphs[i], outcome, seeds[i], generator);
    } catch (const std::exception& ex) {
      throw std::runtime_error("simulation failed for example " + std::to_string(i) + " (" +
                               describe(graphs[i]) + "): " + ex.what());
    }
  });
  Dataset d;
  d.examples.reserve(slots.size());
  for (auto& s : slots) d.examples.push_back(std::move(*s));
  return d;
}

}  // namespace

Dataset build_line_dataset(int n, const WalkConfig& cfg, int jobs) {
  if (n < 3 || n > 10) throw InvalidArgument("line datasets support 3 <= n <= 10");
  cfg.validate();
  auto graphs = enumerate_line_graphs(n);
  const std::vector<std::uint64_t> seeds(graphs.size(), 0);
  return label_all(std::move(graphs), seeds, "line", cfg, jobs);
}

Dataset build_random_dataset(int n, int count, std::uint64_t seed, const WalkConfig& cfg, int jobs) {
  if (count < 1) throw InvalidArgument("count must be at least 1");
  cfg.validate();
  std::vector<Graph> graphs;
  std::vector<std::uint64_t> seeds;
  graphs.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    seeds.push_back(derive_seed(seed, static_cast<std::uint64_t>(i)));
    graphs.push_back(random_graph(n, seeds.back()));
  }
  return label_all(std::move(graphs), seeds, "random", cfg, jobs);
}

std::pair<Dataset, Dataset> split(const Dataset& d, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("train fraction must lie strictly between 0 and 1");
  }
  const std::size_t total = d.size();
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(total)));
  if (n_train == 0 || n_train >= total) throw InvalidArgument("split would leave one side empty");

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = total - 1; i > 0; --i) {
    std::swap(order[i], order[static_cast<std::size_t>(uniform_below(rng, i + 1))]);
  }
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::sort(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());

  Dataset train, test;
  train.split = SplitTag::kTrain;
  test.split = SplitTag::kTest;
  for (std::size_t k = 0; k < total; ++k) {
    (k < n_train ? train : test).examples.push_back(d.examples[order[k]]);
  }
  return {std::move(train), std::move(test)};
}

Dataset merge(const std::vector<Dataset>& parts) {
  Dataset out;
  for (const auto& p : parts) out.examples.insert(out.examples.end(), p.examples.begin(), p.examples.end());
  if (!parts.empty()) {
    out.split = parts.front().split;
    for (const auto& p : parts)
      if (p.split != out.split) out.split = SplitTag::kUnsplit;
  }
  return out;
}

Dataset without_indeterminate(const Dataset& d) {
  Dataset out;
  out.split = d.split;
  std::copy_if(d.examples.begin(), d.examples.end(), std::back_inserter(out.examples),
               [](const Example& e) { return !e.indeterminate; });
  return out;
}

std::string_view to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::kTrain: return "train";
    case SplitTag::kTest: return "test";
    case SplitTag::kUnsplit: break;
  }
  return "unsplit";
}

// ---------------------------------------------------------------------------
// Text format

namespace {

std::string format_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12f", v);
  return buf;
}

std::string format_time(const std::optional<double>& t) { return t ? format_fixed(*t) : "-"; }

std::map<std::string, std::string> key_values(std::string_view line, std::size_t line_no) {
  std::map<std::string, std::string> out;
  std::istringstream is{std::string(line)};
  std::string token;
  while (is >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos || eq == 0) throw ParseError(line_no, "expected key=value, got '" + token + "'");
    if (!out.emplace(token.substr(0, eq), token.substr(eq + 1)).second) {
      throw ParseError(line_no, "duplicate key '" + token.substr(0, eq) + "'");
    }
  }
  return out;
}

long long parse_int(const std::string& s, std::size_t line_no, const char* what) {
  if (s.empty()) throw ParseError(line_no, std::string("empty ") + what);
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (errno != 0 || *end != '\0') throw ParseError(line_no, std::string("bad ") + what + " '" + s + "'");
  return v;
}

std::uint64_t parse_uint(const std::string& s, std::size_t line_no, const char* what) {
  if (s.empty() || s[0] == '-') throw ParseError(line_no, std::string("bad ") + what + " '" + s + "'");
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (errno != 0 || *end != '\0') throw ParseError(line_no, std::string("bad ") + what + " '" + s + "'");
  return v;
}

double parse_double(const std::string& s, std::size_t line_no, const char* what) {
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || errno != 0 || *end != '\0' || !std::isfinite(v)) {
    throw ParseError(line_no, std::string("bad ") + what + " '" + s + "'");
  }
  return v;
}

std::optional<double> parse_time(const std::string& s, std::size_t line_no, const char* what) {
  if (s == "-") return std::nullopt;
  return parse_double(s, line_no, what);
}

Example parse_record(std::string_view line, std::size_t line_no) {
  auto kv = key_values(line, line_no);
  auto take = [&](const char* key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = std::move(it->second);
    kv.erase(it);
    return v;
  };
  auto require = [&](const char* key) {
    auto v = take(key);
    if (!v) throw ParseError(line_no, std::string("missing field '") + key + "'");
    return *v;
  };

  const long long n = parse_int(require("n"), line_no, "vertex count");
  if (n < 1 || n > 4096) throw ParseError(line_no, "vertex count out of range");
  const std::string bits = require("adj");
  if (bits.size() != static_cast<std::size_t>(n * n)) {
    throw ParseError(line_no, "adjacency has " + std::to_string(bits.size()) + " bits, expected " +
                                  std::to_string(n * n));
  }
  std::vector<std::uint8_t> adj(bits.size());
  for (std::size_t k = 0; k < bits.size(); ++k) {
    if (bits[k] != '0' && bits[k] != '1') throw ParseError(line_no, "adjacency must be a 0/1 bitstring");
    adj[k] = bits[k] == '1' ? 1 : 0;
  }
  const long long init = parse_int(require("init"), line_no, "initial vertex");
  const long long target = parse_int(require("target"), line_no, "target vertex");
  const long long label = parse_int(require("label"), line_no, "label");
  if (label != 0 && label != 1) throw ParseError(line_no, "label must be 0 or 1");

  std::optional<double> tc, tq;
  if (auto v = take("tc")) tc = parse_time(*v, line_no, "classical hit time");
  if (auto v = take("tq")) tq = parse_time(*v, line_no, "quantum hit time");
  bool flag = false;
  if (auto v = take("flag")) {
    const long long f = parse_int(*v, line_no, "indeterminate flag");
    if (f != 0 && f != 1) throw ParseError(line_no, "flag must be 0 or 1");
    flag = f == 1;
  }
  std::uint64_t seed = 0;
  if (auto v = take("seed")) seed = parse_uint(*v, line_no, "seed");
  std::string gen;
  if (auto v = take("gen"); v && *v != "-") gen = *v;
  if (!kv.empty()) throw ParseError(line_no, "unknown field '" + kv.begin()->first + "'");

  std::optional<Graph> graph;
  try {
    graph.emplace(static_cast<int>(n), std::move(adj), static_cast<int>(init - 1), static_cast<int>(target - 1));
  } catch (const InvalidArgument& ex) {
    throw ValidationError("line " + std::to_string(line_no) + ": " + ex.what());
  }
  Example e{std::move(*graph)};
  e.label = static_cast<Label>(label);
  e.classical_hit_time = tc;
  e.quantum_hit_time = tq;
  e.indeterminate = flag;
  e.seed = seed;
  e.generator = std::move(gen);
  if (tc && tq && decide_label(tc, tq) != e.label) {
    throw ValidationError("line " + std::to_string(line_no) + ": label contradicts stored hitting times");
  }
  return e;
}

}  // namespace

std::string serialize(const Dataset& d) {
  std::ostringstream os;
  os << "# qwalk-dataset v1\n";
  os << "# split=" << to_string(d.split) << " examples=" << d.size();
  if (!d.empty()) {
    const auto k = d.class_fractions();
    os << " kappa_classical=" << format_fixed(k.classical) << " kappa_quantum=" << format_fixed(k.quantum);
  }
  os << '\n';
  for (const auto& e : d.examples) {
    const Graph& g = e.graph;
    os << "n=" << g.size() << " adj=";
    for (auto a : g.adjacency()) os << (a ? '1' : '0');
    os << " init=" << g.init() + 1 << " target=" << g.target() + 1 << " label=" << static_cast<int>(e.label)
       << " tc=" << format_time(e.classical_hit_time) << " tq=" << format_time(e.quantum_hit_time)
       << " flag=" << (e.indeterminate ? 1 : 0) << " seed=" << e.seed
       << " gen=" << (e.generator.empty() ? "-" : e.generator) << '\n';
  }
  return os.str();
}

Dataset parse(std::string_view text) {
  Dataset d;
  std::optional<std::size_t> declared_count;
  std::optional<double> declared_classical, declared_quantum;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    if (line.front() == '#') {
      line.remove_prefix(1);
      if (line.find('=') == std::string_view::npos) continue;  // free-form comment
      for (auto& [key, value] : key_values(line, line_no)) {
        if (key == "split") {
          if (value == "train") d.split = SplitTag::kTrain;
          else if (value == "test") d.split = SplitTag::kTest;
          else if (value == "unsplit") d.split = SplitTag::kUnsplit;
          else throw ParseError(line_no, "unknown split '" + value + "'");
        } else if (key == "examples") {
          declared_count = parse_uint(value, line_no, "example count");
        } else if (key == "kappa_classical") {
          declared_classical = parse_double(value, line_no, "class fraction");
        } else if (key == "kappa_quantum") {
          declared_quantum = parse_double(value, line_no, "class fraction");
        }
      }
      continue;
    }
    d.examples.push_back(parse_record(line, line_no));
  }
  if (declared_count && *declared_count != d.size()) {
    throw ValidationError("header declares " + std::to_string(*declared_count) + " examples, found " +
                          std::to_string(d.size()));
  }
  const auto k = d.class_fractions();
  if ((declared_classical && std::abs(*declared_classical - k.classical) > 1e-12) ||
      (declared_quantum && std::abs(*declared_quantum - k.quantum) > 1e-12)) {
    throw ValidationError("header class fractions do not match the examples");
  }
  return d;
}

namespace {

bool gzipped(const std::filesystem::path& path) { return path.extension() == ".gz"; }

}  // namespace

void save(const Dataset& d, const std::filesystem::path& path) {
  const std::string text = serialize(d);
  if (gzipped(path)) {
    gzFile f = gzopen(path.c_str(), "wb9");
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    const int written = gzwrite(f, text.data(), static_cast<unsigned>(text.size()));
    const int rc = gzclose(f);
    if (written != static_cast<int>(text.size()) || rc != Z_OK) {
      throw std::runtime_error("failed writing " + path.string());
    }
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out.flush()) throw std::runtime_error("failed writing " + path.string());
}

Dataset load(const std::filesystem::path& path) {
  std::string text;
  if (gzipped(path)) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open " + path.string());
    char buf[1 << 15];
    int got;
    while ((got = gzread(f, buf, sizeof buf)) > 0) text.append(buf, static_cast<std::size_t>(got));
    const bool bad = got < 0;
    gzclose(f);
    if (bad) throw std::runtime_error("corrupt gzip stream in " + path.string());
  } else {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  return parse(text);
}

}  // namespace qwalk

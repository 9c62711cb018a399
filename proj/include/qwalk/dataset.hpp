#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qwalk/graph.hpp"
#include "qwalk/walkers.hpp"

namespace qwalk {

struct Example {
  explicit Example(Graph g) : graph(std::move(g)) {}

  Graph graph;
  Label label = Label::kClassical;
  std::optional<double> classical_hit_time;
  std::optional<double> quantum_hit_time;
  // Neither walker reached the threshold before the horizon; label defaulted to classical.
  bool indeterminate = false;
  std::uint64_t seed = 0;
  std::string generator;

  friend bool operator==(const Example&, const Example&) = default;
};

enum class SplitTag { kUnsplit, kTrain, kTest };

// kappa(class): fraction of the dataset in each class.
struct ClassFractions {
  double classical = 0.0;
  double quantum = 0.0;

  double of(Label label) const { return label == Label::kQuantum ? quantum : classical; }
};

struct Dataset {
  std::vector<Example> examples;
  SplitTag split = SplitTag::kUnsplit;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
  ClassFractions class_fractions() const;
  int max_vertices() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Hit times are kept on a 1e-12 grid so the decimal file format round-trips exactly.
double quantize_time(double t);

Example make_example(Graph graph, const WalkOutcome& outcome, std::uint64_t seed, std::string generator);

// Labels all n!/2 line graphs. Work is spread over `jobs` threads; results do not depend
// on the thread count.
Dataset build_line_dataset(int n, const WalkConfig& cfg, int jobs = 1);

// count i.i.d. random graphs; example i uses derive_seed(seed, i).
Dataset build_random_dataset(int n, int count, std::uint64_t seed, const WalkConfig& cfg, int jobs = 1);

std::pair<Dataset, Dataset> split(const Dataset& d, double train_fraction, std::uint64_t seed);

Dataset merge(const std::vector<Dataset>& parts);
Dataset without_indeterminate(const Dataset& d);

// Text format, one example per line:
//   n=3 adj=001001110 init=1 target=2 label=1 tc=8.872973996700 tq=7.241465651400 flag=0 seed=0 gen=line
// Vertex labels are 1-based, adj is the row-major n*n bitstring, and a missing hit time
// is written as '-'. Header lines start with '#'.
std::string serialize(const Dataset& d);
// Throws ParseError (with line number) on malformed input and ValidationError when a
// record violates a graph invariant or the header's class fractions are stale.
Dataset parse(std::string_view text);

// Paths ending in ".gz" are gzip-compressed.
void save(const Dataset& d, const std::filesystem::path& path);
Dataset load(const std::filesystem::path& path);

std::string_view to_string(SplitTag tag);

}  // namespace qwalk

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qwalk/cqcnn.hpp"
#include "qwalk/dataset.hpp"
#include "qwalk/rng.hpp"

namespace qwalk {

struct Metrics {
  // confusion[true][predicted], indexed by Label.
  std::array<std::array<std::size_t, 2>, 2> confusion{};
  double accuracy = 0.0;
  double mean_loss = 0.0;

  std::size_t total() const;
  // Absent when the denominator is zero.
  std::optional<double> precision(Label c) const;
  std::optional<double> recall(Label c) const;
  // Accuracy of always predicting the more frequent true class.
  double majority_baseline() const;

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

// Default loss weights come from the evaluated dataset's class fractions and the model's
// weighting rule (equal weights if inverse weighting meets a missing class).
Metrics evaluate(const CqcnnModel& model, const Dataset& d, std::optional<ClassWeights> weights = std::nullopt,
                 int jobs = 1);

struct Schedule {
  int epochs = 2000;
  int batches_per_epoch = 1;
  int batch_size = 3;
  std::uint64_t seed = 0;
  // Test metrics are recorded on every eval_every-th epoch and on the last one.
  int eval_every = 10;

  void validate() const;
};

// Draws batch indices uniformly with replacement.
class BatchSampler {
 public:
  BatchSampler(std::size_t population, std::uint64_t seed);
  std::vector<std::size_t> next(int batch_size);

 private:
  std::size_t population_;
  Rng rng_;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  // Mean over the epoch's batches of the batch loss evaluated before each update.
  double train_loss = 0.0;
  std::optional<Metrics> test;
};

struct TrainingHistory {
  ClassWeights weights;
  std::vector<EpochRecord> epochs;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Throws TrainingError when the loss becomes non-finite.
TrainingHistory train(CqcnnModel& model, const Dataset& train_set, const Dataset* test_set, const Schedule& schedule,
                      const EpochCallback& on_epoch = {});

struct WeightStats {
  int vertex = 0;
  int feature = 0;
  Label cls = Label::kClassical;
  double mean = 0.0;
  double mean_squared_deviation = 0.0;
};

// Elementwise over export_last_layer of every model. Throws InvalidArgument when the
// models do not share one architecture.
std::vector<WeightStats> ensemble_stats(const std::vector<CqcnnModel>& models);

struct CurveStats {
  int epoch = 0;
  double loss_mean = 0.0;
  double loss_msd = 0.0;
  std::optional<double> accuracy_mean;
  std::optional<double> accuracy_msd;
};

// Elementwise over histories of equal length.
std::vector<CurveStats> ensemble_curves(const std::vector<TrainingHistory>& runs);

double pearson(const std::vector<double>& a, const std::vector<double>& b);

std::string history_csv(const TrainingHistory& h);
std::string metrics_csv(const std::vector<std::pair<std::string, Metrics>>& rows);
std::string last_layer_csv(const std::vector<LastLayerWeight>& rows);
std::string ensemble_csv(const std::vector<WeightStats>& rows);
std::string curves_csv(const std::vector<CurveStats>& rows);

}  // namespace qwalk

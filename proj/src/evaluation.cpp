#include "qwalk/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "qwalk/error.hpp"
#include "qwalk/parallel.hpp"

namespace qwalk {

std::size_t Metrics::total() const {
  return confusion[0][0] + confusion[0][1] + confusion[1][0] + confusion[1][1];
}

std::optional<double> Metrics::precision(Label c) const {
  const auto k = static_cast<std::size_t>(c);
  const std::size_t predicted = confusion[0][k] + confusion[1][k];
  if (predicted == 0) return std::nullopt;
  return static_cast<double>(confusion[k][k]) / static_cast<double>(predicted);
}

std::optional<double> Metrics::recall(Label c) const {
  const auto k = static_cast<std::size_t>(c);
  const std::size_t actual = confusion[k][0] + confusion[k][1];
  if (actual == 0) return std::nullopt;
  return static_cast<double>(confusion[k][k]) / static_cast<double>(actual);
}

double Metrics::majority_baseline() const {
  const std::size_t n = total();
  if (n == 0) return 0.0;
  const std::size_t classical = confusion[0][0] + confusion[0][1];
  return static_cast<double>(std::max(classical, n - classical)) / static_cast<double>(n);
}

Metrics evaluate(const CqcnnModel& model, const Dataset& d, std::optional<ClassWeights> weights, int jobs) {
  if (d.empty()) throw InvalidArgument("cannot evaluate on an empty dataset");
  if (d.max_vertices() > model.config().n_max)
    throw InvalidArgument("dataset has graphs with " + std::to_string(d.max_vertices()) +
                          " vertices but the model accepts at most " + std::to_string(model.config().n_max));
  if (!weights) {
    try {
      weights = class_weights(d.class_fractions(), model.config().weighting);
    } catch (const InvalidArgument&) {
      weights = ClassWeights{0.5, 0.5};
    }
  }

  std::vector<Outputs> outputs(d.size());
  parallel_for(d.size(), jobs, [&](std::size_t i) { outputs[i] = model.forward(d.examples[i].graph); });

  Metrics m;
  double loss = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Label truth = d.examples[i].label;
    ++m.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predict(outputs[i]))];
    loss += example_loss(outputs[i], truth, *weights);
  }
  const auto n = static_cast<double>(d.size());
  m.accuracy = static_cast<double>(m.confusion[0][0] + m.confusion[1][1]) / n;
  m.mean_loss = loss / n;
  return m;
}

void Schedule::validate() const {
  if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
  if (batches_per_epoch < 1) throw InvalidArgument("batches per epoch must be >= 1");
  if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
  if (eval_every < 1) throw InvalidArgument("evaluation interval must be >= 1");
}

BatchSampler::BatchSampler(std::size_t population, std::uint64_t seed) : population_(population), rng_(seed) {
  if (population == 0) throw InvalidArgument("cannot sample from an empty training set");
}

std::vector<std::size_t> BatchSampler::next(int batch_size) {
  std::vector<std::size_t> out(static_cast<std::size_t>(batch_size));
  for (auto& i : out) i = static_cast<std::size_t>(uniform_below(rng_, population_));
  return out;
}

TrainingHistory train(CqcnnModel& model, const Dataset& train_set, const Dataset* test_set, const Schedule& schedule,
                      const EpochCallback& on_epoch) {
  schedule.validate();
  if (train_set.empty()) throw InvalidArgument("training set is empty");
  const int n_max = model.config().n_max;
  for (const Dataset* d : {&train_set, test_set})
    if (d && d->max_vertices() > n_max)
      throw InvalidArgument("dataset has graphs with " + std::to_string(d->max_vertices()) +
                            " vertices but the model accepts at most " + std::to_string(n_max));

  TrainingHistory history;
  history.weights = class_weights(train_set.class_fractions(), model.config().weighting);

  std::vector<EncodedGraph> inputs;
  std::vector<Label> labels;
  inputs.reserve(train_set.size());
  for (const auto& e : train_set.examples) {
    inputs.push_back(model.encode(e.graph));
    labels.push_back(e.label);
  }

  BatchSampler sampler(train_set.size(), schedule.seed);
  const double lr = model.config().learning_rate;
  std::vector<EncodedGraph> batch_x;
  std::vector<Label> batch_y;
  for (int epoch = 1; epoch <= schedule.epochs; ++epoch) {
    double total = 0.0;
    for (int b = 0; b < schedule.batches_per_epoch; ++b) {
      batch_x.clear();
      batch_y.clear();
      for (std::size_t i : sampler.next(schedule.batch_size)) {
        batch_x.push_back(inputs[i]);
        batch_y.push_back(labels[i]);
      }
      const auto lg = loss_and_gradient(model, batch_x, batch_y, history.weights);
      if (!std::isfinite(lg.loss)) throw TrainingError(epoch, "training loss is not finite");
      total += lg.loss;
      sgd_step(model, lg.gradient, lr);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = total / schedule.batches_per_epoch;
    if (test_set && !test_set->empty() && (epoch % schedule.eval_every == 0 || epoch == schedule.epochs))
      rec.test = evaluate(model, *test_set, history.weights);
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(history.epochs.back());
  }
  return history;
}

// ---------------------------------------------------------------------------
// Ensembles

std::vector<WeightStats> ensemble_stats(const std::vector<CqcnnModel>& models) {
  if (models.empty()) throw InvalidArgument("ensemble is empty");
  const auto& c0 = models.front().config();
  for (const auto& m : models) {
    const auto& c = m.config();
    if (c.variant != c0.variant || c.n_max != c0.n_max ||
        (c.variant == Variant::kFull && c.hidden_width != c0.hidden_width))
      throw InvalidArgument("ensemble models do not share one architecture");
  }

  std::vector<WeightStats> out;
  const auto first = export_last_layer(models.front());
  std::vector<std::vector<LastLayerWeight>> all;
  for (const auto& m : models) all.push_back(export_last_layer(m));
  const auto n = static_cast<double>(models.size());
  for (std::size_t r = 0; r < first.size(); ++r) {
    WeightStats s{first[r].vertex, first[r].feature, first[r].cls, 0.0, 0.0};
    for (const auto& rows : all) s.mean += rows[r].weight;
    s.mean /= n;
    for (const auto& rows : all) s.mean_squared_deviation += (rows[r].weight - s.mean) * (rows[r].weight - s.mean);
    s.mean_squared_deviation /= n;
    out.push_back(s);
  }
  return out;
}

std::vector<CurveStats> ensemble_curves(const std::vector<TrainingHistory>& runs) {
  if (runs.empty()) throw InvalidArgument("ensemble is empty");
  const std::size_t len = runs.front().epochs.size();
  for (const auto& r : runs)
    if (r.epochs.size() != len) throw InvalidArgument("ensemble histories differ in length");

  const auto n = static_cast<double>(runs.size());
  std::vector<CurveStats> out;
  for (std::size_t e = 0; e < len; ++e) {
    CurveStats s;
    s.epoch = runs.front().epochs[e].epoch;
    bool all_tested = true;
    double acc = 0.0;
    for (const auto& r : runs) {
      s.loss_mean += r.epochs[e].train_loss;
      if (r.epochs[e].test)
        acc += r.epochs[e].test->accuracy;
      else
        all_tested = false;
    }
    s.loss_mean /= n;
    for (const auto& r : runs) s.loss_msd += std::pow(r.epochs[e].train_loss - s.loss_mean, 2);
    s.loss_msd /= n;
    if (all_tested) {
      s.accuracy_mean = acc / n;
      double msd = 0.0;
      for (const auto& r : runs) msd += std::pow(r.epochs[e].test->accuracy - *s.accuracy_mean, 2);
      s.accuracy_msd = msd / n;
    }
    out.push_back(s);
  }
  return out;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw InvalidArgument("pearson needs two equal-length samples");
  const auto n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw InvalidArgument("pearson is undefined for a constant sample");
  return sab / std::sqrt(saa * sbb);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

const char* class_name(Label c) { return c == Label::kQuantum ? "quantum" : "classical"; }

}  // namespace

std::string history_csv(const TrainingHistory& h) {
  std::ostringstream os;
  os << "epoch,train_loss,test_loss,test_accuracy,precision_classical,recall_classical,precision_quantum,"
        "recall_quantum\n";
  for (const auto& r : h.epochs) {
    os << r.epoch << ',' << num(r.train_loss) << ',';
    if (r.test) {
      os << num(r.test->mean_loss) << ',' << num(r.test->accuracy) << ',' << num(r.test->precision(Label::kClassical))
         << ',' << num(r.test->recall(Label::kClassical)) << ',' << num(r.test->precision(Label::kQuantum)) << ','
         << num(r.test->recall(Label::kQuantum));
    } else {
      os << ",,,,,";
    }
    os << '\n';
  }
  return os.str();
}

std::string metrics_csv(const std::vector<std::pair<std::string, Metrics>>& rows) {
  std::ostringstream os;
  os << "dataset,examples,accuracy,mean_loss,majority_baseline,precision_classical,recall_classical,"
        "precision_quantum,recall_quantum,true_c_pred_c,true_c_pred_q,true_q_pred_c,true_q_pred_q\n";
  for (const auto& [name, m] : rows) {
    os << name << ',' << m.total() << ',' << num(m.accuracy) << ',' << num(m.mean_loss) << ','
       << num(m.majority_baseline()) << ',' << num(m.precision(Label::kClassical)) << ','
       << num(m.recall(Label::kClassical)) << ',' << num(m.precision(Label::kQuantum)) << ','
       << num(m.recall(Label::kQuantum)) << ',' << m.confusion[0][0] << ',' << m.confusion[0][1] << ','
       << m.confusion[1][0] << ',' << m.confusion[1][1] << '\n';
  }
  return os.str();
}

std::string last_layer_csv(const std::vector<LastLayerWeight>& rows) {
  std::ostringstream os;
  os << "vertex,feature,class,weight\n";
  for (const auto& r : rows) os << r.vertex << ',' << r.feature << ',' << class_name(r.cls) << ',' << num(r.weight) << '\n';
  return os.str();
}

std::string ensemble_csv(const std::vector<WeightStats>& rows) {
  std::ostringstream os;
  os << "vertex,feature,class,mean,mean_squared_deviation\n";
  for (const auto& r : rows)
    os << r.vertex << ',' << r.feature << ',' << class_name(r.cls) << ',' << num(r.mean) << ','
       << num(r.mean_squared_deviation) << '\n';
  return os.str();
}

std::string curves_csv(const std::vector<CurveStats>& rows) {
  std::ostringstream os;
  os << "epoch,train_loss_mean,train_loss_msd,test_accuracy_mean,test_accuracy_msd\n";
  for (const auto& r : rows)
    os << r.epoch << ',' << num(r.loss_mean) << ',' << num(r.loss_msd) << ',' << num(r.accuracy_mean) << ','
       << num(r.accuracy_msd) << '\n';
  return os.str();
}

}  // namespace qwalk

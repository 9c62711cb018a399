#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qwalk/dataset.hpp"
#include "qwalk/graph.hpp"
#include "qwalk/walkers.hpp"

namespace qwalk {

// ---------------------------------------------------------------------------
// Fixed graph filters

// Edge-to-edge: out(i,j) = [sum_k (M(i,k) + M(k,j)) - 2 M(i,j)] * M(i,j).
// For a 0/1 adjacency matrix this counts the edges that share an endpoint with (i,j).
Eigen::MatrixXd ete_filter(const Eigen::MatrixXd& m);

// Edge-to-vertex: out(i) = sum_k (M(i,k) + M(k,i)) - 2 M(i,i).
Eigen::VectorXd etv_filter(const Eigen::MatrixXd& m);

// Keeps the diagonal and upper triangle, zeroes the strict lower triangle.
Eigen::MatrixXd desymmetrize(const Eigen::MatrixXd& m);

// Four features per vertex plus a leading bias slot (index 0, always 1):
//   1 + 4v + 0: degree                       etv(desym(A))
//   1 + 4v + 1: neighboring edges of the edges at v   etv(desym(ete(A)))
//   1 + 4v + 2: A(init, v)
//   1 + 4v + 3: A(target, v)
// Vertices n..n_max-1 are zero. Throws InvalidArgument when g.size() > n_max.
Eigen::VectorXd extract_features(const Graph& g, int n_max);

constexpr int kFeaturesPerVertex = 4;
constexpr int feature_length(int n_max) { return kFeaturesPerVertex * n_max + 1; }

// ---------------------------------------------------------------------------
// Model

enum class Variant { kSimple, kFull };
enum class ClassWeighting { kFraction, kInverse };
// kDegree divides the two counting features by their largest possible value for n_max
// vertices so they stay O(1) on dense graphs.
enum class FeatureScaling { kNone, kDegree };

struct ModelConfig {
  Variant variant = Variant::kSimple;
  int n_max = 7;
  int hidden_width = 32;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  ClassWeighting weighting = ClassWeighting::kFraction;
  FeatureScaling scaling = FeatureScaling::kNone;
  double init_range = 0.1;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Per-class multipliers in the cross-entropy loss.
struct ClassWeights {
  double classical = 0.5;
  double quantum = 0.5;

  double of(Label label) const { return label == Label::kQuantum ? quantum : classical; }
};

// kFraction uses kappa verbatim; kInverse normalizes 1/kappa to sum to one, which for
// two classes swaps the fractions.
ClassWeights class_weights(const ClassFractions& kappa, ClassWeighting weighting);

// Input after the fixed (non-learnable) part of the network.
struct EncodedGraph {
  Eigen::VectorXd features;
  // Full variant only: desymmetrized n_max x n_max maps fed to the learnable convolutions.
  std::vector<Eigen::MatrixXd> channels;
};

using Outputs = std::array<double, 2>;

// All learnable parameters live in one flat vector so gradients and SGD are plain
// vector arithmetic.
//
// simple: W (2 x F), F = 4 n_max + 1, stored class-major.
// full:   conv kernels (n_max filters x C channels x 3 x 3), then
//         W1 (hidden x (F + n_max * n_max)), then W2 (2 x (hidden + 1), column 0 is bias).
class CqcnnModel {
 public:
  // Weights uniform in [-init_range, init_range] drawn from config.seed.
  explicit CqcnnModel(const ModelConfig& config);
  CqcnnModel(const ModelConfig& config, std::vector<double> parameters);

  const ModelConfig& config() const { return config_; }
  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }

  int channel_count() const;
  int ete_stages() const;
  int conv_filters() const { return config_.n_max; }
  std::size_t conv_size() const;
  std::size_t hidden_input_size() const;

  EncodedGraph encode(const Graph& g) const;
  Outputs forward(const EncodedGraph& x) const;
  Outputs forward(const Graph& g) const { return forward(encode(g)); }

  friend bool operator==(const CqcnnModel&, const CqcnnModel&) = default;

 private:
  ModelConfig config_;
  std::vector<double> params_;
};

std::size_t parameter_count(const ModelConfig& config);

// -kappa(c) * log softmax(x)(c), evaluated stably for any logit gap.
double example_loss(const Outputs& x, Label label, const ClassWeights& weights);

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

// Mean loss and mean analytic gradient over the batch.
LossAndGradient loss_and_gradient(const CqcnnModel& model, std::span<const EncodedGraph> inputs,
                                  std::span<const Label> labels, const ClassWeights& weights);

void sgd_step(CqcnnModel& model, std::span<const double> gradient, double learning_rate);

// argmax; ties go to classical.
Label predict(const Outputs& x);
inline Label predict(const CqcnnModel& model, const Graph& g) { return predict(model.forward(g)); }

struct LastLayerWeight {
  int vertex = 0;   // 1-based vertex, 0 for the bias / non-vertex units
  int feature = 0;  // 1..4 per vertex, 0 for the bias; hidden-unit index for the full variant
  Label cls = Label::kClassical;
  double weight = 0.0;
};

// simple: bias + 4 features per vertex for each class (2 * (4 n_max + 1) rows).
// full: bias + hidden units of the output layer.
std::vector<LastLayerWeight> export_last_layer(const CqcnnModel& model);

std::string to_json(const CqcnnModel& model);
CqcnnModel model_from_json(std::string_view text);
void save_model(const CqcnnModel& model, const std::filesystem::path& path);
CqcnnModel load_model(const std::filesystem::path& path);

std::string_view to_string(Variant v);
std::string_view to_string(ClassWeighting w);
std::string_view to_string(FeatureScaling s);
Variant parse_variant(std::string_view s);
ClassWeighting parse_weighting(std::string_view s);
FeatureScaling parse_scaling(std::string_view s);

}  // namespace qwalk

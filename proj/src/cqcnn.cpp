#include "qwalk/cqcnn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qwalk/error.hpp"
#include "qwalk/rng.hpp"

namespace qwalk {

Eigen::MatrixXd ete_filter(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw InvalidArgument("ete_filter: matrix must be square");
  const Eigen::VectorXd row = m.rowwise().sum();
  const Eigen::VectorXd col = m.colwise().sum().transpose();
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      out(i, j) = (row(i) + col(j) - 2.0 * m(i, j)) * m(i, j);
  return out;
}

Eigen::VectorXd etv_filter(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw InvalidArgument("etv_filter: matrix must be square");
  return m.rowwise().sum() + m.colwise().sum().transpose() - 2.0 * m.diagonal();
}

Eigen::MatrixXd desymmetrize(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw InvalidArgument("desymmetrize: matrix must be square");
  return m.triangularView<Eigen::Upper>();
}

namespace {

Eigen::MatrixXd padded(const Eigen::MatrixXd& m, int n_max) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_max, n_max);
  out.topLeftCorner(m.rows(), m.cols()) = m;
  return out;
}

void check_size(const Graph& g, int n_max) {
  if (g.size() > n_max)
    throw InvalidArgument("graph has " + std::to_string(g.size()) + " vertices, model accepts at most " +
                          std::to_string(n_max));
}

}  // namespace

Eigen::VectorXd extract_features(const Graph& g, int n_max) {
  check_size(g, n_max);
  const int n = g.size();
  const Eigen::MatrixXd a = g.adjacency_matrix();
  const Eigen::VectorXd degree = etv_filter(desymmetrize(a));
  const Eigen::VectorXd neighbors = etv_filter(desymmetrize(ete_filter(a)));

  Eigen::VectorXd f = Eigen::VectorXd::Zero(feature_length(n_max));
  f(0) = 1.0;
  for (int v = 0; v < n; ++v) {
    f(1 + 4 * v + 0) = degree(v);
    f(1 + 4 * v + 1) = neighbors(v);
    f(1 + 4 * v + 2) = a(g.init(), v);
    f(1 + 4 * v + 3) = a(g.target(), v);
  }
  return f;
}

ClassWeights class_weights(const ClassFractions& kappa, ClassWeighting weighting) {
  if (weighting == ClassWeighting::kFraction) return {kappa.classical, kappa.quantum};
  if (kappa.classical <= 0.0 || kappa.quantum <= 0.0)
    throw InvalidArgument("inverse class weighting needs both classes present");
  return {kappa.quantum, kappa.classical};
}

// ---------------------------------------------------------------------------
// Model layout

namespace {

int stages_for(int n_max) {
  int s = 0;
  while ((1 << s) < n_max) ++s;
  return std::max(s, 1);
}

constexpr int kTransitionPowers = 2;

struct Layout {
  int n_max = 0;
  int features = 0;
  int channels = 0;
  int filters = 0;
  int hidden = 0;
  std::size_t conv = 0;     // offset 0
  std::size_t w1_rows = 0;  // hidden
  std::size_t w1_cols = 0;  // features + filters * n_max
  std::size_t w1 = 0;       // offset of W1
  std::size_t w2 = 0;       // offset of W2
  std::size_t total = 0;
};

Layout layout_of(const ModelConfig& c) {
  Layout l;
  l.n_max = c.n_max;
  l.features = feature_length(c.n_max);
  if (c.variant == Variant::kSimple) {
    l.total = 2 * static_cast<std::size_t>(l.features);
    return l;
  }
  l.channels = 1 + stages_for(c.n_max) + 2 * kTransitionPowers;
  l.filters = c.n_max;
  l.hidden = c.hidden_width;
  l.conv = static_cast<std::size_t>(l.filters) * l.channels * 9;
  l.w1_rows = static_cast<std::size_t>(l.hidden);
  l.w1_cols = static_cast<std::size_t>(l.features) + static_cast<std::size_t>(l.filters) * l.n_max;
  l.w1 = l.conv;
  l.w2 = l.w1 + l.w1_rows * l.w1_cols;
  l.total = l.w2 + 2 * static_cast<std::size_t>(l.hidden + 1);
  return l;
}

void validate(const ModelConfig& c) {
  if (c.n_max < 3) throw InvalidArgument("n_max must be at least 3");
  if (c.variant == Variant::kFull && c.hidden_width < 1) throw InvalidArgument("hidden_width must be positive");
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate))
    throw InvalidArgument("learning rate must be positive");
  if (!(c.init_range >= 0.0) || !std::isfinite(c.init_range)) throw InvalidArgument("init_range must be >= 0");
}

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

}  // namespace

std::size_t parameter_count(const ModelConfig& config) { return layout_of(config).total; }

CqcnnModel::CqcnnModel(const ModelConfig& config) : config_(config) {
  validate(config_);
  params_.resize(parameter_count(config_));
  Rng rng(config_.seed);
  for (auto& p : params_) p = uniform_real(rng, -config_.init_range, config_.init_range);
}

CqcnnModel::CqcnnModel(const ModelConfig& config, std::vector<double> parameters)
    : config_(config), params_(std::move(parameters)) {
  validate(config_);
  if (params_.size() != parameter_count(config_))
    throw InvalidArgument("expected " + std::to_string(parameter_count(config_)) + " parameters, got " +
                          std::to_string(params_.size()));
}

int CqcnnModel::channel_count() const { return layout_of(config_).channels; }
int CqcnnModel::ete_stages() const { return config_.variant == Variant::kFull ? stages_for(config_.n_max) : 0; }
std::size_t CqcnnModel::conv_size() const { return layout_of(config_).conv; }
std::size_t CqcnnModel::hidden_input_size() const { return layout_of(config_).w1_cols; }

EncodedGraph CqcnnModel::encode(const Graph& g) const {
  const int n_max = config_.n_max;
  EncodedGraph x;
  x.features = extract_features(g, n_max);
  if (config_.scaling == FeatureScaling::kDegree) {
    const double max_degree = n_max - 1;
    const double max_neighbors = max_degree * 2.0 * (n_max - 2);
    for (int v = 0; v < n_max; ++v) {
      x.features(1 + 4 * v + 0) /= max_degree;
      x.features(1 + 4 * v + 1) /= max_neighbors;
    }
  }
  if (config_.variant == Variant::kSimple) return x;

  const Eigen::MatrixXd a = g.adjacency_matrix();
  x.channels.reserve(static_cast<std::size_t>(channel_count()));
  x.channels.push_back(padded(desymmetrize(a), n_max));

  // Repeated edge-to-edge stages, each rescaled by the largest possible neighbor count.
  const double stage_scale = 1.0 / (2.0 * (n_max - 1));
  Eigen::MatrixXd stage = a;
  for (int s = 0; s < stages_for(n_max); ++s) {
    stage = ete_filter(stage) * stage_scale;
    x.channels.push_back(padded(desymmetrize(stage), n_max));
  }

  // Edge maps weighted by the k-step distribution of the unabsorbed walk from the
  // initial and target vertices.
  const Eigen::VectorXd degree = a.rowwise().sum();
  Eigen::MatrixXd t = a;
  for (int j = 0; j < g.size(); ++j) t.col(j) /= degree(j);
  for (int v : {g.init(), g.target()}) {
    Eigen::VectorXd r = Eigen::VectorXd::Unit(g.size(), v);
    for (int k = 1; k <= kTransitionPowers; ++k) {
      r = t * r;
      Eigen::MatrixXd m(g.size(), g.size());
      for (int j = 0; j < g.size(); ++j)
        for (int i = 0; i < g.size(); ++i) m(i, j) = a(i, j) * (r(i) + r(j));
      x.channels.push_back(padded(desymmetrize(m), n_max));
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// Forward and backward passes

namespace {

struct FullTape {
  std::vector<Eigen::MatrixXd> conv;  // per filter
  Eigen::VectorXd u;                  // hidden-layer input
  Eigen::VectorXd z;                  // pre-activation
  Eigen::VectorXd h;                  // post-activation
};

void check_encoding(const EncodedGraph& x, const Layout& l) {
  if (x.features.size() != l.features) throw InvalidArgument("encoded features do not match the model size");
  if (static_cast<int>(x.channels.size()) != l.channels)
    throw InvalidArgument("encoded channels do not match the model variant");
}

// out(i,j) = sum_{p,q} k(p,q) in(i+p-1, j+q-1), zero outside.
void conv3_accumulate(const Eigen::MatrixXd& in, const double* k, Eigen::MatrixXd& out) {
  const Eigen::Index n = in.rows();
  for (int p = 0; p < 3; ++p) {
    for (int q = 0; q < 3; ++q) {
      const double w = k[p * 3 + q];
      if (w == 0.0) continue;
      const Eigen::Index di = p - 1, dj = q - 1;
      const Eigen::Index i0 = std::max<Eigen::Index>(0, -di), i1 = std::min(n, n - di);
      const Eigen::Index j0 = std::max<Eigen::Index>(0, -dj), j1 = std::min(n, n - dj);
      if (i1 <= i0 || j1 <= j0) continue;
      out.block(i0, j0, i1 - i0, j1 - j0) += w * in.block(i0 + di, j0 + dj, i1 - i0, j1 - j0);
    }
  }
}

Outputs forward_simple(const Layout& l, std::span<const double> p, const EncodedGraph& x) {
  const ConstMap w(p.data(), 2, l.features);
  const Eigen::Vector2d out = w * x.features;
  return {out(0), out(1)};
}

Outputs forward_full(const Layout& l, std::span<const double> p, const EncodedGraph& x, FullTape& tape) {
  const int n = l.n_max;
  tape.conv.assign(static_cast<std::size_t>(l.filters), Eigen::MatrixXd::Zero(n, n));
  tape.u.resize(static_cast<Eigen::Index>(l.w1_cols));
  tape.u.head(l.features) = x.features;
  for (int f = 0; f < l.filters; ++f) {
    auto& y = tape.conv[static_cast<std::size_t>(f)];
    for (int c = 0; c < l.channels; ++c)
      conv3_accumulate(x.channels[static_cast<std::size_t>(c)], p.data() + (f * l.channels + c) * 9, y);
    tape.u.segment(l.features + f * n, n) = etv_filter(y);
  }
  const ConstMap w1(p.data() + l.w1, static_cast<Eigen::Index>(l.w1_rows), static_cast<Eigen::Index>(l.w1_cols));
  tape.z = w1 * tape.u;
  tape.h = tape.z.cwiseMax(0.0);
  const ConstMap w2(p.data() + l.w2, 2, l.hidden + 1);
  const Eigen::Vector2d out = w2.col(0) + w2.rightCols(l.hidden) * tape.h;
  return {out(0), out(1)};
}

// Accumulates scale * d(output)/d(params) . dx into grad.
void backward_simple(const Layout& l, const EncodedGraph& x, const Eigen::Vector2d& dx, std::span<double> grad) {
  MutMap g(grad.data(), 2, l.features);
  g.noalias() += dx * x.features.transpose();
}

void backward_full(const Layout& l, std::span<const double> p, const EncodedGraph& x, const FullTape& tape,
                   const Eigen::Vector2d& dx, std::span<double> grad) {
  const int n = l.n_max;
  const auto hidden = static_cast<Eigen::Index>(l.hidden);

  MutMap gw2(grad.data() + l.w2, 2, hidden + 1);
  gw2.col(0) += dx;
  gw2.rightCols(hidden).noalias() += dx * tape.h.transpose();

  const ConstMap w2(p.data() + l.w2, 2, hidden + 1);
  const Eigen::VectorXd dh = w2.rightCols(hidden).transpose() * dx;
  const Eigen::VectorXd dz = dh.array() * (tape.z.array() > 0.0).cast<double>();

  MutMap gw1(grad.data() + l.w1, static_cast<Eigen::Index>(l.w1_rows), static_cast<Eigen::Index>(l.w1_cols));
  gw1.noalias() += dz * tape.u.transpose();

  const ConstMap w1(p.data() + l.w1, static_cast<Eigen::Index>(l.w1_rows), static_cast<Eigen::Index>(l.w1_cols));
  const Eigen::VectorXd du = w1.transpose() * dz;

  for (int f = 0; f < l.filters; ++f) {
    const Eigen::VectorXd de = du.segment(l.features + f * n, n);
    // etv is linear: d(etv)/dY(i,j) = de(i) + de(j) - 2 de(i) [i == j].
    Eigen::MatrixXd dy = de.replicate(1, n) + de.transpose().replicate(n, 1);
    dy.diagonal() -= 2.0 * de;
    for (int c = 0; c < l.channels; ++c) {
      const auto& in = x.channels[static_cast<std::size_t>(c)];
      double* gk = grad.data() + (f * l.channels + c) * 9;
      for (int pp = 0; pp < 3; ++pp) {
        for (int q = 0; q < 3; ++q) {
          const Eigen::Index di = pp - 1, dj = q - 1;
          const Eigen::Index i0 = std::max<Eigen::Index>(0, -di), i1 = std::min<Eigen::Index>(n, n - di);
          const Eigen::Index j0 = std::max<Eigen::Index>(0, -dj), j1 = std::min<Eigen::Index>(n, n - dj);
          if (i1 <= i0 || j1 <= j0) continue;
          gk[pp * 3 + q] += (dy.block(i0, j0, i1 - i0, j1 - j0).array() *
                             in.block(i0 + di, j0 + dj, i1 - i0, j1 - j0).array())
                                .sum();
        }
      }
    }
  }
}

double sigmoid(double d) {
  if (d >= 0.0) return 1.0 / (1.0 + std::exp(-d));
  const double e = std::exp(d);
  return e / (1.0 + e);
}

}  // namespace

Outputs CqcnnModel::forward(const EncodedGraph& x) const {
  const Layout l = layout_of(config_);
  check_encoding(x, l);
  if (config_.variant == Variant::kSimple) return forward_simple(l, params_, x);
  FullTape tape;
  return forward_full(l, params_, x, tape);
}

double example_loss(const Outputs& x, Label label, const ClassWeights& weights) {
  // -log softmax_c = log(1 + exp(d)) with d = x_other - x_c, split on the sign of d so
  // the exponent never exceeds zero and saturated losses keep full relative precision.
  const auto c = static_cast<std::size_t>(label);
  const double d = x[1 - c] - x[c];
  const double softplus = d > 0.0 ? d + std::log1p(std::exp(-d)) : std::log1p(std::exp(d));
  return weights.of(label) * softplus;
}

LossAndGradient loss_and_gradient(const CqcnnModel& model, std::span<const EncodedGraph> inputs,
                                  std::span<const Label> labels, const ClassWeights& weights) {
  if (inputs.empty()) throw InvalidArgument("gradient batch is empty");
  if (inputs.size() != labels.size()) throw InvalidArgument("inputs and labels differ in length");
  const Layout l = layout_of(model.config());
  const auto p = model.parameters();

  LossAndGradient out;
  out.gradient.assign(l.total, 0.0);
  FullTape tape;
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    const auto& x = inputs[b];
    check_encoding(x, l);
    const bool simple = model.config().variant == Variant::kSimple;
    const Outputs y = simple ? forward_simple(l, p, x) : forward_full(l, p, x, tape);
    out.loss += example_loss(y, labels[b], weights);

    // dL/dx = w * p_other * (e_other - e_c); p_c - 1 = -p_other is formed without cancellation.
    const auto c = static_cast<Eigen::Index>(labels[b]);
    const double g = weights.of(labels[b]) * sigmoid(y[static_cast<std::size_t>(1 - c)] - y[static_cast<std::size_t>(c)]);
    Eigen::Vector2d dx;
    dx(c) = -g;
    dx(1 - c) = g;
    if (simple)
      backward_simple(l, x, dx, out.gradient);
    else
      backward_full(l, p, x, tape, dx, out.gradient);
  }
  const double inv = 1.0 / static_cast<double>(inputs.size());
  out.loss *= inv;
  for (auto& g : out.gradient) g *= inv;
  return out;
}

void sgd_step(CqcnnModel& model, std::span<const double> gradient, double learning_rate) {
  auto p = model.parameters();
  if (gradient.size() != p.size()) throw InvalidArgument("gradient size does not match the model");
  if (!(learning_rate >= 0.0)) throw InvalidArgument("learning rate must be nonnegative");
  for (std::size_t i = 0; i < p.size(); ++i) p[i] -= learning_rate * gradient[i];
}

Label predict(const Outputs& x) { return x[1] > x[0] ? Label::kQuantum : Label::kClassical; }

std::vector<LastLayerWeight> export_last_layer(const CqcnnModel& model) {
  const Layout l = layout_of(model.config());
  const auto p = model.parameters();
  std::vector<LastLayerWeight> rows;
  for (Label cls : {Label::kClassical, Label::kQuantum}) {
    const auto c = static_cast<std::size_t>(cls);
    if (model.config().variant == Variant::kSimple) {
      for (int i = 0; i < l.features; ++i) {
        LastLayerWeight r;
        r.vertex = i == 0 ? 0 : (i - 1) / kFeaturesPerVertex + 1;
        r.feature = i == 0 ? 0 : (i - 1) % kFeaturesPerVertex + 1;
        r.cls = cls;
        r.weight = p[c * static_cast<std::size_t>(l.features) + static_cast<std::size_t>(i)];
        rows.push_back(r);
      }
    } else {
      for (int i = 0; i <= l.hidden; ++i)
        rows.push_back({0, i, cls, p[l.w2 + c * static_cast<std::size_t>(l.hidden + 1) + static_cast<std::size_t>(i)]});
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Serialization

std::string_view to_string(Variant v) { return v == Variant::kFull ? "full" : "simple"; }
std::string_view to_string(ClassWeighting w) { return w == ClassWeighting::kInverse ? "inverse" : "fraction"; }
std::string_view to_string(FeatureScaling s) { return s == FeatureScaling::kDegree ? "degree" : "none"; }

Variant parse_variant(std::string_view s) {
  if (s == "simple") return Variant::kSimple;
  if (s == "full") return Variant::kFull;
  throw InvalidArgument("unknown variant '" + std::string(s) + "' (expected simple or full)");
}

ClassWeighting parse_weighting(std::string_view s) {
  if (s == "fraction") return ClassWeighting::kFraction;
  if (s == "inverse") return ClassWeighting::kInverse;
  throw InvalidArgument("unknown class weighting '" + std::string(s) + "' (expected fraction or inverse)");
}

FeatureScaling parse_scaling(std::string_view s) {
  if (s == "none") return FeatureScaling::kNone;
  if (s == "degree") return FeatureScaling::kDegree;
  throw InvalidArgument("unknown feature scaling '" + std::string(s) + "' (expected none or degree)");
}

namespace {
constexpr std::string_view kModelFormat = "qwalk-cqcnn";
constexpr int kModelVersion = 1;
}  // namespace

std::string to_json(const CqcnnModel& model) {
  const auto& c = model.config();
  nlohmann::ordered_json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["variant"] = to_string(c.variant);
  j["n_max"] = c.n_max;
  j["hidden_width"] = c.hidden_width;
  j["learning_rate"] = c.learning_rate;
  j["seed"] = c.seed;
  j["weighting"] = to_string(c.weighting);
  j["scaling"] = to_string(c.scaling);
  j["init_range"] = c.init_range;
  j["parameter_count"] = model.parameters().size();
  j["parameters"] = std::vector<double>(model.parameters().begin(), model.parameters().end());
  return j.dump(1);
}

CqcnnModel model_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kModelFormat) throw ValidationError("not a qwalk model file");
    if (j.at("version").get<int>() != kModelVersion) throw ValidationError("unsupported model file version");
    ModelConfig c;
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.n_max = j.at("n_max").get<int>();
    c.hidden_width = j.at("hidden_width").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.weighting = parse_weighting(j.at("weighting").get<std::string>());
    c.scaling = parse_scaling(j.at("scaling").get<std::string>());
    c.init_range = j.at("init_range").get<double>();
    auto params = j.at("parameters").get<std::vector<double>>();
    if (params.size() != j.at("parameter_count").get<std::size_t>())
      throw ValidationError("parameter_count does not match the parameter array");
    for (double v : params)
      if (!std::isfinite(v)) throw ValidationError("model has non-finite parameters");
    return CqcnnModel(c, std::move(params));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ValidationError(std::string("invalid model file: ") + e.what());
  }
}

void save_model(const CqcnnModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(model) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

CqcnnModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace qwalk

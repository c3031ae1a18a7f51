#include "assocmem/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "assocmem/rng.hpp"

namespace assocmem {

std::string_view to_string(Precision precision) {
  return precision == Precision::F32 ? "f32" : "f64";
}

Precision parse_precision(std::string_view text) {
  if (text == "f32") return Precision::F32;
  if (text == "f64") return Precision::F64;
  throw ConfigError("unknown precision '" + std::string(text) + "' (expected f32 or f64)");
}

std::string_view to_string(StopReason reason) {
  return reason == StopReason::AccuracyReached ? "accuracy_reached" : "max_steps";
}

// ---------------------------------------------------------------------------
// WeightModel

WeightModel WeightModel::full_rank(Eigen::MatrixXd w) {
  if (w.rows() != w.cols() || w.rows() < 1) {
    throw std::invalid_argument("full-rank weight must be a non-empty square matrix");
  }
  WeightModel model;
  model.w_ = std::move(w);
  return model;
}

WeightModel WeightModel::factored(Eigen::MatrixXd q, Eigen::MatrixXd r) {
  if (q.rows() != r.rows() || q.cols() != r.cols() || q.rows() < 1 || q.cols() < 1) {
    throw std::invalid_argument("factors Q and R must both be d x m with d, m >= 1");
  }
  WeightModel model;
  model.factored_ = true;
  model.q_ = std::move(q);
  model.r_ = std::move(r);
  return model;
}

const Eigen::MatrixXd& WeightModel::w() const {
  if (factored_) throw std::logic_error("w() called on a factored model");
  return w_;
}
const Eigen::MatrixXd& WeightModel::q() const {
  if (!factored_) throw std::logic_error("q() called on a full-rank model");
  return q_;
}
const Eigen::MatrixXd& WeightModel::r() const {
  if (!factored_) throw std::logic_error("r() called on a full-rank model");
  return r_;
}
Eigen::MatrixXd& WeightModel::w() { return const_cast<Eigen::MatrixXd&>(std::as_const(*this).w()); }
Eigen::MatrixXd& WeightModel::q() { return const_cast<Eigen::MatrixXd&>(std::as_const(*this).q()); }
Eigen::MatrixXd& WeightModel::r() { return const_cast<Eigen::MatrixXd&>(std::as_const(*this).r()); }

Eigen::MatrixXd WeightModel::effective_weight() const {
  return factored_ ? Eigen::MatrixXd(q_ * r_.transpose()) : w_;
}

Eigen::VectorXd WeightModel::apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != d()) throw std::invalid_argument("apply: dimension mismatch");
  if (factored_) return q_ * (r_.transpose() * x);
  return w_ * x;
}

int rank_from_kappa(double kappa, int d) {
  if (!(kappa > 0.0 && kappa <= 1.0)) throw std::invalid_argument("kappa must lie in (0, 1]");
  return std::clamp(static_cast<int>(std::lround(kappa * d)), 1, d);
}

WeightModel init_model(int d, double kappa, std::uint64_t seed, bool force_factored) {
  if (d < 1) throw std::invalid_argument("init_model: d must be >= 1");
  const int m = rank_from_kappa(kappa, d);
  const double scale = 1.0 / d;
  auto draw = [&](int cols, std::uint32_t which) {
    Eigen::MatrixXd out(d, cols);
    fill_normals(seed, StreamRole::Init, which, 0, {out.data(), static_cast<std::size_t>(out.size())});
    return Eigen::MatrixXd(out * scale);
  };
  if (m == d && !force_factored) return WeightModel::full_rank(draw(d, 0));
  return WeightModel::factored(draw(m, 1), draw(m, 2));
}

// ---------------------------------------------------------------------------
// Score / loss / gradient engine

namespace {

constexpr Eigen::Index kColumnChunk = 1024;

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

// Holds the instance data in working precision. For a score column s (target
// mu) it accumulates loss and strict-argmax hits, and optionally overwrites s
// with (softmax(s) - e_mu) / p, the derivative of the mean loss w.r.t. s.
template <class S>
class Engine {
 public:
  Engine(const ProblemInstance& inst, double dp_cache_mb)
      : inst_(inst), d_(inst.d()), p_(inst.p()), inputs_(inst.inputs().cast<S>()) {
    if (inst.mode() == Mode::OP) {
      outputs_ = inst.outputs_shared().cast<S>();
    } else {
      const double bytes = static_cast<double>(d_) * p_ * p_ * sizeof(S);
      if (bytes <= dp_cache_mb * 1024.0 * 1024.0) {
        cache_.resize(d_, static_cast<Eigen::Index>(p_) * p_);
        Eigen::MatrixXd block(d_, p_);
        for (int mu = 0; mu < p_; ++mu) {
          inst.fill_output_block(mu, block);
          cache_.middleCols(static_cast<Eigen::Index>(mu) * p_, p_) = block.cast<S>();
        }
        cached_ = true;
      } else {
        scratch_d_.resize(d_, p_);
        scratch_.resize(d_, p_);
      }
    }
  }

  const Mat<S>& inputs() const { return inputs_; }

  // V holds v_mu = W e_mu in its columns. If z is non-null it receives
  // dL/dV (d x p).
  Evaluation evaluate(const Mat<S>& v, Mat<S>* z) {
    double loss = 0.0;
    long hits = 0;
    if (z != nullptr) z->resize(d_, p_);
    if (inst_.mode() == Mode::OP) {
      Mat<S> s;
      for (Eigen::Index c0 = 0; c0 < p_; c0 += kColumnChunk) {
        const Eigen::Index nb = std::min<Eigen::Index>(kColumnChunk, p_ - c0);
        s.noalias() = outputs_.transpose() * v.middleCols(c0, nb);
        for (Eigen::Index j = 0; j < nb; ++j) {
          column(s.col(j), static_cast<int>(c0 + j), z != nullptr, loss, hits);
        }
        if (z != nullptr) z->middleCols(c0, nb).noalias() = outputs_ * s;
      }
    } else {
      Vec<S> s(p_);
      for (int mu = 0; mu < p_; ++mu) {
        const auto& block = dp_block(mu);
        s.noalias() = block.transpose() * v.col(mu);
        column(s, mu, z != nullptr, loss, hits);
        if (z != nullptr) z->col(mu).noalias() = block * s;
      }
    }
    return {loss / p_, static_cast<double>(hits) / p_};
  }

  Vec<S> score_column(const Mat<S>& v, int mu) {
    if (inst_.mode() == Mode::OP) return outputs_.transpose() * v.col(mu);
    return dp_block(mu).transpose() * v.col(mu);
  }

 private:
  using BlockRef = Eigen::Ref<const Mat<S>>;

  BlockRef dp_block(int mu) {
    if (cached_) return cache_.middleCols(static_cast<Eigen::Index>(mu) * p_, p_);
    inst_.fill_output_block(mu, scratch_d_);
    scratch_ = scratch_d_.template cast<S>();
    return scratch_;
  }

  template <class Col>
  void column(Col&& s, int mu, bool want_grad, double& loss, long& hits) const {
    const S target = s(mu);
    S best_other = -std::numeric_limits<S>::infinity();
    S top = target;
    for (Eigen::Index r = 0; r < s.size(); ++r) {
      if (r != mu) best_other = std::max(best_other, s(r));
      top = std::max(top, s(r));
    }
    if (!std::isfinite(static_cast<double>(top)) || !std::isfinite(static_cast<double>(best_other))) {
      throw NumericError("non-finite score for input " + std::to_string(mu));
    }
    if (target > best_other) ++hits;
    // log-sum-exp accumulated in double for both precisions.
    double sum = 0.0;
    for (Eigen::Index r = 0; r < s.size(); ++r) sum += std::exp(static_cast<double>(s(r) - top));
    const double lse = static_cast<double>(top) + std::log(sum);
    loss += lse - static_cast<double>(target);
    if (want_grad) {
      const double inv_p = 1.0 / static_cast<double>(p_);
      for (Eigen::Index r = 0; r < s.size(); ++r) {
        s(r) = static_cast<S>(std::exp(static_cast<double>(s(r)) - lse) * inv_p);
      }
      s(mu) -= static_cast<S>(inv_p);
    }
  }

  const ProblemInstance& inst_;
  int d_;
  int p_;
  Mat<S> inputs_;
  Mat<S> outputs_;
  Mat<S> cache_;
  bool cached_ = false;
  Eigen::MatrixXd scratch_d_;
  Mat<S> scratch_;
};

void check_dims(const WeightModel& model, const ProblemInstance& instance) {
  if (model.d() != instance.d()) {
    throw std::invalid_argument("model dimension " + std::to_string(model.d()) +
                                " does not match instance dimension " +
                                std::to_string(instance.d()));
  }
}

// Outputs of the model for all inputs, V = W E, without forming W.
Eigen::MatrixXd forward(const WeightModel& model, const Eigen::MatrixXd& inputs) {
  if (model.is_factored()) return model.q() * (model.r().transpose() * inputs);
  return model.w() * inputs;
}

// Keep the double-precision entry points from copying a large DP cache.
constexpr double kNoCache = 0.0;

}  // namespace

Eigen::VectorXd scores(const WeightModel& model, const ProblemInstance& instance, int mu) {
  check_dims(model, instance);
  if (mu < 0 || mu >= instance.p()) throw std::out_of_range("scores: mu out of range");
  const Eigen::VectorXd v = model.apply(instance.inputs().col(mu));
  if (instance.mode() == Mode::OP) return instance.outputs_shared().transpose() * v;
  Eigen::MatrixXd block(instance.d(), instance.p());
  instance.fill_output_block(mu, block);
  return block.transpose() * v;
}

double cross_entropy_loss(const WeightModel& model, const ProblemInstance& instance) {
  check_dims(model, instance);
  Engine<double> engine(instance, kNoCache);
  return engine.evaluate(forward(model, instance.inputs()), nullptr).loss;
}

double accuracy(const WeightModel& model, const ProblemInstance& instance) {
  check_dims(model, instance);
  Engine<double> engine(instance, kNoCache);
  return engine.evaluate(forward(model, instance.inputs()), nullptr).accuracy;
}

WeightModel loss_gradient(const WeightModel& model, const ProblemInstance& instance) {
  check_dims(model, instance);
  Engine<double> engine(instance, kNoCache);
  const Eigen::MatrixXd& e = instance.inputs();
  Eigen::MatrixXd z;
  engine.evaluate(forward(model, e), &z);
  if (!z.allFinite()) throw NumericError("non-finite gradient");
  if (!model.is_factored()) return WeightModel::full_rank(z * e.transpose());
  const Eigen::MatrixXd a = model.r().transpose() * e;  // m x p
  return WeightModel::factored(z * a.transpose(), e * (z.transpose() * model.q()));
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw ConfigError("train." + key + ": " + why);
  };
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("lr", "must be > 0");
  if (max_steps < 0) fail("max_steps", "must be >= 0");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) fail("warmup", "must be in [0, 1)");
  if (!(stop_accuracy >= 0.0 && stop_accuracy <= 1.0)) fail("stop_accuracy", "must be in [0, 1]");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) fail("beta1", "must be in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) fail("beta2", "must be in [0, 1)");
  if (!(adam_eps > 0.0)) fail("eps", "must be > 0");
  if (!(dp_cache_mb >= 0.0)) fail("dp_cache_mb", "must be >= 0");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"max_steps", max_steps},
          {"warmup_fraction", warmup_fraction}, {"stop_accuracy", stop_accuracy},
          {"adam_beta1", adam_beta1}, {"adam_beta2", adam_beta2},
          {"adam_eps", adam_eps}, {"precision", std::string(to_string(precision))},
          {"dp_cache_mb", dp_cache_mb}};
}

double scheduled_lr(const TrainConfig& config, int t) {
  const int total = config.max_steps;
  const int warmup = static_cast<int>(std::lround(config.warmup_fraction * total));
  if (t < warmup) return config.learning_rate * (t + 1) / warmup;
  const double progress = static_cast<double>(t - warmup) / std::max(1, total - warmup);
  return config.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

nlohmann::json TrainReport::to_json() const {
  return {{"losses", losses},
          {"accuracies", accuracies},
          {"steps_used", steps_used},
          {"stop_reason", std::string(to_string(stop_reason))},
          {"d", model.d()},
          {"m", model.m()},
          {"variant", model.is_factored() ? "factored" : "full_rank"}};
}

namespace {

template <class S>
struct AdamState {
  Mat<S> first;
  Mat<S> second;

  explicit AdamState(const Mat<S>& like)
      : first(Mat<S>::Zero(like.rows(), like.cols())),
        second(Mat<S>::Zero(like.rows(), like.cols())) {}

  void step(Mat<S>& param, const Mat<S>& grad, const TrainConfig& c, double lr, int t) {
    const S b1 = static_cast<S>(c.adam_beta1);
    const S b2 = static_cast<S>(c.adam_beta2);
    first = b1 * first + (S(1) - b1) * grad;
    second = b2 * second + (S(1) - b2) * grad.cwiseProduct(grad);
    const S corr1 = static_cast<S>(1.0 - std::pow(c.adam_beta1, t + 1));
    const S corr2 = static_cast<S>(1.0 - std::pow(c.adam_beta2, t + 1));
    const S eps = static_cast<S>(c.adam_eps);
    param.array() -= static_cast<S>(lr) * (first.array() / corr1) /
                     ((second.array() / corr2).sqrt() + eps);
  }
};

template <class S>
TrainReport train_impl(const ProblemInstance& instance, WeightModel model,
                       const TrainConfig& config) {
  Engine<S> engine(instance, config.dp_cache_mb);
  const Mat<S>& e = engine.inputs();
  const bool factored = model.is_factored();
  Mat<S> w, q, r;
  if (factored) {
    q = model.q().cast<S>();
    r = model.r().cast<S>();
  } else {
    w = model.w().cast<S>();
  }
  AdamState<S> adam_a(factored ? q : w);
  AdamState<S> adam_b(factored ? r : Mat<S>(0, 0));

  TrainReport report;
  Mat<S> v, z, a, grad_a, grad_b;
  for (int t = 0;; ++t) {
    const bool may_update = t < config.max_steps;
    if (factored) {
      a.noalias() = r.transpose() * e;
      v.noalias() = q * a;
    } else {
      v.noalias() = w * e;
    }
    Evaluation ev;
    try {
      ev = engine.evaluate(v, may_update ? &z : nullptr);
    } catch (const NumericError& err) {
      throw NumericError(std::string(err.what()) + " at step " + std::to_string(t), t);
    }
    if (!std::isfinite(ev.loss)) {
      throw NumericError("non-finite loss at step " + std::to_string(t), t);
    }
    report.losses.push_back(ev.loss);
    report.accuracies.push_back(ev.accuracy);
    report.steps_used = t;
    if (ev.accuracy >= config.stop_accuracy) {
      report.stop_reason = StopReason::AccuracyReached;
      break;
    }
    if (!may_update) {
      report.stop_reason = StopReason::MaxSteps;
      break;
    }
    const double lr = scheduled_lr(config, t);
    if (factored) {
      grad_a.noalias() = z * a.transpose();
      grad_b.noalias() = e * (z.transpose() * q);
      if (!grad_a.allFinite() || !grad_b.allFinite()) {
        throw NumericError("non-finite gradient at step " + std::to_string(t), t);
      }
      adam_a.step(q, grad_a, config, lr, t);
      adam_b.step(r, grad_b, config, lr, t);
    } else {
      grad_a.noalias() = z * e.transpose();
      if (!grad_a.allFinite()) {
        throw NumericError("non-finite gradient at step " + std::to_string(t), t);
      }
      adam_a.step(w, grad_a, config, lr, t);
    }
  }
  report.model = factored ? WeightModel::factored(q.template cast<double>(), r.template cast<double>())
                          : WeightModel::full_rank(w.template cast<double>());
  return report;
}

}  // namespace

TrainReport train(const ProblemInstance& instance, WeightModel model, const TrainConfig& config) {
  config.validate();
  check_dims(model, instance);
  if (config.precision == Precision::F32) return train_impl<float>(instance, std::move(model), config);
  return train_impl<double>(instance, std::move(model), config);
}

// ---------------------------------------------------------------------------
// Weight files

namespace {

void put_u32(std::ostream& out, std::uint32_t value) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFFu);
  out.write(bytes, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  std::uint32_t value = 0;
  for (int i = 0; i < 4; ++i) value |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  return value;
}

void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  char bytes[8];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const auto bits = std::bit_cast<std::uint64_t>(m(i, j));
      for (int k = 0; k < 8; ++k) bytes[k] = static_cast<char>((bits >> (8 * k)) & 0xFFu);
      out.write(bytes, 8);
    }
  }
}

Eigen::MatrixXd get_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  unsigned char bytes[8];
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      in.read(reinterpret_cast<char*>(bytes), 8);
      std::uint64_t bits = 0;
      for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
      m(i, j) = std::bit_cast<double>(bits);
    }
  }
  return m;
}

}  // namespace

void write_weights(const std::filesystem::path& path, const WeightModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  put_u32(out, static_cast<std::uint32_t>(model.d()));
  put_u32(out, static_cast<std::uint32_t>(model.m()));
  put_u32(out, model.is_factored() ? 1u : 0u);
  put_u32(out, 0u);
  if (model.is_factored()) {
    put_matrix(out, model.q());
    put_matrix(out, model.r());
  } else {
    put_matrix(out, model.w());
  }
  if (!out) throw IoError("failed writing " + path.string());
}

WeightModel read_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::uint32_t d = get_u32(in);
  const std::uint32_t m = get_u32(in);
  const std::uint32_t variant = get_u32(in);
  get_u32(in);
  if (!in || d == 0 || m == 0 || m > d || variant > 1 || (variant == 0 && m != d)) {
    throw IoError("malformed weight header in " + path.string());
  }
  WeightModel model;
  if (variant == 0) {
    model = WeightModel::full_rank(get_matrix(in, d, d));
  } else {
    Eigen::MatrixXd q = get_matrix(in, d, m);
    Eigen::MatrixXd r = get_matrix(in, d, m);
    model = WeightModel::factored(std::move(q), std::move(r));
  }
  if (!in) throw IoError("truncated weight file " + path.string());
  return model;
}

}  // namespace assocmem

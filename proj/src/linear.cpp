#include "agentfp/linear.hpp"

#include <algorithm>
#include <cmath>

#include "agentfp/error.hpp"
#include "agentfp/features.hpp"
#include "agentfp/gbt.hpp"

namespace agentfp {

Standardizer Standardizer::fit(const std::vector<FeatureVector>& rows) {
  std::array<double, kFeatureCount> impute{}, mean{}, scale{};
  std::vector<double> col;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    col.clear();
    for (const auto& r : rows) {
      if (!is_missing(r[f])) col.push_back(r[f]);
    }
    if (!col.empty()) {
      std::sort(col.begin(), col.end());
      impute[f] = percentile_sorted(col, 0.5);
    }
    double sum = 0.0;
    for (const auto& r : rows) sum += is_missing(r[f]) ? impute[f] : r[f];
    const double m = rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());
    double ss = 0.0;
    for (const auto& r : rows) {
      const double v = (is_missing(r[f]) ? impute[f] : r[f]) - m;
      ss += v * v;
    }
    mean[f] = m;
    scale[f] = rows.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(rows.size()));
  }
  return Standardizer(impute, mean, scale);
}

FeatureVector Standardizer::transform(const FeatureVector& x) const {
  FeatureVector z;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const double v = is_missing(x[f]) ? impute_[f] : x[f];
    // Constant columns map to 0; a non-finite column stays non-finite.
    z[f] = scale_[f] == 0.0 ? 0.0 : (v - mean_[f]) / scale_[f];
  }
  return z;
}

LinearModel::LinearModel(std::vector<std::string> class_names,
                         LinearConfig config, Standardizer scaler,
                         std::vector<double> weights,
                         std::vector<double> intercepts, int iterations)
    : Classifier(std::move(class_names)),
      config_(config),
      scaler_(scaler),
      weights_(std::move(weights)),
      intercepts_(std::move(intercepts)),
      iterations_(iterations) {}

std::vector<double> LinearModel::decision_function(const FeatureVector& x) const {
  const auto z = scaler_.transform(x);
  std::vector<double> out(intercepts_);
  for (std::size_t c = 0; c < out.size(); ++c) {
    const double* w = weights_.data() + c * kFeatureCount;
    for (std::size_t f = 0; f < kFeatureCount; ++f) out[c] += w[f] * z[f];
  }
  return out;
}

std::vector<double> LinearModel::predict_proba(const FeatureVector& x) const {
  auto s = decision_function(x);
  softmax_inplace(s);
  return s;
}

namespace {

constexpr std::size_t D = kFeatureCount;

// Parameters packed as K*D weights followed by K intercepts.
class Objective {
 public:
  Objective(const std::vector<FeatureVector>& z, const std::vector<std::size_t>& y,
            std::size_t k, double l2)
      : z_(z), y_(y), k_(k), l2_(l2) {}

  std::size_t size() const { return k_ * D + k_; }

  double value(const std::vector<double>& p) const {
    return eval(p, nullptr);
  }
  double value_grad(const std::vector<double>& p, std::vector<double>& g) const {
    return eval(p, &g);
  }

 private:
  double eval(const std::vector<double>& p, std::vector<double>* g) const {
    const auto n = static_cast<double>(z_.size());
    if (g) std::fill(g->begin(), g->end(), 0.0);
    std::vector<double> s(k_);
    double loss = 0.0;
    for (std::size_t i = 0; i < z_.size(); ++i) {
      for (std::size_t c = 0; c < k_; ++c) {
        double v = p[k_ * D + c];
        const double* w = p.data() + c * D;
        for (std::size_t f = 0; f < D; ++f) v += w[f] * z_[i][f];
        s[c] = v;
      }
      loss += softmax_loss(s, y_[i]);
      if (!g) continue;
      softmax_inplace(s);
      for (std::size_t c = 0; c < k_; ++c) {
        const double r = (s[c] - (c == y_[i] ? 1.0 : 0.0)) / n;
        double* gw = g->data() + c * D;
        for (std::size_t f = 0; f < D; ++f) gw[f] += r * z_[i][f];
        (*g)[k_ * D + c] += r;
      }
    }
    loss /= n;
    if (l2_ > 0.0) {
      double sq = 0.0;
      for (std::size_t j = 0; j < k_ * D; ++j) {
        sq += p[j] * p[j];
        if (g) (*g)[j] += l2_ * p[j];
      }
      loss += 0.5 * l2_ * sq;
    }
    return loss;
  }

  const std::vector<FeatureVector>& z_;
  const std::vector<std::size_t>& y_;
  std::size_t k_;
  double l2_;
};

}  // namespace

LinearModel train_linear(const LabeledDataset& data, const LinearConfig& config,
                         [[maybe_unused]] std::uint64_t seed) {
  check_trainable(data);
  if (!(config.C > 0.0) || config.max_iter < 1 || !(config.tol > 0.0)) {
    throw TrainError("invalid logistic regression configuration");
  }
  std::vector<FeatureVector> raw;
  std::vector<std::size_t> y;
  for (const auto& r : data.rows) {
    raw.push_back(r.x);
    y.push_back(r.label);
  }
  const auto scaler = Standardizer::fit(raw);
  std::vector<FeatureVector> z;
  z.reserve(raw.size());
  for (const auto& r : raw) {
    z.push_back(scaler.transform(r));
    for (std::size_t f = 0; f < D; ++f) {
      if (!std::isfinite(z.back()[f])) {
        throw TrainError("feature '" + std::string(kFeatureNames[f]) +
                         "' is not finite after standardisation");
      }
    }
  }

  const std::size_t k = data.num_classes();
  const auto n = static_cast<double>(z.size());
  const double reg = 1.0 / (config.C * n);
  const double l1 = config.penalty == Penalty::L1 ? reg : 0.0;
  const Objective obj(z, y, k, config.penalty == Penalty::L2 ? reg : 0.0);

  const std::size_t np = obj.size();
  const std::size_t nw = k * D;
  auto prox = [&](std::vector<double>& p, double step) {
    if (l1 <= 0.0) return;
    const double t = l1 * step;
    for (std::size_t j = 0; j < nw; ++j) {
      const double v = p[j];
      p[j] = v > t ? v - t : (v < -t ? v + t : 0.0);
    }
  };

  std::vector<double> x(np, 0.0), yk(np, 0.0), xn(np), g(np);
  double lip = 1.0;
  double t = 1.0;
  int iter = 0;
  for (; iter < config.max_iter; ++iter) {
    const double fy = obj.value_grad(yk, g);
    double fn = 0.0;
    for (;;) {
      for (std::size_t j = 0; j < np; ++j) xn[j] = yk[j] - g[j] / lip;
      prox(xn, 1.0 / lip);
      fn = obj.value(xn);
      double lin = 0.0, quad = 0.0;
      for (std::size_t j = 0; j < np; ++j) {
        const double d = xn[j] - yk[j];
        lin += g[j] * d;
        quad += d * d;
      }
      if (fn <= fy + lin + 0.5 * lip * quad + 1e-15 * std::abs(fy)) break;
      lip *= 2.0;
    }
    double change = 0.0, restart = 0.0;
    for (std::size_t j = 0; j < np; ++j) {
      change = std::max(change, std::abs(xn[j] - x[j]));
      restart += (yk[j] - xn[j]) * (xn[j] - x[j]);
    }
    if (restart > 0.0) t = 1.0;
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / tn;
    for (std::size_t j = 0; j < np; ++j) {
      yk[j] = xn[j] + beta * (xn[j] - x[j]);
    }
    x.swap(xn);
    t = tn;
    if (change < config.tol) {
      ++iter;
      break;
    }
  }

  std::vector<double> weights(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(nw));
  std::vector<double> intercepts(x.begin() + static_cast<std::ptrdiff_t>(nw), x.end());
  return LinearModel(data.class_names, config, scaler, std::move(weights),
                     std::move(intercepts), iter);
}

}  // namespace agentfp

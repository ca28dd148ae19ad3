#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "agentfp/classifier.hpp"

namespace agentfp {

// Median imputation followed by z-scoring, both fitted on training rows.
// Columns with zero spread map to 0; an all-missing column imputes 0.
class Standardizer {
 public:
  Standardizer() = default;
  Standardizer(std::array<double, kFeatureCount> impute,
               std::array<double, kFeatureCount> mean,
               std::array<double, kFeatureCount> scale)
      : impute_(impute), mean_(mean), scale_(scale) {}

  static Standardizer fit(const std::vector<FeatureVector>& rows);

  FeatureVector transform(const FeatureVector& x) const;

  const std::array<double, kFeatureCount>& impute() const noexcept { return impute_; }
  const std::array<double, kFeatureCount>& mean() const noexcept { return mean_; }
  const std::array<double, kFeatureCount>& scale() const noexcept { return scale_; }

 private:
  std::array<double, kFeatureCount> impute_{};
  std::array<double, kFeatureCount> mean_{};
  std::array<double, kFeatureCount> scale_{};
};

enum class Penalty : std::uint8_t { L1, L2 };

struct LinearConfig {
  Penalty penalty = Penalty::L2;
  double C = 1.0;
  int max_iter = 5000;
  double tol = 1e-6;

  bool operator==(const LinearConfig&) const = default;
};

// Multinomial logistic regression on standardised features.
// weights is K x 41 row-major.
class LinearModel final : public Classifier {
 public:
  LinearModel(std::vector<std::string> class_names, LinearConfig config,
              Standardizer scaler, std::vector<double> weights,
              std::vector<double> intercepts, int iterations);

  ModelKind kind() const override { return ModelKind::Linear; }
  std::vector<double> predict_proba(const FeatureVector& x) const override;
  std::vector<double> decision_function(const FeatureVector& x) const;

  const LinearConfig& config() const noexcept { return config_; }
  const Standardizer& scaler() const noexcept { return scaler_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<double>& intercepts() const noexcept { return intercepts_; }
  int iterations() const noexcept { return iterations_; }

 private:
  LinearConfig config_;
  Standardizer scaler_;
  std::vector<double> weights_;
  std::vector<double> intercepts_;
  int iterations_ = 0;
};

// Minimises sum_i CE_i + R(W) / C with R = ||W||_1 (L1) or ||W||^2 / 2
// (L2); intercepts are unpenalised. Accelerated proximal gradient with
// backtracking, stopping when no parameter moves more than `tol` or after
// `max_iter` iterations. Throws TrainError naming a feature that is not
// finite after standardisation.
LinearModel train_linear(const LabeledDataset& data, const LinearConfig& config,
                         std::uint64_t seed);

}  // namespace agentfp

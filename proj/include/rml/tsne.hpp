#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rml/features.hpp"

namespace rml::embed {

struct TsneConfig {
  double perplexity = 30.0;
  int iterations = 1000;
  double early_exaggeration_factor = 12.0;
  int exaggeration_iterations = 250;
  double learning_rate = 200.0;
  double momentum_initial = 0.5;
  double momentum_final = 0.8;
  int momentum_switch_iteration = 250;
  uint64_t seed = 0;
  size_t max_points = 5000;  // exact O(N^2) method, desk-scale cap
  int kl_record_interval = 50;

  void validate(size_t n) const;
};

struct EmbeddingResult {
  size_t n = 0;
  std::vector<double> x, y;
  std::vector<std::pair<int, double>> kl_history;  // (iteration, KL)
  TsneConfig config;
  std::vector<features::RowMeta> meta;
  std::vector<std::string> class_table;
};

// Symmetric all-pairs squared Euclidean distances, zero diagonal. Matches a
// naive per-pair loop exactly under the scalar backend.
std::vector<double> pairwise_sq_dists(const std::vector<double>& x, size_t n,
                                      size_t d);

// Per-row Gaussian bandwidth calibration: binary search on precision until
// 2^H(P_i) equals the perplexity within 1e-4 (<= 64 halvings). Returns the
// row-stochastic conditional affinity matrix with zero self-affinity.
std::vector<double> perplexity_calibration(const std::vector<double>& sq_dists,
                                           size_t n, double perplexity);

// Joint affinities p_ij = (p_j|i + p_i|j) / 2N; symmetric, sums to 1.
std::vector<double> symmetrize(const std::vector<double>& conditional, size_t n);

// KL(P || Q) with the Student-t kernel Q of the embedding, probabilities
// floored at 1e-12 inside the logs for numerical stability.
double kl_divergence(const std::vector<double>& joint_p,
                     const std::vector<double>& x,
                     const std::vector<double>& y);

// Exact-gradient KL descent with early exaggeration and the two-stage
// momentum schedule; Gaussian init (std 1e-4) from config.seed.
EmbeddingResult tsne(const features::FeatureMatrix& input,
                     const TsneConfig& config);

// One exact gradient of KL wrt the embedding coordinates (exposed for the
// finite-difference check). exaggeration scales P only.
void tsne_gradient(const std::vector<double>& joint_p,
                   const std::vector<double>& x, const std::vector<double>& y,
                   double exaggeration, std::vector<double>& gx,
                   std::vector<double>& gy);

// Embedding CSV: "# format=..." then header id,x,y,class,snr.
std::string embedding_csv(const EmbeddingResult& em);
EmbeddingResult embedding_from_csv(const std::string& text);
std::string kl_history_csv(const EmbeddingResult& em);

}  // namespace rml::embed

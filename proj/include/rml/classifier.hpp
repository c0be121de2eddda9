#pragma once

#include <map>
#include <set>
#include <string>

#include "rml/checkpoint.hpp"
#include "rml/cluster_eval.hpp"
#include "rml/data_bridge.hpp"
#include "rml/train.hpp"

namespace rml::boot {

// Supervised bootstrap network over 2x128 frames: two conv stages, one
// hidden dense layer whose activations double as the extracted features,
// and a linear logit head.
struct ClassifierSpec {
  int conv1_filters = 64;
  int conv1_kh = 1, conv1_kw = 3;
  int conv2_filters = 16;
  int conv2_kh = 2, conv2_kw = 3;
  int dense_units = 128;
  double dropout_rate = 0.5;
  int n_classes = signal::kNumClasses;

  // desk-scale default above; the full-scale variant mirrors the larger
  // network this architecture derives from
  static ClassifierSpec full_scale();
  void validate() const;
};

struct HoldoutConfig {
  std::set<signal::Mod> held_out;  // empty = train on everything

  static HoldoutConfig none() { return {}; }
  static HoldoutConfig standard() {  // the generalization experiment pair
    return {{signal::Mod::BPSK, signal::Mod::QAM16}};
  }
  static HoldoutConfig from_names(const std::vector<std::string>& names);
  std::vector<std::string> names() const;
};

struct BootstrapClassifier {
  nn::Network<float> net;
  size_t feature_layers = 0;  // prefix producing the dense_units features
  std::vector<int> trained_class_ids;  // canonical ids, ascending
};

nn::Network<float> build_classifier(const ClassifierSpec& spec, uint64_t seed);

// Supervised training on the retained classes only. Held-out examples are
// filtered before any seeded randomness is consumed, so checkpoints depend
// solely on the retained subset. Labels are remapped to 0..K-1 with the
// canonical ids kept in trained_class_ids.
struct TrainedClassifier {
  BootstrapClassifier clf;
  nn::TrainHistory history;
};

TrainedClassifier train_classifier(const signal::Dataset& ds,
                                   const HoldoutConfig& holdout,
                                   const ClassifierSpec& spec,
                                   const nn::TrainConfig& cfg);

// Penultimate dense activations (label-blind, any class welcome). When
// conv_maps is true the flattened second-conv activations are returned
// instead of the dense layer.
features::FeatureMatrix extract_features(const BootstrapClassifier& clf,
                                         const nn::Tensor<float>& frames,
                                         bool conv_maps = false);
features::FeatureMatrix extract_features(const BootstrapClassifier& clf,
                                         const signal::Dataset& ds,
                                         bool conv_maps = false);

std::vector<int> predict(const BootstrapClassifier& clf,
                         const nn::Tensor<float>& frames);  // remapped labels

struct AccuracyReport {
  std::map<int, double> accuracy_by_snr;  // snr dB -> accuracy
  double overall_accuracy = 0.0;
  // confusion[true][predicted] over trained classes (canonical id order)
  std::vector<std::vector<size_t>> confusion;
  std::vector<int> class_ids;
  size_t evaluated = 0;
};

// Scores only examples of classes the model was trained on.
AccuracyReport accuracy_by_snr(const BootstrapClassifier& clf,
                               const signal::Dataset& ds);

// Average class histogram of the k nearest known-class rows around each
// query-class row (Euclidean in feature space). Sums to 1 over known ids.
std::map<int, double> neighbor_affinity(const features::FeatureMatrix& feats,
                                        const std::set<int>& known_class_ids,
                                        int query_class_id, int k);

struct HoldoutReport {
  std::vector<std::string> held_out;
  // per held-out class: affinity distribution over known class ids
  std::map<int, std::map<int, double>> affinity;
  cluster::MappingReport mapping;
  double classifier_val_loss = 0.0;
  std::string to_json(const std::vector<std::string>& class_table) const;
};

// The generalization experiment: train with a holdout, embed features of
// all classes, quantify where the held-out classes land.
struct HoldoutExperimentResult {
  HoldoutReport report;
  TrainedClassifier trained;
  features::FeatureMatrix features;
  cluster::DiscoveryResult discovery;
};

HoldoutExperimentResult holdout_experiment(const signal::Dataset& ds,
                                           const ClassifierSpec& spec,
                                           const nn::TrainConfig& cfg,
                                           const embed::TsneConfig& tsne_cfg,
                                           const cluster::DbscanConfig& db_cfg,
                                           const HoldoutConfig& holdout,
                                           int affinity_k = 10);

void save_classifier(const std::string& path, const BootstrapClassifier& clf,
                     const nn::TrainHistory& hist, const nn::TrainConfig& cfg);
BootstrapClassifier classifier_from_checkpoint(const nn::LoadedCheckpoint& ck);

}  // namespace rml::boot

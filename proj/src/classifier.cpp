#include "rml/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "rml/kernels.hpp"
#include "rml/losses.hpp"

namespace rml::boot {

using nn::Act;
using nn::LayerSpec;
using nn::Pad;

ClassifierSpec ClassifierSpec::full_scale() {
  ClassifierSpec s;
  s.conv1_filters = 256;
  s.conv2_filters = 80;
  s.dense_units = 256;
  return s;
}

void ClassifierSpec::validate() const {
  if (n_classes < 2) throw std::invalid_argument("classifier: n_classes >= 2");
  if (conv1_filters < 1 || conv2_filters < 1 || dense_units < 1)
    throw std::invalid_argument("classifier: counts must be >= 1");
  if (conv1_kh < 1 || conv1_kw < 1 || conv2_kh < 1 || conv2_kw < 1)
    throw std::invalid_argument("classifier: kernel dims must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw std::invalid_argument("classifier: dropout rate in [0, 1)");
}

HoldoutConfig HoldoutConfig::from_names(const std::vector<std::string>& names) {
  HoldoutConfig h;
  for (const auto& n : names) {
    const auto m = signal::mod_from_name(n);
    if (!m) throw std::invalid_argument("unknown modulation class: " + n);
    h.held_out.insert(*m);
  }
  return h;
}

std::vector<std::string> HoldoutConfig::names() const {
  std::vector<std::string> out;
  for (const auto m : held_out) out.emplace_back(signal::mod_name(m));
  return out;
}

nn::Network<float> build_classifier(const ClassifierSpec& spec,
                                    uint64_t seed) {
  spec.validate();
  const std::vector<LayerSpec> layers = {
      LayerSpec::Conv2D(spec.conv1_filters, spec.conv1_kh, spec.conv1_kw,
                        Pad::valid),
      LayerSpec::ReLU(),
      LayerSpec::Dropout(spec.dropout_rate),
      LayerSpec::Conv2D(spec.conv2_filters, spec.conv2_kh, spec.conv2_kw,
                        Pad::valid),
      LayerSpec::ReLU(),
      LayerSpec::Dropout(spec.dropout_rate),
      LayerSpec::Dense(spec.dense_units, Act::relu),  // feature layer
      LayerSpec::Dropout(spec.dropout_rate),
      LayerSpec::Dense(spec.n_classes, Act::linear),
  };
  return nn::Network<float>(layers, kFrameShape, seed);
}

namespace {
constexpr size_t kFeatureLayers = 7;  // through Dense(units, relu)
constexpr size_t kConvMapLayers = 5;  // through the second conv + relu
constexpr size_t kEvalBatch = 256;
}  // namespace

TrainedClassifier train_classifier(const signal::Dataset& ds,
                                   const HoldoutConfig& holdout,
                                   const ClassifierSpec& spec,
                                   const nn::TrainConfig& cfg) {
  // filter first: nothing about the held-out rows may reach the optimizer
  // or any seeded stream
  std::vector<size_t> retained;
  std::set<int> retained_ids;
  for (size_t i = 0; i < ds.size(); ++i) {
    const auto m = signal::Mod(ds.examples[i].class_id);
    if (holdout.held_out.count(m)) continue;
    retained.push_back(i);
    retained_ids.insert(int(ds.examples[i].class_id));
  }
  if (retained_ids.size() < 2)
    throw std::invalid_argument(
        "train_classifier: fewer than 2 classes remain after holdout");

  TrainedClassifier out{
      BootstrapClassifier{
          build_classifier(
              [&] {
                ClassifierSpec s = spec;
                s.n_classes = int(retained_ids.size());
                return s;
              }(),
              cfg.seed),
          kFeatureLayers,
          std::vector<int>(retained_ids.begin(), retained_ids.end())},
      {}};

  std::map<int, int> remap;
  for (size_t k = 0; k < out.clf.trained_class_ids.size(); ++k)
    remap[out.clf.trained_class_ids[k]] = int(k);

  nn::Tensor<float> inputs({int(retained.size()), 1, 2, 128});
  std::vector<int> labels(retained.size());
  for (size_t i = 0; i < retained.size(); ++i) {
    const auto& ex = ds.examples[retained[i]];
    std::copy(ex.frame.v.begin(), ex.frame.v.end(), inputs.data() + i * 256);
    labels[i] = remap.at(int(ex.class_id));
  }

  out.history = nn::train_xent(out.clf.net, inputs, labels, cfg);
  return out;
}

features::FeatureMatrix extract_features(const BootstrapClassifier& clf,
                                         const nn::Tensor<float>& frames,
                                         bool conv_maps) {
  const size_t prefix = conv_maps ? kConvMapLayers : clf.feature_layers;
  const size_t n = size_t(frames.batch());
  const size_t d = nn::shape_numel(clf.net.shape_after(prefix));
  features::FeatureMatrix fm;
  fm.n = n;
  fm.d = d;
  fm.v.resize(n * d);
  fm.meta.resize(n);
  for (size_t i = 0; i < n; ++i) fm.meta[i].id = uint32_t(i);
  const size_t row = frames.row_size();
  for (size_t off = 0; off < n; off += kEvalBatch) {
    const size_t take = std::min(kEvalBatch, n - off);
    nn::Tensor<float> chunk({int(take), 1, 2, 128});
    std::copy_n(frames.data() + off * row, take * row, chunk.data());
    const auto feats = clf.net.forward_prefix(chunk, prefix);
    std::copy_n(feats.data(), take * d, fm.v.data() + off * d);
  }
  return fm;
}

features::FeatureMatrix extract_features(const BootstrapClassifier& clf,
                                         const signal::Dataset& ds,
                                         bool conv_maps) {
  auto fm = extract_features(clf, dataset_inputs(ds), conv_maps);
  fm.meta = dataset_meta(ds);
  fm.class_table = ds.class_table;
  return fm;
}

std::vector<int> predict(const BootstrapClassifier& clf,
                         const nn::Tensor<float>& frames) {
  const size_t n = size_t(frames.batch());
  std::vector<int> out(n);
  const size_t row = frames.row_size();
  for (size_t off = 0; off < n; off += kEvalBatch) {
    const size_t take = std::min(kEvalBatch, n - off);
    nn::Tensor<float> chunk({int(take), 1, 2, 128});
    std::copy_n(frames.data() + off * row, take * row, chunk.data());
    const auto logits = clf.net.forward_prefix(chunk, clf.net.layer_count());
    const auto arg = nn::argmax_rows(logits);
    std::copy(arg.begin(), arg.end(), out.begin() + long(off));
  }
  return out;
}

AccuracyReport accuracy_by_snr(const BootstrapClassifier& clf,
                               const signal::Dataset& ds) {
  std::map<int, int> remap;
  for (size_t k = 0; k < clf.trained_class_ids.size(); ++k)
    remap[clf.trained_class_ids[k]] = int(k);

  std::vector<size_t> rows;
  for (size_t i = 0; i < ds.size(); ++i)
    if (remap.count(int(ds.examples[i].class_id))) rows.push_back(i);

  AccuracyReport rep;
  rep.class_ids = clf.trained_class_ids;
  const size_t k = clf.trained_class_ids.size();
  rep.confusion.assign(k, std::vector<size_t>(k, 0));
  if (rows.empty()) return rep;

  nn::Tensor<float> inputs({int(rows.size()), 1, 2, 128});
  for (size_t i = 0; i < rows.size(); ++i)
    std::copy(ds.examples[rows[i]].frame.v.begin(),
              ds.examples[rows[i]].frame.v.end(), inputs.data() + i * 256);
  const auto pred = predict(clf, inputs);

  std::map<int, std::pair<size_t, size_t>> per_snr;  // snr -> (correct, total)
  size_t correct = 0;
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& ex = ds.examples[rows[i]];
    const int truth = remap.at(int(ex.class_id));
    rep.confusion[size_t(truth)][size_t(pred[i])]++;
    auto& [c, t] = per_snr[int(ex.snr_db)];
    ++t;
    if (pred[i] == truth) {
      ++c;
      ++correct;
    }
  }
  for (const auto& [snr, ct] : per_snr)
    rep.accuracy_by_snr[snr] = double(ct.first) / double(ct.second);
  rep.overall_accuracy = double(correct) / double(rows.size());
  rep.evaluated = rows.size();
  return rep;
}

std::map<int, double> neighbor_affinity(const features::FeatureMatrix& feats,
                                        const std::set<int>& known_class_ids,
                                        int query_class_id, int k) {
  if (k < 1) throw std::invalid_argument("neighbor_affinity: k >= 1");
  if (known_class_ids.count(query_class_id))
    throw std::invalid_argument(
        "neighbor_affinity: query class must be disjoint from known classes");

  std::vector<size_t> known, query;
  for (size_t i = 0; i < feats.n; ++i) {
    const int c = int(feats.meta[i].class_id);
    if (c == query_class_id)
      query.push_back(i);
    else if (known_class_ids.count(c))
      known.push_back(i);
  }
  if (known.size() < size_t(k))
    throw std::invalid_argument("neighbor_affinity: fewer than k known rows");
  if (query.empty())
    throw std::invalid_argument("neighbor_affinity: no query rows");

  // doubles once; repeated f32->f64 conversion in the loop would dominate
  std::vector<double> kd(known.size() * feats.d), qd(query.size() * feats.d);
  for (size_t i = 0; i < known.size(); ++i)
    for (size_t j = 0; j < feats.d; ++j)
      kd[i * feats.d + j] = double(feats.row(known[i])[j]);
  for (size_t i = 0; i < query.size(); ++i)
    for (size_t j = 0; j < feats.d; ++j)
      qd[i * feats.d + j] = double(feats.row(query[i])[j]);

  std::map<int, double> affinity;
  for (int c : known_class_ids) affinity[c] = 0.0;

  std::vector<std::pair<double, size_t>> dists(known.size());
  for (size_t qi = 0; qi < query.size(); ++qi) {
    for (size_t ki = 0; ki < known.size(); ++ki)
      dists[ki] = {kernels::ops().dsqdist(qd.data() + qi * feats.d,
                                          kd.data() + ki * feats.d, feats.d),
                   ki};
    std::partial_sort(dists.begin(), dists.begin() + k, dists.end());
    for (int j = 0; j < k; ++j) {
      const size_t row = known[dists[size_t(j)].second];
      affinity[int(feats.meta[row].class_id)] += 1.0;
    }
  }
  const double norm = 1.0 / (double(query.size()) * double(k));
  for (auto& [c, v] : affinity) v *= norm;
  return affinity;
}

HoldoutExperimentResult holdout_experiment(
    const signal::Dataset& ds, const ClassifierSpec& spec,
    const nn::TrainConfig& cfg, const embed::TsneConfig& tsne_cfg,
    const cluster::DbscanConfig& db_cfg, const HoldoutConfig& holdout,
    int affinity_k) {
  if (holdout.held_out.empty())
    throw std::invalid_argument("holdout_experiment: empty holdout set");

  HoldoutExperimentResult res{
      {}, train_classifier(ds, holdout, spec, cfg), {}, {}};
  res.features = extract_features(res.trained.clf, ds);

  std::set<int> known(res.trained.clf.trained_class_ids.begin(),
                      res.trained.clf.trained_class_ids.end());
  res.report.held_out = holdout.names();
  res.report.classifier_val_loss = res.trained.history.best_val_loss;
  for (const auto m : holdout.held_out)
    res.report.affinity[int(m)] =
        neighbor_affinity(res.features, known, int(m), affinity_k);

  res.discovery = cluster::discovery_report(res.features, tsne_cfg, db_cfg);
  res.report.mapping = res.discovery.report;
  return res;
}

std::string HoldoutReport::to_json(
    const std::vector<std::string>& class_table) const {
  nlohmann::ordered_json j;
  j["format"] = "rml-holdout-report";
  j["format_version"] = 1;
  j["held_out"] = held_out;
  nlohmann::ordered_json aff = nlohmann::ordered_json::object();
  for (const auto& [qc, dist] : affinity) {
    nlohmann::ordered_json row = nlohmann::ordered_json::object();
    for (const auto& [kc, v] : dist) {
      const std::string name = size_t(kc) < class_table.size()
                                   ? class_table[size_t(kc)]
                                   : std::to_string(kc);
      row[name] = v;
    }
    const std::string qname = size_t(qc) < class_table.size()
                                  ? class_table[size_t(qc)]
                                  : std::to_string(qc);
    aff[qname] = row;
  }
  j["affinity"] = aff;
  j["classifier_val_loss"] = classifier_val_loss;
  j["mapping"] = nlohmann::ordered_json::parse(mapping.to_json());
  return j.dump(2) + "\n";
}

void save_classifier(const std::string& path, const BootstrapClassifier& clf,
                     const nn::TrainHistory& hist,
                     const nn::TrainConfig& cfg) {
  nn::CheckpointMeta meta;
  meta.role = "bootstrap";
  meta.feature_prefix_layers = int(clf.feature_layers);
  meta.class_table = signal::all_class_names();
  meta.trained_class_ids = clf.trained_class_ids;
  meta.seed = cfg.seed;
  meta.epochs_run = hist.rows.empty() ? 0 : hist.rows.back().epoch;
  meta.best_epoch = hist.best_epoch;
  meta.best_val_loss = hist.best_val_loss;
  meta.optimizer = cfg.optimizer == nn::OptKind::adam ? "adam" : "rmsprop";
  nn::save_checkpoint(path, clf.net, meta);
}

BootstrapClassifier classifier_from_checkpoint(
    const nn::LoadedCheckpoint& ck) {
  if (ck.meta.role != "bootstrap")
    throw std::runtime_error("checkpoint role is '" + ck.meta.role +
                             "', expected 'bootstrap'");
  if (ck.meta.feature_prefix_layers < 1)
    throw std::runtime_error("bootstrap checkpoint: missing feature prefix");
  return BootstrapClassifier{ck.net, size_t(ck.meta.feature_prefix_layers),
                             ck.meta.trained_class_ids};
}

}  // namespace rml::boot

#include "rml/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "rml/autoencoder.hpp"
#include "rml/classifier.hpp"
#include "rml/cluster_eval.hpp"
#include "rml/dataset_io.hpp"
#include "rml/manifest.hpp"
#include "rml/pca.hpp"
#include "rml/sha256.hpp"
#include "rml/svg_plot.hpp"
#include "rml/util.hpp"

namespace rml::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// ------------------------------------------------------------- utilities

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path))
    throw UsageError(what + " not found: " + path);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= s.size()) {
    const size_t comma = s.find(',', start);
    if (comma == std::string::npos) {
      if (start < s.size()) out.push_back(s.substr(start));
      break;
    }
    if (comma > start) out.push_back(s.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

std::vector<signal::Mod> parse_classes(const std::string& csv) {
  std::vector<signal::Mod> classes;
  for (const auto& name : split_csv(csv)) {
    const auto m = signal::mod_from_name(name);
    if (!m) throw UsageError("unknown modulation class: " + name);
    classes.push_back(*m);
  }
  if (classes.empty()) throw UsageError("empty class list");
  return classes;
}

std::string history_csv(const nn::TrainHistory& hist) {
  std::string out = "# format=rml-history/1\n";
  out += "epoch,train_loss,val_loss\n";
  char buf[96];
  for (const auto& row : hist.rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", row.epoch,
                  row.train_loss, row.val_loss);
    out += buf;
  }
  return out;
}

nn::OptKind parse_optimizer(const std::string& name) {
  if (name == "adam") return nn::OptKind::adam;
  if (name == "rmsprop") return nn::OptKind::rmsprop;
  throw UsageError("unknown optimizer: " + name + " (adam|rmsprop)");
}

void check_divergence(const nn::TrainHistory& hist) {
  if (hist.diverged)
    throw std::runtime_error("training diverged (non-finite loss) at epoch " +
                             std::to_string(hist.diverged_epoch));
}

// ------------------------------------------------------- experiment config

struct ExperimentConfig {
  uint64_t seed = 1;
  std::string preset;
  std::string representation = "bootstrap";  // convae1|convae2|bootstrap|pca
  signal::DatasetConfig dataset;
  nn::TrainConfig train;
  std::vector<std::string> holdout;
  embed::TsneConfig tsne;
  cluster::DbscanConfig dbscan;
  int embed_per_class = 0;  // 0 = embed everything
  std::string out_dir;

  ordered_json to_json() const;
  void apply_json(const ordered_json& j);
};

ordered_json ExperimentConfig::to_json() const {
  ordered_json j;
  j["format_version"] = 1;
  j["seed"] = seed;
  j["preset"] = preset;
  j["representation"] = representation;
  std::vector<std::string> class_names;
  for (auto m : dataset.classes) class_names.emplace_back(signal::mod_name(m));
  j["dataset"] = {{"classes", class_names},
                  {"snr_grid", dataset.snr_grid},
                  {"frames_per_class_snr", dataset.frames_per_class_snr},
                  {"cfo_std_hz", dataset.cfo_std_hz},
                  {"clock_offset_max_ppm", dataset.clock_offset_max_ppm},
                  {"fading_tap_count", dataset.fading_tap_count},
                  {"fading_delay_spread", dataset.fading_delay_spread}};
  j["train"] = {{"optimizer",
                 train.optimizer == nn::OptKind::adam ? "adam" : "rmsprop"},
                {"learning_rate", train.learning_rate},
                {"batch_size", train.batch_size},
                {"max_epochs", train.max_epochs},
                {"early_stop_patience", train.early_stop_patience},
                {"validation_fraction", train.validation_fraction},
                {"input_noise_sigma", train.input_noise_sigma}};
  j["holdout"] = holdout;
  j["tsne"] = {{"perplexity", tsne.perplexity},
               {"iterations", tsne.iterations},
               {"learning_rate", tsne.learning_rate},
               {"early_exaggeration_factor", tsne.early_exaggeration_factor}};
  j["dbscan"] = {{"eps", dbscan.eps_auto ? ordered_json("auto")
                                         : ordered_json(dbscan.eps)},
                 {"min_pts", dbscan.min_pts}};
  j["embed_per_class"] = embed_per_class;
  return j;
}

void ExperimentConfig::apply_json(const ordered_json& j) {
  if (j.contains("seed")) seed = j.at("seed");
  if (j.contains("representation")) representation = j.at("representation");
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    if (d.contains("classes")) {
      dataset.classes.clear();
      for (const auto& name : d.at("classes")) {
        const auto m = signal::mod_from_name(name.get<std::string>());
        if (!m)
          throw UsageError("config: unknown class " + name.get<std::string>());
        dataset.classes.push_back(*m);
      }
    }
    if (d.contains("snr_grid"))
      dataset.snr_grid = d.at("snr_grid").get<std::vector<int>>();
    if (d.contains("frames_per_class_snr"))
      dataset.frames_per_class_snr = d.at("frames_per_class_snr");
    if (d.contains("cfo_std_hz")) dataset.cfo_std_hz = d.at("cfo_std_hz");
    if (d.contains("clock_offset_max_ppm"))
      dataset.clock_offset_max_ppm = d.at("clock_offset_max_ppm");
    if (d.contains("fading_tap_count"))
      dataset.fading_tap_count = d.at("fading_tap_count");
    if (d.contains("fading_delay_spread"))
      dataset.fading_delay_spread = d.at("fading_delay_spread");
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    if (t.contains("optimizer"))
      train.optimizer = parse_optimizer(t.at("optimizer"));
    if (t.contains("learning_rate")) train.learning_rate = t.at("learning_rate");
    if (t.contains("batch_size")) train.batch_size = t.at("batch_size");
    if (t.contains("max_epochs")) train.max_epochs = t.at("max_epochs");
    if (t.contains("early_stop_patience"))
      train.early_stop_patience = t.at("early_stop_patience");
    if (t.contains("validation_fraction"))
      train.validation_fraction = t.at("validation_fraction");
    if (t.contains("input_noise_sigma"))
      train.input_noise_sigma = t.at("input_noise_sigma");
  }
  if (j.contains("holdout"))
    holdout = j.at("holdout").get<std::vector<std::string>>();
  if (j.contains("tsne")) {
    const auto& t = j.at("tsne");
    if (t.contains("perplexity")) tsne.perplexity = t.at("perplexity");
    if (t.contains("iterations")) tsne.iterations = t.at("iterations");
    if (t.contains("learning_rate")) tsne.learning_rate = t.at("learning_rate");
    if (t.contains("early_exaggeration_factor"))
      tsne.early_exaggeration_factor = t.at("early_exaggeration_factor");
  }
  if (j.contains("dbscan")) {
    const auto& d = j.at("dbscan");
    if (d.contains("eps")) {
      if (d.at("eps").is_string()) {
        if (d.at("eps") != "auto")
          throw UsageError("config: dbscan eps must be a number or \"auto\"");
        dbscan.eps_auto = true;
      } else {
        dbscan.eps = d.at("eps");
        dbscan.eps_auto = false;
      }
    }
    if (d.contains("min_pts")) dbscan.min_pts = d.at("min_pts");
  }
  if (j.contains("embed_per_class")) embed_per_class = j.at("embed_per_class");
  if (j.contains("out_dir")) out_dir = j.at("out_dir");
}

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;
  c.preset = name;
  c.dataset.classes = signal::all_classes();
  c.dataset.snr_grid = {10, 18};
  c.dataset.frames_per_class_snr = 100;
  c.train.batch_size = 64;
  c.train.early_stop_patience = 10;
  c.train.validation_fraction = 0.1;
  c.tsne.perplexity = 30;
  c.tsne.iterations = 1000;
  if (name == "convae-embed") {
    c.representation = "convae1";
    c.train.max_epochs = 20;
    c.train.input_noise_sigma = 0.05;
  } else if (name == "bootstrap-embed" || name == "discovery") {
    c.representation = "bootstrap";
    c.train.max_epochs = 25;
    c.train.input_noise_sigma = 0.0;
  } else if (name == "holdout") {
    c.representation = "bootstrap";
    c.train.max_epochs = 25;
    c.train.input_noise_sigma = 0.0;
    c.holdout = {"BPSK", "QAM16"};
  } else {
    throw UsageError("unknown preset: " + name +
                     " (convae-embed|bootstrap-embed|holdout|discovery)");
  }
  return c;
}

// --------------------------------------------------------------- dataset

int cmd_dataset(const std::string& config_path, const std::string& classes_csv,
                const std::string& grid_name, const std::string& snr_csv,
                int frames, uint64_t seed, const std::string& out) {
  signal::DatasetConfig cfg;
  cfg.snr_grid = signal::DatasetConfig::default_snr_grid();
  if (!config_path.empty()) {
    require_file(config_path, "config file");
    ExperimentConfig ec;
    ec.dataset = cfg;
    ec.apply_json(ordered_json::parse(read_text_file(config_path)));
    cfg = ec.dataset;
    if (ec.seed != 1) seed = ec.seed;
  }
  if (!classes_csv.empty()) cfg.classes = parse_classes(classes_csv);
  if (grid_name == "high")
    cfg.snr_grid = signal::DatasetConfig::high_snr_grid();
  else if (grid_name == "default")
    cfg.snr_grid = signal::DatasetConfig::default_snr_grid();
  else if (!grid_name.empty())
    throw UsageError("unknown snr grid name: " + grid_name);
  if (!snr_csv.empty()) {
    cfg.snr_grid.clear();
    for (const auto& s : split_csv(snr_csv)) cfg.snr_grid.push_back(std::stoi(s));
  }
  if (frames > 0) cfg.frames_per_class_snr = frames;

  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const auto ds = signal::build_dataset(cfg, seed);
  signal::save_dataset(out, ds);

  // per-class / per-SNR counts
  std::printf("wrote %s: %zu examples, %zu classes, %zu SNRs\n", out.c_str(),
              ds.size(), cfg.classes.size(), cfg.snr_grid.size());
  for (const auto m : cfg.classes) {
    size_t count = 0;
    for (const auto& ex : ds.examples)
      if (ex.class_id == uint8_t(m)) ++count;
    std::printf("  %-7s %zu\n", signal::mod_name(m), count);
  }
  return kExitOk;
}

// ------------------------------------------------------------- training

int cmd_train_ae(const std::string& dataset_path, const std::string& preset,
                 const std::string& optimizer, int epochs, int batch,
                 double lr, double noise_sigma, double dropout, uint64_t seed,
                 const std::string& out, const std::string& history_path) {
  require_file(dataset_path, "dataset file");
  const auto ds = signal::load_dataset(dataset_path);

  auto spec = ae::AutoencoderSpec::preset(preset);
  if (dropout >= 0.0) {
    spec = ae::AutoencoderSpec::with_filters(
        preset == "convae2" ? 64 : 32, preset == "convae2" ? 32 : 16,
        spec.code_dim, dropout, spec.input_noise_sigma);
  }

  nn::TrainConfig cfg;
  cfg.optimizer = parse_optimizer(optimizer);
  cfg.max_epochs = epochs;
  cfg.batch_size = batch;
  cfg.learning_rate = lr;
  cfg.input_noise_sigma = noise_sigma >= 0.0 ? noise_sigma : spec.input_noise_sigma;
  cfg.seed = seed;

  auto built = ae::build_convae(spec, seed);
  const auto hist = ae::train_convae(built, ds, cfg);
  check_divergence(hist);
  ae::save_convae(out, built, hist, cfg);
  if (!history_path.empty()) atomic_write_file(history_path, history_csv(hist));
  std::printf("wrote %s: best epoch %d, best val MSE %.6g\n", out.c_str(),
              hist.best_epoch, hist.best_val_loss);
  return kExitOk;
}

int cmd_train_clf(const std::string& dataset_path, const std::string& holdout_csv,
                  const std::string& optimizer, int epochs, int batch,
                  double lr, double dropout, bool full_scale, uint64_t seed,
                  const std::string& out, const std::string& history_path) {
  require_file(dataset_path, "dataset file");
  const auto ds = signal::load_dataset(dataset_path);

  boot::ClassifierSpec spec =
      full_scale ? boot::ClassifierSpec::full_scale() : boot::ClassifierSpec{};
  if (dropout >= 0.0) spec.dropout_rate = dropout;

  boot::HoldoutConfig holdout;
  if (!holdout_csv.empty())
    holdout = boot::HoldoutConfig::from_names(split_csv(holdout_csv));

  nn::TrainConfig cfg;
  cfg.optimizer = parse_optimizer(optimizer);
  cfg.max_epochs = epochs;
  cfg.batch_size = batch;
  cfg.learning_rate = lr;
  cfg.seed = seed;

  auto trained = boot::train_classifier(ds, holdout, spec, cfg);
  check_divergence(trained.history);
  boot::save_classifier(out, trained.clf, trained.history, cfg);
  if (!history_path.empty())
    atomic_write_file(history_path, history_csv(trained.history));
  std::printf("wrote %s: %zu training classes, best epoch %d, val loss %.6g\n",
              out.c_str(), trained.clf.trained_class_ids.size(),
              trained.history.best_epoch, trained.history.best_val_loss);
  return kExitOk;
}

// -------------------------------------------------------------- extract

int cmd_extract(const std::string& checkpoint_path,
                const std::string& dataset_path, const std::string& role,
                bool conv_maps, const std::string& out,
                const std::string& csv_path) {
  require_file(checkpoint_path, "checkpoint file");
  require_file(dataset_path, "dataset file");
  const auto ck = nn::load_checkpoint(checkpoint_path);
  if (!role.empty() && role != ck.meta.role)
    throw UsageError("checkpoint role is '" + ck.meta.role +
                     "' but --role requested '" + role + "'");
  const auto ds = signal::load_dataset(dataset_path);

  features::FeatureMatrix fm;
  if (ck.meta.role == "convae") {
    fm = ae::encode(ae::convae_from_checkpoint(ck), ds);
  } else if (ck.meta.role == "bootstrap") {
    fm = boot::extract_features(boot::classifier_from_checkpoint(ck), ds,
                                conv_maps);
  } else {
    throw UsageError("unknown checkpoint role: " + ck.meta.role);
  }
  features::save_features(out, fm);
  if (!csv_path.empty()) atomic_write_file(csv_path, features_csv(fm));
  std::printf("wrote %s: %zu rows, width %zu\n", out.c_str(), fm.n, fm.d);
  return kExitOk;
}

// ---------------------------------------------------------------- embed

int cmd_embed(const std::string& features_path, const std::string& method,
              double perplexity, int iterations, double lr, int pca_pre,
              uint64_t seed, const std::string& out,
              const std::string& kl_path) {
  require_file(features_path, "features file");
  auto fm = features::load_features(features_path);

  if (method == "pca") {
    const auto res = embed::pca(fm, 2);
    embed::EmbeddingResult em;
    em.n = fm.n;
    em.meta = fm.meta;
    em.class_table = fm.class_table;
    em.x.resize(fm.n);
    em.y.resize(fm.n);
    for (size_t i = 0; i < fm.n; ++i) {
      em.x[i] = res.projection[i * 2];
      em.y[i] = res.projection[i * 2 + 1];
    }
    atomic_write_file(out, embed::embedding_csv(em));
    std::printf("wrote %s: pca, explained variance %.4f\n", out.c_str(),
                res.explained_variance_fraction);
    return kExitOk;
  }
  if (method != "tsne") throw UsageError("unknown method: " + method);

  if (pca_pre > 0 && size_t(pca_pre) < fm.d) {
    const auto res = embed::pca(fm, pca_pre);
    features::FeatureMatrix reduced;
    reduced.n = fm.n;
    reduced.d = size_t(pca_pre);
    reduced.meta = fm.meta;
    reduced.class_table = fm.class_table;
    reduced.v.resize(fm.n * size_t(pca_pre));
    for (size_t i = 0; i < reduced.v.size(); ++i)
      reduced.v[i] = float(res.projection[i]);
    fm = std::move(reduced);
  }

  embed::TsneConfig cfg;
  cfg.perplexity = perplexity;
  cfg.iterations = iterations;
  cfg.learning_rate = lr;
  cfg.seed = seed;
  try {
    cfg.validate(fm.n);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const auto em = embed::tsne(fm, cfg);
  atomic_write_file(out, embed::embedding_csv(em));
  if (!kl_path.empty()) atomic_write_file(kl_path, embed::kl_history_csv(em));
  std::printf("wrote %s: tsne, final KL %.6g\n", out.c_str(),
              em.kl_history.empty() ? 0.0 : em.kl_history.back().second);
  return kExitOk;
}

// ------------------------------------------------------- cluster / eval

std::vector<int> truth_ids(const embed::EmbeddingResult& em) {
  std::vector<int> truth(em.n);
  for (size_t i = 0; i < em.n; ++i) truth[i] = int(em.meta[i].class_id);
  return truth;
}

int cmd_cluster(const std::string& embedding_path, const std::string& eps_arg,
                int min_pts, const std::string& out,
                const std::string& report_path) {
  require_file(embedding_path, "embedding file");
  const auto em = embed::embedding_from_csv(read_text_file(embedding_path));

  cluster::DbscanConfig cfg;
  cfg.min_pts = min_pts;
  if (eps_arg != "auto") {
    cfg.eps_auto = false;
    cfg.eps = std::stod(eps_arg);
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  std::vector<double> pts(em.n * 2);
  for (size_t i = 0; i < em.n; ++i) {
    pts[i * 2] = em.x[i];
    pts[i * 2 + 1] = em.y[i];
  }
  const auto labels = cluster::dbscan(pts, em.n, 2, cfg);

  std::vector<uint32_t> ids(em.n);
  for (size_t i = 0; i < em.n; ++i) ids[i] = em.meta[i].id;
  std::string csv = "# format=rml-clusters/1\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "# eps=%.17g\n", labels.eps_used);
  csv += buf;
  csv += "id,cluster\n";
  for (size_t i = 0; i < em.n; ++i)
    csv += std::to_string(ids[i]) + "," + std::to_string(labels.labels[i]) + "\n";
  atomic_write_file(out, csv);

  const size_t noise =
      size_t(std::count(labels.labels.begin(), labels.labels.end(), -1));
  std::printf("wrote %s: %d clusters, eps %.6g, noise %zu/%zu\n", out.c_str(),
              labels.n_clusters, labels.eps_used, noise, em.n);

  if (!report_path.empty()) {
    auto rep = cluster::map_clusters_to_classes(labels, truth_ids(em));
    ordered_json j = ordered_json::parse(rep.to_json());
    j["eps"] = labels.eps_used;
    j["min_pts"] = cfg.min_pts;
    atomic_write_file(report_path, j.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_eval(const std::string& embedding_path, const std::string& clusters_path,
             const std::string& out) {
  require_file(embedding_path, "embedding file");
  require_file(clusters_path, "clusters file");
  const auto em = embed::embedding_from_csv(read_text_file(embedding_path));
  const std::string cluster_text = read_text_file(clusters_path);
  const auto labels = cluster::clusters_from_csv(cluster_text);
  if (labels.labels.size() != em.n)
    throw UsageError("cluster count does not match embedding row count");

  auto rep = cluster::map_clusters_to_classes(labels, truth_ids(em));
  ordered_json j = ordered_json::parse(rep.to_json());
  // echo eps when the clusters file recorded it
  const size_t pos = cluster_text.find("# eps=");
  if (pos != std::string::npos)
    j["eps"] = std::stod(cluster_text.substr(pos + 6));
  // names for the class ids, for readability
  ordered_json names = ordered_json::object();
  for (int cid : rep.class_ids)
    names[std::to_string(cid)] = size_t(cid) < em.class_table.size()
                                     ? em.class_table[size_t(cid)]
                                     : "class" + std::to_string(cid);
  j["class_names"] = names;
  atomic_write_file(out, j.dump(2) + "\n");

  if (!rep.purity_defined)
    std::fprintf(stderr, "warning: every point is noise, purity undefined\n");
  std::printf("wrote %s: purity %.4f, ari %.4f, clusters %d, noise %.3f\n",
              out.c_str(), rep.purity, rep.ari, rep.discovered_cluster_count,
              rep.noise_fraction);
  return kExitOk;
}

// ----------------------------------------------------------------- plot

int cmd_plot(const std::string& embedding_path, const std::string& clusters_path,
             const std::string& by, const std::string& title,
             const std::string& out) {
  require_file(embedding_path, "embedding file");
  const auto em = embed::embedding_from_csv(read_text_file(embedding_path));

  plot::ScatterSpec spec;
  spec.title = title;
  std::string color_by = by;
  if (color_by.empty()) color_by = clusters_path.empty() ? "class" : "cluster";

  if (color_by == "cluster") {
    if (clusters_path.empty())
      throw UsageError("--by cluster requires --clusters");
    require_file(clusters_path, "clusters file");
    const auto labels =
        cluster::clusters_from_csv(read_text_file(clusters_path));
    if (labels.labels.size() != em.n)
      throw UsageError("cluster count does not match embedding row count");
    spec.labels = labels.labels;
    for (int c = 0; c < labels.n_clusters; ++c)
      spec.label_names.push_back("cluster " + std::to_string(c));
  } else if (color_by == "class") {
    spec.labels.resize(em.n);
    for (size_t i = 0; i < em.n; ++i) spec.labels[i] = int(em.meta[i].class_id);
    spec.label_names = em.class_table;
  } else {
    throw UsageError("--by must be class or cluster");
  }

  atomic_write_file(out, plot::scatter_svg(em.x, em.y, spec));
  std::printf("wrote %s (%zu points)\n", out.c_str(), em.n);
  return kExitOk;
}

// -------------------------------------------------------------- run-all

features::FeatureMatrix subsample_per_class(const features::FeatureMatrix& fm,
                                            int per_class) {
  if (per_class <= 0) return fm;
  std::map<int, int> taken;
  std::vector<size_t> keep;
  for (size_t i = 0; i < fm.n; ++i)
    if (taken[int(fm.meta[i].class_id)]++ < per_class) keep.push_back(i);
  features::FeatureMatrix out;
  out.n = keep.size();
  out.d = fm.d;
  out.class_table = fm.class_table;
  out.v.resize(out.n * out.d);
  out.meta.resize(out.n);
  for (size_t i = 0; i < keep.size(); ++i) {
    std::copy_n(fm.row(keep[i]), fm.d, out.v.data() + i * fm.d);
    out.meta[i] = fm.meta[keep[i]];
  }
  return out;
}

int cmd_run_all(const std::string& preset, const std::string& config_path,
                uint64_t seed_arg, bool seed_given,
                const std::string& out_dir_arg) {
  ExperimentConfig cfg =
      preset.empty() ? preset_config("bootstrap-embed") : preset_config(preset);
  if (!config_path.empty()) {
    require_file(config_path, "config file");
    cfg.apply_json(ordered_json::parse(read_text_file(config_path)));
  }
  if (seed_given) cfg.seed = seed_arg;

  std::string out_dir = !out_dir_arg.empty() ? out_dir_arg : cfg.out_dir;
  if (out_dir.empty()) {
    if (const char* env = std::getenv("RML_OUT_DIR")) out_dir = env;
  }
  if (out_dir.empty()) throw UsageError("no output directory (use --out-dir)");
  fs::create_directories(out_dir);

  const ordered_json config_echo = cfg.to_json();
  RunManifest manifest;
  manifest.config_hash = Sha256::of_string(config_echo.dump());

  const auto path = [&](const std::string& rel) {
    return (fs::path(out_dir) / rel).string();
  };

  std::string current_stage;
  const auto timed = [&](const std::string& name, const auto& body) {
    current_stage = name;
    const auto t0 = std::chrono::steady_clock::now();
    body();
    const auto t1 = std::chrono::steady_clock::now();
    manifest.stages.push_back(
        {name, std::chrono::duration<double>(t1 - t0).count()});
    std::printf("[run-all] %-8s done (%.1fs)\n", name.c_str(),
                manifest.stages.back().seconds);
    std::fflush(stdout);
  };

  try {
    // dataset
    signal::Dataset ds;
    timed("dataset", [&] {
      ds = signal::build_dataset(cfg.dataset, mix64(cfg.seed, 1));
      signal::save_dataset(path("dataset.rmld"), ds);
      manifest.add_artifact(out_dir, "dataset.rmld");
      manifest.add_artifact(out_dir, "dataset.rmld.json");
    });

    // train + extract
    features::FeatureMatrix feats;
    nn::TrainConfig tc = cfg.train;
    tc.seed = mix64(cfg.seed, 2);
    boot::TrainedClassifier trained_clf{
        boot::BootstrapClassifier{nn::Network<float>(
                                      {nn::LayerSpec::Dense(1)}, {1}, 0),
                                  0, {}},
        {}};
    bool have_clf = false;

    if (cfg.representation == "convae1" || cfg.representation == "convae2") {
      timed("train", [&] {
        auto spec = ae::AutoencoderSpec::preset(cfg.representation);
        auto built = ae::build_convae(spec, tc.seed);
        const auto hist = ae::train_convae(built, ds, tc);
        check_divergence(hist);
        ae::save_convae(path("model.rmlw"), built, hist, tc);
        atomic_write_file(path("history.csv"), history_csv(hist));
        manifest.add_artifact(out_dir, "model.rmlw");
        manifest.add_artifact(out_dir, "history.csv");
        feats = ae::encode(built, ds);
      });
    } else if (cfg.representation == "bootstrap") {
      timed("train", [&] {
        boot::HoldoutConfig holdout = boot::HoldoutConfig::from_names(cfg.holdout);
        trained_clf = boot::train_classifier(ds, holdout, {}, tc);
        have_clf = true;
        check_divergence(trained_clf.history);
        boot::save_classifier(path("model.rmlw"), trained_clf.clf,
                              trained_clf.history, tc);
        atomic_write_file(path("history.csv"), history_csv(trained_clf.history));
        manifest.add_artifact(out_dir, "model.rmlw");
        manifest.add_artifact(out_dir, "history.csv");
        feats = boot::extract_features(trained_clf.clf, ds);
      });
    } else if (cfg.representation == "pca") {
      timed("train", [&] {
        // linear baseline: 30-dim PCA code of the raw frames
        features::FeatureMatrix raw;
        raw.n = ds.size();
        raw.d = 256;
        raw.v.resize(raw.n * raw.d);
        for (size_t i = 0; i < ds.size(); ++i)
          std::copy(ds.examples[i].frame.v.begin(),
                    ds.examples[i].frame.v.end(), raw.v.data() + i * 256);
        raw.meta = dataset_meta(ds);
        raw.class_table = ds.class_table;
        const auto res = embed::pca(raw, 30);
        feats = raw;
        feats.d = 30;
        feats.v.resize(feats.n * 30);
        for (size_t i = 0; i < feats.v.size(); ++i)
          feats.v[i] = float(res.projection[i]);
      });
    } else {
      throw UsageError("unknown representation: " + cfg.representation);
    }

    timed("extract", [&] {
      features::save_features(path("features.rmlf"), feats);
      manifest.add_artifact(out_dir, "features.rmlf");
    });

    // holdout affinity report
    if (!cfg.holdout.empty() && have_clf) {
      timed("affinity", [&] {
        std::set<int> known(trained_clf.clf.trained_class_ids.begin(),
                            trained_clf.clf.trained_class_ids.end());
        boot::HoldoutReport rep;
        rep.held_out = cfg.holdout;
        rep.classifier_val_loss = trained_clf.history.best_val_loss;
        for (const auto& name : cfg.holdout) {
          const auto m = signal::mod_from_name(name);
          rep.affinity[int(*m)] =
              boot::neighbor_affinity(feats, known, int(*m), 10);
        }
        atomic_write_file(path("holdout_report.json"),
                          rep.to_json(ds.class_table));
        manifest.add_artifact(out_dir, "holdout_report.json");
      });
    }

    // embed
    embed::EmbeddingResult em;
    timed("embed", [&] {
      const auto sub = subsample_per_class(feats, cfg.embed_per_class);
      embed::TsneConfig t = cfg.tsne;
      t.seed = mix64(cfg.seed, 3);
      em = embed::tsne(sub, t);
      atomic_write_file(path("embedding.csv"), embed::embedding_csv(em));
      atomic_write_file(path("kl_history.csv"), embed::kl_history_csv(em));
      manifest.add_artifact(out_dir, "embedding.csv");
      manifest.add_artifact(out_dir, "kl_history.csv");
    });

    // cluster
    cluster::ClusterLabels labels;
    timed("cluster", [&] {
      std::vector<double> pts(em.n * 2);
      for (size_t i = 0; i < em.n; ++i) {
        pts[i * 2] = em.x[i];
        pts[i * 2 + 1] = em.y[i];
      }
      labels = cluster::dbscan(pts, em.n, 2, cfg.dbscan);
      std::vector<uint32_t> ids(em.n);
      for (size_t i = 0; i < em.n; ++i) ids[i] = em.meta[i].id;
      std::string csv = "# format=rml-clusters/1\n";
      char buf[64];
      std::snprintf(buf, sizeof(buf), "# eps=%.17g\n", labels.eps_used);
      csv += buf;
      csv += "id,cluster\n";
      for (size_t i = 0; i < em.n; ++i)
        csv += std::to_string(ids[i]) + "," + std::to_string(labels.labels[i]) +
               "\n";
      atomic_write_file(path("clusters.csv"), csv);
      manifest.add_artifact(out_dir, "clusters.csv");
    });

    // eval
    timed("eval", [&] {
      auto rep = cluster::map_clusters_to_classes(labels, truth_ids(em));
      ordered_json j = ordered_json::parse(rep.to_json());
      j["eps"] = labels.eps_used;
      j["min_pts"] = cfg.dbscan.min_pts;
      atomic_write_file(path("report.json"), j.dump(2) + "\n");
      manifest.add_artifact(out_dir, "report.json");
    });

    // plots
    timed("plot", [&] {
      plot::ScatterSpec by_class;
      by_class.title = "embedding by class";
      by_class.labels.resize(em.n);
      for (size_t i = 0; i < em.n; ++i)
        by_class.labels[i] = int(em.meta[i].class_id);
      by_class.label_names = em.class_table;
      atomic_write_file(path("plot_class.svg"),
                        plot::scatter_svg(em.x, em.y, by_class));
      manifest.add_artifact(out_dir, "plot_class.svg");

      plot::ScatterSpec by_cluster;
      by_cluster.title = "embedding by discovered cluster";
      by_cluster.labels = labels.labels;
      for (int c = 0; c < labels.n_clusters; ++c)
        by_cluster.label_names.push_back("cluster " + std::to_string(c));
      atomic_write_file(path("plot_cluster.svg"),
                        plot::scatter_svg(em.x, em.y, by_cluster));
      manifest.add_artifact(out_dir, "plot_cluster.svg");
    });
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run-all: stage '%s' failed: %s\n",
                 current_stage.c_str(), e.what());
    throw;
  }

  ordered_json mj = ordered_json::parse(manifest.to_json());
  mj["config"] = config_echo;
  atomic_write_file(path("manifest.json"), mj.dump(2) + "\n");
  std::printf("wrote %s\n", path("manifest.json").c_str());
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"desk-scale radio modulation representation experiments"};
  app.require_subcommand(1);

  // dataset
  auto* c_ds = app.add_subcommand("dataset", "synthesize a labeled dataset");
  std::string ds_config, ds_classes, ds_grid, ds_snr, ds_out;
  int ds_frames = 0;
  uint64_t ds_seed = 1;
  c_ds->add_option("--config", ds_config, "experiment config JSON");
  c_ds->add_option("--classes", ds_classes, "comma-separated class names");
  c_ds->add_option("--snr-grid", ds_grid, "named grid: default|high");
  c_ds->add_option("--snr", ds_snr, "comma-separated SNR dB values");
  c_ds->add_option("--frames", ds_frames, "frames per (class, SNR)");
  c_ds->add_option("--seed", ds_seed, "master seed");
  c_ds->add_option("--out", ds_out, "output .rmld path")->required();

  // train-ae
  auto* c_ta = app.add_subcommand("train-ae", "train the convolutional autoencoder");
  std::string ta_dataset, ta_preset = "convae1", ta_opt = "adam", ta_out,
              ta_history;
  int ta_epochs = 20, ta_batch = 64;
  double ta_lr = 1e-3, ta_noise = -1.0, ta_dropout = -1.0;
  uint64_t ta_seed = 1;
  c_ta->add_option("--dataset", ta_dataset, "input .rmld")->required();
  c_ta->add_option("--preset", ta_preset, "convae1|convae2");
  c_ta->add_option("--optimizer", ta_opt, "adam|rmsprop");
  c_ta->add_option("--epochs", ta_epochs, "max epochs");
  c_ta->add_option("--batch", ta_batch, "batch size");
  c_ta->add_option("--lr", ta_lr, "learning rate");
  c_ta->add_option("--noise-sigma", ta_noise, "input noise std");
  c_ta->add_option("--dropout", ta_dropout, "dropout rate");
  c_ta->add_option("--seed", ta_seed, "training seed");
  c_ta->add_option("--out", ta_out, "output .rmlw checkpoint")->required();
  c_ta->add_option("--history", ta_history, "loss history CSV path");

  // train-clf
  auto* c_tc = app.add_subcommand("train-clf", "train the bootstrap classifier");
  std::string tc_dataset, tc_holdout, tc_opt = "adam", tc_out, tc_history;
  int tc_epochs = 25, tc_batch = 64;
  double tc_lr = 1e-3, tc_dropout = -1.0;
  bool tc_full = false;
  uint64_t tc_seed = 1;
  c_tc->add_option("--dataset", tc_dataset, "input .rmld")->required();
  c_tc->add_option("--holdout", tc_holdout, "classes to hold out, e.g. BPSK,QAM16");
  c_tc->add_option("--optimizer", tc_opt, "adam|rmsprop");
  c_tc->add_option("--epochs", tc_epochs, "max epochs");
  c_tc->add_option("--batch", tc_batch, "batch size");
  c_tc->add_option("--lr", tc_lr, "learning rate");
  c_tc->add_option("--dropout", tc_dropout, "dropout rate");
  c_tc->add_flag("--full-scale", tc_full, "use the full-scale network preset");
  c_tc->add_option("--seed", tc_seed, "training seed");
  c_tc->add_option("--out", tc_out, "output .rmlw checkpoint")->required();
  c_tc->add_option("--history", tc_history, "loss history CSV path");

  // extract
  auto* c_ex = app.add_subcommand("extract", "extract sparse representations");
  std::string ex_ckpt, ex_dataset, ex_role, ex_out, ex_csv;
  bool ex_conv = false;
  c_ex->add_option("--checkpoint", ex_ckpt, "input .rmlw")->required();
  c_ex->add_option("--dataset", ex_dataset, "input .rmld")->required();
  c_ex->add_option("--role", ex_role, "expected role: convae|bootstrap");
  c_ex->add_flag("--conv-maps", ex_conv,
                 "bootstrap only: flattened conv maps instead of dense");
  c_ex->add_option("--out", ex_out, "output .rmlf")->required();
  c_ex->add_option("--csv", ex_csv, "optional CSV export path");

  // embed
  auto* c_em = app.add_subcommand("embed", "2-D embedding of features");
  std::string em_features, em_method = "tsne", em_out, em_kl;
  double em_perp = 30.0, em_lr = 200.0;
  int em_iters = 1000, em_pca_pre = 0;
  uint64_t em_seed = 0;
  c_em->add_option("--features", em_features, "input .rmlf")->required();
  c_em->add_option("--method", em_method, "tsne|pca");
  c_em->add_option("--perplexity", em_perp, "t-SNE perplexity");
  c_em->add_option("--iterations", em_iters, "t-SNE iterations");
  c_em->add_option("--lr", em_lr, "t-SNE learning rate");
  c_em->add_option("--pca-pre", em_pca_pre, "PCA pre-reduction width (0=off)");
  c_em->add_option("--seed", em_seed, "embedding seed");
  c_em->add_option("--out", em_out, "output embedding CSV")->required();
  c_em->add_option("--kl-history", em_kl, "KL history CSV path");

  // cluster
  auto* c_cl = app.add_subcommand("cluster", "DBSCAN over an embedding");
  std::string cl_embedding, cl_eps = "auto", cl_out, cl_report;
  int cl_minpts = 5;
  c_cl->add_option("--embedding", cl_embedding, "embedding CSV")->required();
  c_cl->add_option("--eps", cl_eps, "radius or 'auto'");
  c_cl->add_option("--min-pts", cl_minpts, "core point threshold");
  c_cl->add_option("--out", cl_out, "output clusters CSV")->required();
  c_cl->add_option("--report", cl_report, "optional report JSON path");

  // eval
  auto* c_ev = app.add_subcommand("eval", "score clusters against labels");
  std::string ev_embedding, ev_clusters, ev_out;
  c_ev->add_option("--embedding", ev_embedding, "embedding CSV")->required();
  c_ev->add_option("--clusters", ev_clusters, "clusters CSV")->required();
  c_ev->add_option("--out", ev_out, "output report JSON")->required();

  // plot
  auto* c_pl = app.add_subcommand("plot", "render an SVG scatter");
  std::string pl_embedding, pl_clusters, pl_by, pl_title, pl_out;
  c_pl->add_option("--embedding", pl_embedding, "embedding CSV")->required();
  c_pl->add_option("--clusters", pl_clusters, "clusters CSV (for --by cluster)");
  c_pl->add_option("--by", pl_by, "color by: class|cluster");
  c_pl->add_option("--title", pl_title, "plot title");
  c_pl->add_option("--out", pl_out, "output SVG path")->required();

  // run-all
  auto* c_ra = app.add_subcommand("run-all", "full experiment pipeline");
  std::string ra_preset, ra_config, ra_outdir;
  uint64_t ra_seed = 1;
  bool ra_seed_given = false;
  c_ra->add_option("--preset", ra_preset,
                   "convae-embed|bootstrap-embed|holdout|discovery");
  c_ra->add_option("--config", ra_config, "experiment config JSON");
  c_ra->add_option("--seed", ra_seed, "master seed")
      ->each([&](const std::string&) { ra_seed_given = true; });
  c_ra->add_option("--out-dir", ra_outdir, "output directory (or RML_OUT_DIR)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (c_ds->parsed())
      return cmd_dataset(ds_config, ds_classes, ds_grid, ds_snr, ds_frames,
                         ds_seed, ds_out);
    if (c_ta->parsed())
      return cmd_train_ae(ta_dataset, ta_preset, ta_opt, ta_epochs, ta_batch,
                          ta_lr, ta_noise, ta_dropout, ta_seed, ta_out,
                          ta_history);
    if (c_tc->parsed())
      return cmd_train_clf(tc_dataset, tc_holdout, tc_opt, tc_epochs, tc_batch,
                           tc_lr, tc_dropout, tc_full, tc_seed, tc_out,
                           tc_history);
    if (c_ex->parsed())
      return cmd_extract(ex_ckpt, ex_dataset, ex_role, ex_conv, ex_out, ex_csv);
    if (c_em->parsed())
      return cmd_embed(em_features, em_method, em_perp, em_iters, em_lr,
                       em_pca_pre, em_seed, em_out, em_kl);
    if (c_cl->parsed())
      return cmd_cluster(cl_embedding, cl_eps, cl_minpts, cl_out, cl_report);
    if (c_ev->parsed()) return cmd_eval(ev_embedding, ev_clusters, ev_out);
    if (c_pl->parsed())
      return cmd_plot(pl_embedding, pl_clusters, pl_by, pl_title, pl_out);
    if (c_ra->parsed())
      return cmd_run_all(ra_preset, ra_config, ra_seed, ra_seed_given,
                         ra_outdir);
    std::fprintf(stderr, "no subcommand given\n");
    return kExitUsage;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
}

}  // namespace rml::cli

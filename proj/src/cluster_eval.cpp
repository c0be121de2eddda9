#include "rml/cluster_eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rml::cluster {

using nlohmann::ordered_json;

MappingReport map_clusters_to_classes(const ClusterLabels& clusters,
                                      const std::vector<int>& truth) {
  const auto& labels = clusters.labels;
  if (labels.size() != truth.size())
    throw std::invalid_argument("map_clusters_to_classes: length mismatch");

  MappingReport rep;
  rep.discovered_cluster_count = clusters.n_clusters;

  std::vector<int> classes = truth;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  rep.class_ids = classes;
  auto class_col = [&](int c) {
    return size_t(std::lower_bound(classes.begin(), classes.end(), c) -
                  classes.begin());
  };

  rep.confusion.assign(size_t(clusters.n_clusters),
                       std::vector<size_t>(classes.size(), 0));
  size_t noise = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) {
      ++noise;
      continue;
    }
    rep.confusion[size_t(labels[i])][class_col(truth[i])]++;
  }
  rep.noise_fraction =
      labels.empty() ? 0.0 : double(noise) / double(labels.size());

  const size_t assigned = labels.size() - noise;
  if (assigned == 0) {
    rep.purity_defined = false;
    return rep;
  }

  size_t majority_total = 0;
  for (int c = 0; c < clusters.n_clusters; ++c) {
    const auto& row = rep.confusion[size_t(c)];
    size_t best = 0, best_col = 0;
    for (size_t col = 0; col < row.size(); ++col)
      if (row[col] > best) {
        best = row[col];
        best_col = col;
      }
    rep.cluster_to_class[c] = classes[best_col];
    majority_total += best;
  }
  rep.purity_defined = true;
  rep.purity = double(majority_total) / double(assigned);

  // per-class purity: of a class's non-noise points, how many sit in
  // clusters mapped to that class
  for (size_t col = 0; col < classes.size(); ++col) {
    size_t total = 0, captured = 0;
    for (int c = 0; c < clusters.n_clusters; ++c) {
      total += rep.confusion[size_t(c)][col];
      if (rep.cluster_to_class.at(c) == classes[col])
        captured += rep.confusion[size_t(c)][col];
    }
    if (total > 0)
      rep.per_class_purity[classes[col]] = double(captured) / double(total);
  }

  rep.ari = adjusted_rand_index(labels, truth);
  return rep;
}

double adjusted_rand_index(const std::vector<int>& a,
                           const std::vector<int>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("adjusted_rand_index: length mismatch");

  // pairwise noise exclusion == dropping rows where either label is -1
  std::vector<int> xa, xb;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0 || b[i] < 0) continue;
    xa.push_back(a[i]);
    xb.push_back(b[i]);
  }
  const size_t n = xa.size();
  if (n == 0) return 0.0;

  auto compress = [](std::vector<int>& v) {
    std::vector<int> uniq = v;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (auto& x : v)
      x = int(std::lower_bound(uniq.begin(), uniq.end(), x) - uniq.begin());
    return uniq.size();
  };
  const size_t ka = compress(xa);
  const size_t kb = compress(xb);

  std::vector<size_t> table(ka * kb, 0), ra(ka, 0), rb(kb, 0);
  for (size_t i = 0; i < n; ++i) {
    table[size_t(xa[i]) * kb + size_t(xb[i])]++;
    ra[size_t(xa[i])]++;
    rb[size_t(xb[i])]++;
  }

  auto comb2 = [](size_t m) { return double(m) * double(m - 1) / 2.0; };
  double sum_ij = 0.0;
  for (size_t v : table)
    if (v > 1) sum_ij += comb2(v);
  double sum_a = 0.0, sum_b = 0.0;
  for (size_t v : ra)
    if (v > 1) sum_a += comb2(v);
  for (size_t v : rb)
    if (v > 1) sum_b += comb2(v);

  const double total_pairs = comb2(n);
  const double expected = sum_a * sum_b / total_pairs;
  const double maximum = 0.5 * (sum_a + sum_b);
  const double denom = maximum - expected;
  if (std::abs(denom) < 1e-15) {
    // degenerate partitions (all-singletons or single cluster on both
    // sides): identical partitions score 1
    return (xa == xb || (ka == 1 && kb == 1)) ? 1.0 : 0.0;
  }
  return (sum_ij - expected) / denom;
}

DiscoveryResult discovery_report(const features::FeatureMatrix& feats,
                                 const embed::TsneConfig& tsne_cfg,
                                 const DbscanConfig& dbscan_cfg) {
  DiscoveryResult out;
  out.embedding = embed::tsne(feats, tsne_cfg);
  std::vector<double> pts(out.embedding.n * 2);
  for (size_t i = 0; i < out.embedding.n; ++i) {
    pts[i * 2] = out.embedding.x[i];
    pts[i * 2 + 1] = out.embedding.y[i];
  }
  out.clusters = dbscan(pts, out.embedding.n, 2, dbscan_cfg);
  std::vector<int> truth(feats.n);
  for (size_t i = 0; i < feats.n; ++i) truth[i] = int(feats.meta[i].class_id);
  out.report = map_clusters_to_classes(out.clusters, truth);
  return out;
}

std::string MappingReport::to_json() const {
  ordered_json j;
  j["format"] = "rml-report";
  j["format_version"] = 1;
  j["discovered_cluster_count"] = discovered_cluster_count;
  j["noise_fraction"] = noise_fraction;
  j["purity_defined"] = purity_defined;
  j["purity"] = purity;
  j["ari"] = ari;
  ordered_json mapping = ordered_json::object();
  for (const auto& [c, k] : cluster_to_class) mapping[std::to_string(c)] = k;
  j["cluster_to_class"] = mapping;
  j["class_ids"] = class_ids;
  j["confusion"] = confusion;
  ordered_json pcp = ordered_json::object();
  for (const auto& [c, p] : per_class_purity) pcp[std::to_string(c)] = p;
  j["per_class_purity"] = pcp;
  return j.dump(2) + "\n";
}

MappingReport MappingReport::from_json(const std::string& text) {
  const ordered_json j = ordered_json::parse(text);
  MappingReport rep;
  rep.discovered_cluster_count = j.at("discovered_cluster_count");
  rep.noise_fraction = j.at("noise_fraction");
  rep.purity_defined = j.at("purity_defined");
  rep.purity = j.at("purity");
  rep.ari = j.at("ari");
  for (const auto& [k, v] : j.at("cluster_to_class").items())
    rep.cluster_to_class[std::stoi(k)] = v;
  rep.class_ids = j.at("class_ids").get<std::vector<int>>();
  rep.confusion = j.at("confusion").get<std::vector<std::vector<size_t>>>();
  for (const auto& [k, v] : j.at("per_class_purity").items())
    rep.per_class_purity[std::stoi(k)] = v;
  return rep;
}

std::string clusters_csv(const ClusterLabels& labels,
                         const std::vector<uint32_t>& ids) {
  std::string out = "# format=rml-clusters/1\n";
  out += "id,cluster\n";
  for (size_t i = 0; i < labels.labels.size(); ++i) {
    const uint32_t id = i < ids.size() ? ids[i] : uint32_t(i);
    out += std::to_string(id) + "," + std::to_string(labels.labels[i]) + "\n";
  }
  return out;
}

ClusterLabels clusters_from_csv(const std::string& text) {
  ClusterLabels out;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  int max_cluster = -1;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line.rfind("id,cluster", 0) != 0)
        throw std::runtime_error("clusters csv: unexpected header: " + line);
      header_seen = true;
      continue;
    }
    const size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error("clusters csv: malformed row: " + line);
    const int c = std::stoi(line.substr(comma + 1));
    out.labels.push_back(c);
    max_cluster = std::max(max_cluster, c);
  }
  out.n_clusters = max_cluster + 1;
  return out;
}

}  // namespace rml::cluster

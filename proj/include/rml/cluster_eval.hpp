#pragma once

#include <map>
#include <string>
#include <vector>

#include "rml/dbscan.hpp"
#include "rml/tsne.hpp"

namespace rml::cluster {

struct MappingReport {
  std::map<int, int> cluster_to_class;  // majority map, several-to-one ok
  bool purity_defined = false;          // false when every point is noise
  double purity = 0.0;                  // over non-noise points
  double ari = 0.0;                     // noise excluded pairwise
  int discovered_cluster_count = 0;
  double noise_fraction = 0.0;
  // confusion[cluster][class] = count; row sums are cluster sizes
  std::vector<std::vector<size_t>> confusion;
  std::vector<int> class_ids;  // column order of the confusion table

  // Per true class: fraction of its non-noise points that sit in clusters
  // whose majority class is that class.
  std::map<int, double> per_class_purity;

  std::string to_json() const;
  static MappingReport from_json(const std::string& text);
};

// Majority-vote cluster -> class mapping plus purity bookkeeping.
// labels[i] == -1 marks noise; truth holds true class ids.
MappingReport map_clusters_to_classes(const ClusterLabels& clusters,
                                      const std::vector<int>& truth);

// Chance-corrected partition agreement from the pair-counting contingency
// table; points labeled -1 in either partition are excluded.
double adjusted_rand_index(const std::vector<int>& a,
                           const std::vector<int>& b);

struct DiscoveryResult {
  embed::EmbeddingResult embedding;
  ClusterLabels clusters;
  MappingReport report;
};

// The full blind-discovery pipeline: embed -> cluster -> map -> score.
DiscoveryResult discovery_report(const features::FeatureMatrix& feats,
                                 const embed::TsneConfig& tsne_cfg,
                                 const DbscanConfig& dbscan_cfg);

// Cluster assignment CSV: "# format=..." then id,cluster rows.
std::string clusters_csv(const ClusterLabels& labels,
                         const std::vector<uint32_t>& ids);
ClusterLabels clusters_from_csv(const std::string& text);

}  // namespace rml::cluster

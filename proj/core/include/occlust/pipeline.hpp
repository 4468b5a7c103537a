#pragma once

#include "occlust/clustering.hpp"
#include "occlust/dimred.hpp"
#include "occlust/embedding_io.hpp"
#include "occlust/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace occlust::pipeline {

using linalg::RealMatrix;

/// How the number of clusters is chosen. dbScan always searches eps: closest
/// cluster count to the fixed k, or highest mean silhouette.
enum class KPolicy { fixed, silhouette };

std::string_view to_string(KPolicy p) noexcept;
std::optional<KPolicy> parse_policy(std::string_view name);

enum class Metric { ac, ami, mi, ari, youden, silhouette };

/// Names used in report files: ac, ami, mi, ari, youden, silhouette.
std::string_view to_string(Metric m) noexcept;
std::optional<Metric> parse_metric(std::string_view name);

/// The five supervised metrics in report order.
inline constexpr Metric kReportMetrics[] = {Metric::ac, Metric::ami, Metric::mi, Metric::ari, Metric::youden};

double metric_value(const metrics::MetricReport& r, Metric m);

struct Settings {
  std::map<std::string, std::filesystem::path> corpora;  // model id -> JSONL path
  std::vector<cluster::Algorithm> clusterers{cluster::Algorithm::kmeans, cluster::Algorithm::kmedoids,
                                             cluster::Algorithm::dbscan, cluster::Algorithm::spectral};
  std::vector<dimred::Method> reductions{dimred::Method::pca, dimred::Method::mds, dimred::Method::le,
                                         dimred::Method::lle, dimred::Method::lpp, dimred::Method::npe,
                                         dimred::Method::tsne};
  std::optional<std::vector<int>> dims;
  std::uint64_t seed = 0;
  int repeats = 5;
  int fixed_k = 23;
  int k_min = 2;
  int k_max = 50;
  double eps_start = 0.01;
  double eps_stop = 2.0;
  double eps_step = 0.01;
  int min_pts = 5;
  int k_nn = 10;
  double tsne_perplexity = 30.0;
  int tsne_iterations = 1000;
  int jobs = 0;  // 0 = hardware concurrency
  std::filesystem::path out_dir = "out";
};

/// Reads the JSON config. Relative corpus paths resolve against the config's
/// directory. `overrides` are dotted key=value pairs applied before parsing.
Settings load_settings(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Same as load_settings on an in-memory JSON text.
Settings parse_settings(std::string_view json_text, const std::filesystem::path& base_dir,
                        const std::vector<std::string>& overrides = {});

/// A normalised corpus with everything the experiments need.
struct ModelData {
  std::string id;
  io::EmbeddingSet set;
  io::GroundTruth truth;
  RealMatrix x;
  RealMatrix distances;
};

ModelData prepare_model(const std::string& id, const io::EmbeddingSet& raw);

using Reporter = std::function<void(const std::string&)>;

/// Loads every configured corpus. Missing files are skipped and reported
/// through `warnings`; other load failures propagate.
std::vector<ModelData> load_models(const Settings& settings, std::vector<std::string>* warnings = nullptr);

/// A model paired with a clustering algorithm, e.g. "D+k-means".
struct MethodId {
  std::string model;
  cluster::Algorithm clusterer = cluster::Algorithm::kmeans;

  std::string name() const;
  friend auto operator<=>(const MethodId&, const MethodId&) = default;
};

struct ExperimentConfig {
  KPolicy policy = KPolicy::fixed;
  MethodId method;
  std::optional<dimred::Method> reduction;
  int m1 = 0;
  int m2 = 0;  // equals m1 without reduction
  int repeats = 5;
  std::uint64_t base_seed = 0;
};

struct RepeatOutcome {
  int repeat = 0;
  std::uint64_t seed = 0;
  int k = 0;           // clusters found
  double param = 0.0;  // requested k, or selected eps for dbScan
  metrics::MetricReport scores;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RepeatOutcome> repeats;
  bool skipped = false;
  std::string note;

  double mean(Metric m) const;
  double stddev(Metric m) const;
  double mean_k() const;
};

/// Seed of repeat r; k-means restarts consume seed .. seed+9.
std::uint64_t repeat_seed(std::uint64_t base_seed, int repeat);

/// Clusters one point set for every repeat and scores it against `truth`.
/// Errors from the algorithms mark the result skipped.
ExperimentResult run_cell(const ExperimentConfig& config, const RealMatrix& x, const RealMatrix& distances,
                          const io::GroundTruth& truth, const Settings& settings);

std::vector<ExperimentResult> run_baseline(const std::vector<ModelData>& models, const Settings& settings,
                                           KPolicy policy, const Reporter& report = {});

/// Winner among the unreduced cells of `policy` by mean metric; ties go to the
/// lexicographically first (model, clusterer). Throws ErrorKind::selection.
MethodId select_best(const std::vector<ExperimentResult>& results, Metric metric, KPolicy policy);

/// Distinct winners over the report metrics, in report-metric order.
std::vector<MethodId> selected_methods(const std::vector<ExperimentResult>& results, KPolicy policy);

/// {5,10,...,50} u {100,200,300} u {400,...,700 if m1 >= 768}, each < m1.
std::vector<int> reduction_dims(int m1);

std::vector<ExperimentResult> run_reduction_sweep(const std::vector<ModelData>& models,
                                                  const std::vector<MethodId>& methods,
                                                  const Settings& settings, KPolicy policy,
                                                  const Reporter& report = {});

struct BestModelRow {
  std::string method;
  std::string metric;
  std::string reduction;
  int m1 = 0;
  int m2 = 0;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
};

/// Best (reduction, m2) per selected method and report metric. Methods
/// without reduced cells yield a "none" row with sigma2 = sigma1.
std::vector<BestModelRow> best_model_rows(const std::vector<ExperimentResult>& results);

struct PipelineOutcome {
  std::vector<ExperimentResult> results;
  std::vector<BestModelRow> rows;
};

/// Baseline, best-model selection and (optionally) the reduction sweep.
PipelineOutcome run_pipeline(const std::vector<ModelData>& models, const Settings& settings, KPolicy policy,
                             bool with_sweep, const Reporter& report = {});

/// results.csv, best_models.csv and one series_*.csv per (method, reduction).
void emit_report(const std::vector<ExperimentResult>& results, const std::vector<BestModelRow>& rows,
                 const std::filesystem::path& out_dir);

std::vector<ExperimentResult> load_results(const std::filesystem::path& results_csv);

/// Runs `task(i)` for i in [0, count) on at most `jobs` threads.
void parallel_for(int count, int jobs, const std::function<void(int)>& task);

}  // namespace occlust::pipeline

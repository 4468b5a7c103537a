#include "occlust/pipeline.hpp"

#include "occlust/error.hpp"
#include "occlust/format.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace occlust::pipeline {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kRepeatSeedStride = 1000;

const char* const kResultsHeader =
    "policy,model,clusterer,reduction,m1,m2,repeat,seed,k,param,ac,ari,youden,mi,ami,silhouette,status,note";
const char* const kBestHeader = "method,metric,reduction,m1,m2,sigma1,sigma2";

[[noreturn]] void config_error(const std::string& message) { fail(ErrorKind::config, message); }

void emit(const Reporter& report, const std::string& line) {
  if (report) report(line);
}

std::string sanitize_note(std::string text) {
  for (char& c : text) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return text;
}

std::string file_token(std::string text) {
  for (char& c : text) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '-' || c == '.';
    if (!keep) c = '_';
  }
  return text;
}

std::string reduction_name(const std::optional<dimred::Method>& m) {
  return m ? std::string(dimred::to_string(*m)) : std::string("none");
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) config_error("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  std::string pointer;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    pointer += "/" + key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  try {
    doc[json::json_pointer(pointer)] = value;
  } catch (const json::exception& e) {
    config_error("cannot apply override '" + assignment + "': " + e.what());
  }
}

template <typename T>
T get_field(const json& doc, const char* key, T fallback) {
  const auto it = doc.find(key);
  if (it == doc.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    config_error(std::string("config field '") + key + "' has the wrong type");
  }
}

Settings settings_from_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) config_error("config must be a JSON object");
  Settings s;
  if (const auto it = doc.find("corpora"); it != doc.end()) {
    if (!it->is_object()) config_error("'corpora' must map model ids to paths");
    for (const auto& [id, path] : it->items()) {
      if (id.size() != 1 || id[0] < 'A' || id[0] > 'F') config_error("model id '" + id + "' is not one of A-F");
      if (!path.is_string()) config_error("corpus path for model " + id + " must be a string");
      std::filesystem::path p = path.get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      s.corpora[id] = p;
    }
  }
  if (const auto it = doc.find("clusterers"); it != doc.end()) {
    s.clusterers.clear();
    for (const auto& name : *it) {
      const auto a = name.is_string() ? cluster::parse_algorithm(name.get<std::string>()) : std::nullopt;
      if (!a) config_error("unknown clusterer " + name.dump());
      s.clusterers.push_back(*a);
    }
  }
  if (const auto it = doc.find("reductions"); it != doc.end()) {
    s.reductions.clear();
    for (const auto& name : *it) {
      const auto m = name.is_string() ? dimred::parse_method(name.get<std::string>()) : std::nullopt;
      if (!m) config_error("unknown reduction " + name.dump());
      s.reductions.push_back(*m);
    }
  }
  if (const auto it = doc.find("dims"); it != doc.end() && !it->is_null()) {
    s.dims = get_field<std::vector<int>>(doc, "dims", {});
    for (int d : *s.dims) {
      if (d < 1) config_error("dims must be positive");
    }
  }
  s.seed = get_field<std::uint64_t>(doc, "seed", s.seed);
  s.repeats = get_field<int>(doc, "repeats", s.repeats);
  s.fixed_k = get_field<int>(doc, "k", s.fixed_k);
  if (const auto it = doc.find("k_range"); it != doc.end()) {
    const auto range = get_field<std::vector<int>>(doc, "k_range", {});
    if (range.size() != 2 || range[0] < 2 || range[1] < range[0]) config_error("k_range must be [min, max] with 2 <= min <= max");
    s.k_min = range[0];
    s.k_max = range[1];
  }
  if (const auto it = doc.find("eps_grid"); it != doc.end()) {
    if (!it->is_object()) config_error("eps_grid must be an object {start, stop, step}");
    s.eps_start = get_field<double>(*it, "start", s.eps_start);
    s.eps_stop = get_field<double>(*it, "stop", s.eps_stop);
    s.eps_step = get_field<double>(*it, "step", s.eps_step);
  }
  s.min_pts = get_field<int>(doc, "min_pts", s.min_pts);
  s.k_nn = get_field<int>(doc, "k_nn", s.k_nn);
  if (const auto it = doc.find("tsne"); it != doc.end()) {
    if (!it->is_object()) config_error("tsne must be an object");
    s.tsne_perplexity = get_field<double>(*it, "perplexity", s.tsne_perplexity);
    s.tsne_iterations = get_field<int>(*it, "iterations", s.tsne_iterations);
  }
  s.jobs = get_field<int>(doc, "jobs", s.jobs);
  if (const auto it = doc.find("out"); it != doc.end()) {
    std::filesystem::path p = get_field<std::string>(doc, "out", "out");
    s.out_dir = p.is_relative() ? base_dir / p : p;
  }

  if (s.repeats < 1) config_error("repeats must be at least 1");
  if (s.fixed_k < 1) config_error("k must be at least 1");
  if (s.min_pts < 1) config_error("min_pts must be at least 1");
  if (s.k_nn < 1) config_error("k_nn must be at least 1");
  if (s.jobs < 0) config_error("jobs must be non-negative");
  if (!(s.eps_start > 0.0) || !(s.eps_step > 0.0) || s.eps_stop < s.eps_start) {
    config_error("eps_grid needs 0 < start <= stop and step > 0");
  }
  if (!(s.tsne_perplexity >= 1.0) || s.tsne_iterations < 1) config_error("invalid t-SNE settings");
  return s;
}

double metric_or_nan(const ExperimentResult& r, Metric m) {
  return r.skipped || r.repeats.empty() ? kNaN : r.mean(m);
}

struct SweepPlan {
  int model = 0;
  dimred::Method reduction = dimred::Method::pca;
  std::vector<int> dims;  // valid target dimensions
  std::vector<std::pair<int, std::string>> rejected;
};

int dim_limit(dimred::Method m, int n, int m1) {
  switch (m) {
    case dimred::Method::pca: return std::min(n - 1, m1 - 1);
    case dimred::Method::mds:
    case dimred::Method::le:
    case dimred::Method::lle: return std::min(n - 1, m1 - 1);
    case dimred::Method::lpp:
    case dimred::Method::npe: return std::min(n - 1, m1 - 1);
    case dimred::Method::tsne: return std::numeric_limits<int>::max();
  }
  return 0;
}

}  // namespace

std::string_view to_string(KPolicy p) noexcept { return p == KPolicy::fixed ? "fixed" : "silhouette"; }

std::optional<KPolicy> parse_policy(std::string_view name) {
  if (name == "fixed") return KPolicy::fixed;
  if (name == "silhouette") return KPolicy::silhouette;
  return std::nullopt;
}

std::string_view to_string(Metric m) noexcept {
  switch (m) {
    case Metric::ac: return "ac";
    case Metric::ami: return "ami";
    case Metric::mi: return "mi";
    case Metric::ari: return "ari";
    case Metric::youden: return "youden";
    case Metric::silhouette: return "silhouette";
  }
  return "?";
}

std::optional<Metric> parse_metric(std::string_view name) {
  for (Metric m : {Metric::ac, Metric::ami, Metric::mi, Metric::ari, Metric::youden, Metric::silhouette}) {
    if (name == to_string(m)) return m;
  }
  if (name == "yi") return Metric::youden;
  return std::nullopt;
}

double metric_value(const metrics::MetricReport& r, Metric m) {
  switch (m) {
    case Metric::ac: return r.ac;
    case Metric::ami: return r.ami;
    case Metric::mi: return r.mi;
    case Metric::ari: return r.ari;
    case Metric::youden: return r.yi;
    case Metric::silhouette: return r.silhouette_mean;
  }
  return kNaN;
}

Settings parse_settings(std::string_view json_text, const std::filesystem::path& base_dir,
                        const std::vector<std::string>& overrides) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    config_error(std::string("config is not valid JSON: ") + e.what());
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return settings_from_json(doc, base_dir);
}

Settings load_settings(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) config_error("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_settings(buf.str(), path.parent_path(), overrides);
}

ModelData prepare_model(const std::string& id, const io::EmbeddingSet& raw) {
  ModelData m;
  m.id = id;
  m.set = io::normalize_rows(raw);
  m.truth = io::major_group_labels(m.set);
  m.x = m.set.matrix();
  m.distances = io::distance_matrix(m.set);
  return m;
}

std::vector<ModelData> load_models(const Settings& settings, std::vector<std::string>* warnings) {
  std::vector<ModelData> models;
  for (const auto& [id, path] : settings.corpora) {
    if (!std::filesystem::exists(path)) {
      if (warnings != nullptr) warnings->push_back("corpus for model " + id + " not found: " + path.string());
      continue;
    }
    models.push_back(prepare_model(id, io::load_corpus(path)));
  }
  return models;
}

std::string MethodId::name() const { return model + "+" + std::string(cluster::to_string(clusterer)); }

double ExperimentResult::mean(Metric m) const {
  if (repeats.empty()) return kNaN;
  double sum = 0.0;
  for (const auto& r : repeats) sum += metric_value(r.scores, m);
  return sum / static_cast<double>(repeats.size());
}

double ExperimentResult::stddev(Metric m) const {
  if (repeats.size() < 2) return repeats.empty() ? kNaN : 0.0;
  const double mu = mean(m);
  double acc = 0.0;
  for (const auto& r : repeats) {
    const double d = metric_value(r.scores, m) - mu;
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(repeats.size() - 1));
}

double ExperimentResult::mean_k() const {
  if (repeats.empty()) return kNaN;
  double sum = 0.0;
  for (const auto& r : repeats) sum += r.k;
  return sum / static_cast<double>(repeats.size());
}

std::uint64_t repeat_seed(std::uint64_t base_seed, int repeat) {
  return base_seed + kRepeatSeedStride * static_cast<std::uint64_t>(repeat);
}

ExperimentResult run_cell(const ExperimentConfig& config, const RealMatrix& x, const RealMatrix& distances,
                          const io::GroundTruth& truth, const Settings& settings) {
  using cluster::Algorithm;
  ExperimentResult result;
  result.config = config;
  const int n = static_cast<int>(x.rows());
  const auto grid = cluster::eps_grid(settings.eps_start, settings.eps_stop, settings.eps_step);
  std::vector<int> k_range;
  for (int k = settings.k_min; k <= std::min(settings.k_max, n - 1); ++k) k_range.push_back(k);

  try {
    for (int r = 0; r < config.repeats; ++r) {
      const std::uint64_t seed = repeat_seed(config.base_seed, r);
      if (config.method.clusterer == Algorithm::dbscan && r > 0) {
        // dbScan is deterministic; repeats share the first outcome.
        RepeatOutcome copy = result.repeats.front();
        copy.repeat = r;
        copy.seed = seed;
        result.repeats.push_back(copy);
        continue;
      }
      const auto run_k = [&](int k) -> cluster::ClusterAssignment {
        switch (config.method.clusterer) {
          case Algorithm::kmeans: return cluster::kmeans(x, k, seed);
          case Algorithm::kmedoids: return cluster::kmedoids(distances, k, seed);
          case Algorithm::spectral: return cluster::spectral_from_distances(distances, k, settings.k_nn, seed);
          case Algorithm::dbscan: break;
        }
        fail(ErrorKind::parameter, "dbScan has no cluster-count parameter");
      };

      RepeatOutcome outcome;
      outcome.repeat = r;
      outcome.seed = seed;
      cluster::ClusterAssignment assignment;
      if (config.policy == KPolicy::fixed) {
        if (config.method.clusterer == Algorithm::dbscan) {
          auto sweep = cluster::dbscan_sweep(distances, settings.min_pts, grid, settings.fixed_k);
          outcome.param = sweep.eps;
          assignment = std::move(sweep.assignment);
        } else {
          outcome.param = settings.fixed_k;
          assignment = run_k(settings.fixed_k);
        }
      } else {
        metrics::SilhouetteSelection pick;
        if (config.method.clusterer == Algorithm::dbscan) {
          pick = metrics::select_by_silhouette(distances, grid, [&](double eps) {
            return cluster::dbscan(distances, eps, settings.min_pts);
          });
        } else {
          if (k_range.empty()) fail(ErrorKind::parameter, "no admissible k in k_range for n=" + std::to_string(n));
          pick = metrics::select_k_by_silhouette(distances, k_range, run_k);
        }
        outcome.param = pick.param;
        assignment = std::move(pick.assignment);
      }
      outcome.k = assignment.k;
      outcome.scores = metrics::evaluate(distances, assignment.labels, truth.labels);
      result.repeats.push_back(outcome);
    }
  } catch (const Error& e) {
    result.skipped = true;
    result.repeats.clear();
    result.note = std::string(to_string(e.kind())) + ": " + e.what();
  }
  return result;
}

std::vector<ExperimentResult> run_baseline(const std::vector<ModelData>& models, const Settings& settings,
                                           KPolicy policy, const Reporter& report) {
  struct Job {
    const ModelData* model;
    cluster::Algorithm clusterer;
  };
  std::vector<Job> jobs;
  for (const auto& m : models) {
    for (auto c : settings.clusterers) jobs.push_back({&m, c});
  }
  std::vector<ExperimentResult> results(jobs.size());
  std::mutex log_mutex;
  parallel_for(static_cast<int>(jobs.size()), settings.jobs, [&](int i) {
    const auto& job = jobs[i];
    ExperimentConfig cfg;
    cfg.policy = policy;
    cfg.method = {job.model->id, job.clusterer};
    cfg.m1 = job.model->set.dim();
    cfg.m2 = cfg.m1;
    cfg.repeats = settings.repeats;
    cfg.base_seed = settings.seed;
    results[i] = run_cell(cfg, job.model->x, job.model->distances, job.model->truth, settings);
    std::lock_guard lock(log_mutex);
    const auto& r = results[i];
    emit(report, "[" + std::string(to_string(policy)) + "] " + cfg.method.name() +
                     (r.skipped ? " skipped (" + r.note + ")"
                                : " ac=" + format_real(r.mean(Metric::ac)) +
                                      " youden=" + format_real(r.mean(Metric::youden))));
  });
  return results;
}

MethodId select_best(const std::vector<ExperimentResult>& results, Metric metric, KPolicy policy) {
  const ExperimentResult* best = nullptr;
  double best_value = kNaN;
  for (const auto& r : results) {
    if (r.config.policy != policy || r.config.reduction) continue;
    const double v = metric_or_nan(r, metric);
    if (std::isnan(v)) continue;
    const auto key = std::make_pair(r.config.method.model, std::string(cluster::to_string(r.config.method.clusterer)));
    if (best == nullptr || v > best_value ||
        (v == best_value &&
         key < std::make_pair(best->config.method.model, std::string(cluster::to_string(best->config.method.clusterer))))) {
      best = &r;
      best_value = v;
    }
  }
  if (best == nullptr) {
    fail(ErrorKind::selection, "no scored baseline cell for metric " + std::string(to_string(metric)));
  }
  return best->config.method;
}

std::vector<MethodId> selected_methods(const std::vector<ExperimentResult>& results, KPolicy policy) {
  std::vector<MethodId> out;
  for (Metric m : kReportMetrics) {
    const auto winner = select_best(results, m, policy);
    if (std::find(out.begin(), out.end(), winner) == out.end()) out.push_back(winner);
  }
  return out;
}

std::vector<int> reduction_dims(int m1) {
  std::vector<int> dims;
  for (int d = 5; d <= 50; d += 5) dims.push_back(d);
  for (int d : {100, 200, 300}) dims.push_back(d);
  if (m1 >= 768) {
    for (int d : {400, 500, 600, 700}) dims.push_back(d);
  }
  std::erase_if(dims, [m1](int d) { return d >= m1; });
  return dims;
}

std::vector<ExperimentResult> run_reduction_sweep(const std::vector<ModelData>& models,
                                                  const std::vector<MethodId>& methods,
                                                  const Settings& settings, KPolicy policy,
                                                  const Reporter& report) {
  const auto model_index = [&](const std::string& id) -> int {
    for (std::size_t i = 0; i < models.size(); ++i) {
      if (models[i].id == id) return static_cast<int>(i);
    }
    fail(ErrorKind::selection, "selected model " + id + " is not loaded");
  };

  // One plan per (model, reduction) used by any selected method.
  std::vector<SweepPlan> plans;
  std::set<std::pair<int, int>> planned;
  for (const auto& method : methods) {
    const int mi = model_index(method.model);
    const auto& model = models[mi];
    const int n = model.set.size();
    const int m1 = model.set.dim();
    for (auto reduction : settings.reductions) {
      if (!planned.emplace(mi, static_cast<int>(reduction)).second) continue;
      SweepPlan plan;
      plan.model = mi;
      plan.reduction = reduction;
      const auto dims = settings.dims ? *settings.dims : reduction_dims(m1);
      const int limit = dim_limit(reduction, n, m1);
      int components = 0;
      if (reduction == dimred::Method::le && n > settings.k_nn) {
        linalg::knn_graph(model.distances, settings.k_nn).components(&components);
      }
      for (int d : dims) {
        if (d > limit) {
          plan.rejected.emplace_back(d, "parameter: m2=" + std::to_string(d) + " exceeds the limit " +
                                            std::to_string(limit) + " for " +
                                            std::string(dimred::to_string(reduction)));
        } else if (components > d + 1) {
          plan.rejected.emplace_back(d, "degeneracy: kNN graph has " + std::to_string(components) +
                                            " components, more than m2+1");
        } else {
          plan.dims.push_back(d);
        }
      }
      plans.push_back(std::move(plan));
    }
  }

  // Reductions. Spectral embeddings are nested in m2, so one solve at the
  // largest dimension serves every smaller one; t-SNE runs per dimension.
  struct ReductionJob {
    int plan = 0;
    int dim = 0;
  };
  std::vector<ReductionJob> reduction_jobs;
  for (std::size_t p = 0; p < plans.size(); ++p) {
    const auto& plan = plans[p];
    if (plan.dims.empty()) continue;
    if (plan.reduction == dimred::Method::tsne) {
      for (int d : plan.dims) reduction_jobs.push_back({static_cast<int>(p), d});
    } else {
      reduction_jobs.push_back({static_cast<int>(p), *std::max_element(plan.dims.begin(), plan.dims.end())});
    }
  }
  struct Reduced {
    std::optional<RealMatrix> y;
    std::string error;
  };
  std::vector<Reduced> reduced(reduction_jobs.size());
  std::mutex log_mutex;
  parallel_for(static_cast<int>(reduction_jobs.size()), settings.jobs, [&](int j) {
    const auto& job = reduction_jobs[j];
    const auto& plan = plans[job.plan];
    const auto& model = models[plan.model];
    dimred::ReductionSpec spec;
    spec.method = plan.reduction;
    spec.target_dim = job.dim;
    spec.k_nn = settings.k_nn;
    spec.perplexity = settings.tsne_perplexity;
    spec.iterations = settings.tsne_iterations;
    spec.seed = settings.seed;
    try {
      reduced[j].y = dimred::reduce(spec, model.x, model.distances).y;
    } catch (const Error& e) {
      reduced[j].error = std::string(to_string(e.kind())) + ": " + e.what();
    }
    std::lock_guard lock(log_mutex);
    emit(report, "[reduce] " + model.id + " " + std::string(dimred::to_string(plan.reduction)) +
                     " m2=" + std::to_string(job.dim) + (reduced[j].error.empty() ? "" : " failed"));
  });
  const auto find_reduced = [&](int plan, int dim) -> const Reduced* {
    for (std::size_t j = 0; j < reduction_jobs.size(); ++j) {
      const auto& job = reduction_jobs[j];
      if (job.plan != plan) continue;
      if (plans[plan].reduction != dimred::Method::tsne || job.dim == dim) return &reduced[j];
    }
    return nullptr;
  };

  // Cells in deterministic order: method, reduction, dimension.
  struct CellJob {
    MethodId method;
    int plan = 0;
    int dim = 0;
    std::string rejected;
  };
  std::vector<CellJob> cells;
  for (const auto& method : methods) {
    const int mi = model_index(method.model);
    for (auto reduction : settings.reductions) {
      const auto it = std::find_if(plans.begin(), plans.end(), [&](const SweepPlan& p) {
        return p.model == mi && p.reduction == reduction;
      });
      const int p = static_cast<int>(it - plans.begin());
      std::vector<std::pair<int, std::string>> dims;
      for (int d : it->dims) dims.emplace_back(d, "");
      for (const auto& rej : it->rejected) dims.push_back(rej);
      std::stable_sort(dims.begin(), dims.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      for (const auto& [d, why] : dims) cells.push_back({method, p, d, why});
    }
  }

  std::vector<ExperimentResult> results(cells.size());
  parallel_for(static_cast<int>(cells.size()), settings.jobs, [&](int c) {
    const auto& cell = cells[c];
    const auto& plan = plans[cell.plan];
    const auto& model = models[plan.model];
    ExperimentConfig cfg;
    cfg.policy = policy;
    cfg.method = cell.method;
    cfg.reduction = plan.reduction;
    cfg.m1 = model.set.dim();
    cfg.m2 = cell.dim;
    cfg.repeats = settings.repeats;
    cfg.base_seed = settings.seed;
    ExperimentResult& out = results[c];
    out.config = cfg;
    if (!cell.rejected.empty()) {
      out.skipped = true;
      out.note = cell.rejected;
      return;
    }
    const Reduced* red = find_reduced(cell.plan, cell.dim);
    if (red == nullptr || !red->y) {
      out.skipped = true;
      out.note = red == nullptr ? "reduction unavailable" : red->error;
      return;
    }
    const RealMatrix y = red->y->leftCols(cell.dim);
    out = run_cell(cfg, y, linalg::pairwise_distances(y), model.truth, settings);
    std::lock_guard lock(log_mutex);
    emit(report, "[sweep] " + cfg.method.name() + " " + reduction_name(cfg.reduction) + " m2=" +
                     std::to_string(cfg.m2) + (out.skipped ? " skipped" : " ac=" + format_real(out.mean(Metric::ac))));
  });
  return results;
}

std::vector<BestModelRow> best_model_rows(const std::vector<ExperimentResult>& results) {
  std::vector<KPolicy> policies;
  for (const auto& r : results) {
    if (std::find(policies.begin(), policies.end(), r.config.policy) == policies.end()) {
      policies.push_back(r.config.policy);
    }
  }
  std::vector<BestModelRow> rows;
  for (KPolicy policy : policies) {
    std::vector<MethodId> methods;
    try {
      methods = selected_methods(results, policy);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::selection) throw;
      continue;
    }
    for (const auto& method : methods) {
      const auto base = std::find_if(results.begin(), results.end(), [&](const ExperimentResult& r) {
        return r.config.policy == policy && !r.config.reduction && r.config.method == method && !r.skipped;
      });
      for (Metric metric : kReportMetrics) {
        BestModelRow row;
        row.method = method.name();
        row.metric = std::string(to_string(metric));
        row.m1 = base->config.m1;
        row.sigma1 = base->mean(metric);
        const ExperimentResult* best = nullptr;
        double best_value = kNaN;
        for (const auto& r : results) {
          if (r.config.policy != policy || !r.config.reduction || !(r.config.method == method)) continue;
          const double v = metric_or_nan(r, metric);
          if (std::isnan(v)) continue;
          if (best == nullptr || v > best_value) {
            best = &r;
            best_value = v;
          }
        }
        if (best != nullptr) {
          row.reduction = reduction_name(best->config.reduction);
          row.m2 = best->config.m2;
          row.sigma2 = best_value;
        } else {
          row.reduction = "none";
          row.m2 = row.m1;
          row.sigma2 = row.sigma1;
        }
        rows.push_back(row);
      }
    }
  }
  return rows;
}

PipelineOutcome run_pipeline(const std::vector<ModelData>& models, const Settings& settings, KPolicy policy,
                             bool with_sweep, const Reporter& report) {
  PipelineOutcome out;
  out.results = run_baseline(models, settings, policy, report);
  if (with_sweep) {
    const auto methods = selected_methods(out.results, policy);
    std::string names;
    for (const auto& m : methods) names += " " + m.name();
    emit(report, "[select] " + std::string(to_string(policy)) + ":" + names);
    auto sweep = run_reduction_sweep(models, methods, settings, policy, report);
    out.results.insert(out.results.end(), std::make_move_iterator(sweep.begin()),
                       std::make_move_iterator(sweep.end()));
  }
  out.rows = best_model_rows(out.results);
  return out;
}

void emit_report(const std::vector<ExperimentResult>& results, const std::vector<BestModelRow>& rows,
                 const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create " + out_dir.string() + ": " + ec.message());

  const auto open = [](const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write " + path.string());
    return out;
  };
  const auto close = [](std::ofstream& out, const std::filesystem::path& path) {
    out.close();
    if (!out) fail(ErrorKind::io, "write failed for " + path.string());
  };

  {
    const auto path = out_dir / "results.csv";
    auto out = open(path);
    out << kResultsHeader << '\n';
    for (const auto& r : results) {
      const auto& c = r.config;
      const std::string prefix = std::string(to_string(c.policy)) + "," + c.method.model + "," +
                                 std::string(cluster::to_string(c.method.clusterer)) + "," +
                                 reduction_name(c.reduction) + "," + std::to_string(c.m1) + "," +
                                 std::to_string(c.m2) + ",";
      if (r.skipped) {
        out << prefix << "0," << c.base_seed << ",0,nan,nan,nan,nan,nan,nan,nan,skipped,"
            << sanitize_note(r.note) << '\n';
        continue;
      }
      for (const auto& rep : r.repeats) {
        const auto& s = rep.scores;
        out << prefix << rep.repeat << ',' << rep.seed << ',' << rep.k << ',' << format_real(rep.param) << ','
            << format_real(s.ac) << ',' << format_real(s.ari) << ',' << format_real(s.yi) << ','
            << format_real(s.mi) << ',' << format_real(s.ami) << ',' << format_real(s.silhouette_mean)
            << ",ok," << sanitize_note(r.note) << '\n';
      }
    }
    close(out, path);
  }
  {
    const auto path = out_dir / "best_models.csv";
    auto out = open(path);
    out << kBestHeader << '\n';
    for (const auto& row : rows) {
      out << row.method << ',' << row.metric << ',' << row.reduction << ',' << row.m1 << ',' << row.m2 << ','
          << format_real(row.sigma1) << ',' << format_real(row.sigma2) << '\n';
    }
    close(out, path);
  }

  // Metric-vs-dimension series per (policy, method, reduction).
  std::vector<std::string> order;
  std::map<std::string, std::vector<const ExperimentResult*>> series;
  for (const auto& r : results) {
    if (!r.config.reduction || r.skipped) continue;
    const std::string key = std::string(to_string(r.config.policy)) + "_" + r.config.method.model + "_" +
                            std::string(cluster::to_string(r.config.method.clusterer)) + "_" +
                            reduction_name(r.config.reduction);
    if (!series.contains(key)) order.push_back(key);
    series[key].push_back(&r);
  }
  for (const auto& key : order) {
    const auto path = out_dir / ("series_" + file_token(key) + ".csv");
    auto out = open(path);
    out << "m2,ac,ami,mi,ari,youden,silhouette,mean_k\n";
    for (const auto* r : series[key]) {
      out << r->config.m2;
      for (Metric m : kReportMetrics) out << ',' << format_real(r->mean(m));
      out << ',' << format_real(r->mean(Metric::silhouette)) << ',' << format_real(r->mean_k()) << '\n';
    }
    close(out, path);
  }
}

std::vector<ExperimentResult> load_results(const std::filesystem::path& results_csv) {
  std::ifstream in(results_csv);
  if (!in) fail(ErrorKind::io, "cannot read " + results_csv.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::load, results_csv.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultsHeader) fail(ErrorKind::load, results_csv.string() + " has an unexpected header");

  std::vector<ExperimentResult> results;
  std::map<std::string, std::size_t> index;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    const auto where = results_csv.string() + " line " + std::to_string(line_no) + ": ";
    if (f.size() != 18) fail(ErrorKind::load, where + "expected 18 fields");
    try {
      const auto policy = parse_policy(f[0]);
      const auto clusterer = cluster::parse_algorithm(f[2]);
      if (!policy || !clusterer) fail(ErrorKind::load, where + "unknown policy or clusterer");
      std::optional<dimred::Method> reduction;
      if (f[3] != "none") {
        reduction = dimred::parse_method(f[3]);
        if (!reduction) fail(ErrorKind::load, where + "unknown reduction " + f[3]);
      }
      const std::string key = f[0] + "," + f[1] + "," + f[2] + "," + f[3] + "," + f[4] + "," + f[5];
      auto [it, inserted] = index.emplace(key, results.size());
      if (inserted) {
        ExperimentResult r;
        r.config.policy = *policy;
        r.config.method = {f[1], *clusterer};
        r.config.reduction = reduction;
        r.config.m1 = std::stoi(f[4]);
        r.config.m2 = std::stoi(f[5]);
        r.config.repeats = 0;
        results.push_back(std::move(r));
      }
      auto& r = results[it->second];
      const int repeat = std::stoi(f[6]);
      const std::uint64_t seed = std::stoull(f[7]);
      if (f[16] == "skipped") {
        r.skipped = true;
        r.note = f[17];
        r.config.base_seed = seed;
        continue;
      }
      RepeatOutcome rep;
      rep.repeat = repeat;
      rep.seed = seed;
      rep.k = std::stoi(f[8]);
      rep.param = parse_real(f[9]);
      rep.scores.ac = parse_real(f[10]);
      rep.scores.ari = parse_real(f[11]);
      rep.scores.yi = parse_real(f[12]);
      rep.scores.mi = parse_real(f[13]);
      rep.scores.ami = parse_real(f[14]);
      rep.scores.silhouette_mean = parse_real(f[15]);
      if (r.repeats.empty()) r.config.base_seed = seed - kRepeatSeedStride * static_cast<std::uint64_t>(repeat);
      r.repeats.push_back(rep);
      r.config.repeats = static_cast<int>(r.repeats.size());
      r.note = f[17];
    } catch (const std::logic_error&) {
      fail(ErrorKind::load, where + "malformed number");
    }
  }
  return results;
}

void parallel_for(int count, int jobs, const std::function<void(int)>& task) {
  if (count <= 0) return;
  int workers = jobs > 0 ? jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, count);
  if (workers == 1) {
    for (int i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < count; i = next++) {
          try {
            task(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace occlust::pipeline

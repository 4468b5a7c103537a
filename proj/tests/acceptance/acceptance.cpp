// One PASS/FAIL line per acceptance criterion. Exit status is non-zero if any
// criterion fails.

#include "cli.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

#include "occlust/clustering.hpp"
#include "occlust/dimred.hpp"
#include "occlust/error.hpp"
#include "occlust/linalg.hpp"
#include "occlust/metrics.hpp"
#include "occlust/pipeline.hpp"
#include "occlust/synthetic.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

using namespace occlust;
using linalg::RealMatrix;

namespace {

// Tolerances and limits.
constexpr double kMetricTol = 1e-10;
constexpr double kEigenResidualTol = 1e-8;
constexpr double kGradientTol = 1e-4;
constexpr double kLleRowTol = 1e-9;
constexpr double kMdsTol = 1e-8;
constexpr double kRecoveryAri = 0.95;
constexpr double kMetricSeconds = 10.0;
constexpr double kNumericsSeconds = 60.0;
constexpr double kRecoverySeconds = 300.0;

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

bool same(double a, double b, double tol) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return std::abs(a - b) <= tol;
}

Outcome metric_oracle() {
  Outcome o;
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 200 && o.pass; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 49);
    const auto pred = oracle::random_labels(n, 1 + static_cast<int>(rng() % 6), rng, trial % 2 == 1);
    const auto truth = oracle::random_labels(n, 1 + static_cast<int>(rng() % 6), rng);
    const auto tag = " (instance " + std::to_string(trial) + ")";

    const auto pc = metrics::pair_confusion(pred, truth);
    const auto ref = oracle::pair_counts(pred, truth);
    o.check(pc.tp == ref.tp && pc.tn == ref.tn && pc.fp == ref.fp && pc.fn == ref.fn, "pair counts" + tag);

    const auto compare = [&](const char* name, double got, double want) {
      worst = std::max(worst, std::isnan(got) || std::isnan(want) ? 0.0 : std::abs(got - want));
      o.check(same(got, want, kMetricTol), std::string(name) + tag);
    };
    compare("AC", metrics::accuracy(pc), oracle::accuracy(ref));
    const bool yi_defined = ref.tp + ref.fn > 0 && ref.tn + ref.fp > 0;
    if (yi_defined) {
      compare("YI", metrics::youden(pc).index, oracle::youden(ref));
    } else {
      bool threw = false;
      try {
        metrics::youden(pc);
      } catch (const Error& e) {
        threw = e.kind() == ErrorKind::undefined_metric;
      }
      o.check(threw, "undefined YI not reported" + tag);
    }
    const auto expanded = oracle::expand_noise(pred);
    compare("MI", metrics::mutual_information(pred, truth), oracle::mutual_information(expanded, truth));
    compare("ARI", metrics::adjusted_rand_index(pred, truth).value, oracle::ari(ref));
    compare("AMI", metrics::adjusted_mutual_information(pred, truth).value, oracle::ami(expanded, truth));

    const RealMatrix d = oracle::distances(oracle::random_matrix(n, 3, rng));
    std::set<int> clusters(pred.begin(), pred.end());
    clusters.erase(cluster::kNoise);
    if (clusters.size() < 2) {
      bool threw = false;
      try {
        metrics::silhouette_values(d, pred);
      } catch (const Error& e) {
        threw = e.kind() == ErrorKind::undefined_metric;
      }
      o.check(threw, "silhouette with one cluster not reported" + tag);
      continue;
    }
    const auto s = metrics::silhouette_values(d, pred);
    const auto s_ref = oracle::silhouette(d, pred);
    for (int i = 0; i < n; ++i) compare("silhouette", s[static_cast<std::size_t>(i)], s_ref[static_cast<std::size_t>(i)]);
  }
  if (o.pass) o.detail = "200 instances, max deviation " + fmt(worst);
  return o;
}

Outcome numerics() {
  Outcome o;
  std::mt19937_64 rng(99);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 63);
    const int count = 1 + static_cast<int>(rng() % static_cast<unsigned>(n));
    const auto order = trial % 2 ? linalg::EigenOrder::largest : linalg::EigenOrder::smallest;
    const RealMatrix a = oracle::random_symmetric(n, rng);
    const RealMatrix b = oracle::random_spd(n, rng);
    const auto e = linalg::sym_eig(a, order, count);
    const auto g = linalg::gen_eig(a, b, order, count);
    for (int j = 0; j < count; ++j) {
      const auto v = e.vectors.col(j);
      const double r = (a * v - e.values(j) * v).norm() / (std::max(1.0, a.norm()) * v.norm());
      const auto w = g.vectors.col(j);
      const double rg =
          (a * w - g.values(j) * (b * w)).norm() / ((a.norm() + std::abs(g.values(j)) * b.norm()) * w.norm());
      worst = std::max({worst, r, rg});
    }
  }
  o.check(worst <= kEigenResidualTol, "eigen residual " + fmt(worst));

  {
    const RealMatrix p = dimred::detail::joint_affinities(oracle::random_matrix(12, 5, rng), 4.0);
    RealMatrix y = oracle::random_matrix(12, 2, rng);
    const RealMatrix grad = dimred::detail::tsne_gradient(p, y);
    RealMatrix fd(12, 2);
    const double h = 1e-5;
    for (int i = 0; i < 12; ++i) {
      for (int c = 0; c < 2; ++c) {
        const double keep = y(i, c);
        y(i, c) = keep + h;
        const double up = dimred::detail::tsne_kl(p, y);
        y(i, c) = keep - h;
        const double down = dimred::detail::tsne_kl(p, y);
        y(i, c) = keep;
        fd(i, c) = (up - down) / (2.0 * h);
      }
    }
    const double rel = (grad - fd).norm() / grad.norm();
    o.check(rel <= kGradientTol, "t-SNE gradient relative error " + fmt(rel));
  }

  for (int trial = 0; trial < 5; ++trial) {
    const RealMatrix w = dimred::detail::lle_weights(oracle::random_matrix(40, 6, rng), 8);
    const double dev = (w.rowwise().sum().array() - 1.0).abs().maxCoeff();
    o.check(dev <= kLleRowTol, "LLE row sum deviation " + fmt(dev));
  }

  for (int trial = 0; trial < 5; ++trial) {
    const int dim = 2 + trial % 3;
    const RealMatrix d = oracle::distances(oracle::random_matrix(30, dim, rng) * 5.0);
    const RealMatrix y = dimred::mds(d, dim).y;
    const double dev = (oracle::distances(y) - d).cwiseAbs().maxCoeff();
    o.check(dev <= kMdsTol, "MDS distance deviation " + fmt(dev));
  }
  if (o.pass) o.detail = "max eigen residual " + fmt(worst);
  return o;
}

Outcome recovery() {
  Outcome o;
  std::vector<int> found_ks;
  {
    synthetic::BlobSpec spec;  // 23 blobs, n = 1016, m = 64
    spec.seed = 7;
    const auto model = pipeline::prepare_model("S", synthetic::make_blob_corpus(spec));
    const auto a = cluster::kmeans(model.x, 23, 7);
    const double ari = metrics::adjusted_rand_index(a.labels, model.truth.labels).value;
    o.check(ari >= kRecoveryAri, "23-blob k-means ARI " + fmt(ari));
    o.detail = "ARI " + fmt(ari);
  }
  std::vector<int> ks(9);
  std::iota(ks.begin(), ks.end(), 2);
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    synthetic::BlobSpec spec;
    spec.n = 500;
    spec.classes = 5;
    spec.seed = seed;
    const auto model = pipeline::prepare_model("S", synthetic::make_blob_corpus(spec));
    const auto sel = metrics::select_k_by_silhouette(
        model.distances, ks, [&](int k) { return cluster::kmeans(model.x, k, seed); });
    hits += sel.k == 5;
    found_ks.push_back(sel.k);
  }
  o.check(hits == 5, "silhouette picked k=5 in " + std::to_string(hits) + "/5 runs");
  {
    std::mt19937_64 rng(11);
    RealMatrix x = oracle::random_matrix(80, 2, rng);
    x.bottomRows(40).array() += 50.0;
    const RealMatrix d = linalg::pairwise_distances(x);
    int parts = 0;
    linalg::knn_graph(d, 10).components(&parts);
    o.check(parts == 2, "fixture graph has " + std::to_string(parts) + " components");
    const auto a = cluster::spectral(x, 2, 10, 3);
    std::vector<int> truth(80, 0);
    std::fill(truth.begin() + 40, truth.end(), 1);
    o.check(cluster::canonicalize(a.labels).labels == truth, "spectral split differs from the components");
  }
  if (o.pass) o.detail += ", silhouette k=5 in 5/5, spectral exact";
  return o;
}

Outcome determinism() {
  Outcome o;
  TempDir dir;
  synthetic::BlobSpec spec;
  spec.seed = 7;
  io::write_corpus(synthetic::make_blob_corpus(spec), dir / "s.jsonl");
  std::ofstream(dir / "config.json") << R"({
    "corpora": {"A": "s.jsonl"}, "repeats": 2, "dims": [5, 20],
    "tsne": {"iterations": 250}
  })";
  std::string outputs[2][2];
  for (int run = 0; run < 2; ++run) {
    const auto out = dir / ("run" + std::to_string(run));
    std::ostringstream log;
    std::ostringstream err;
    const int code = cli::run({"reduce-sweep", "-c", (dir / "config.json").string(), "--seed", "7", "--jobs",
                               run == 0 ? "1" : "4", "--out", out.string()},
                              log, err);
    o.check(code == 0, "run " + std::to_string(run) + " exited " + std::to_string(code) + ": " + err.str());
    outputs[run][0] = slurp(out / "results.csv");
    outputs[run][1] = slurp(out / "best_models.csv");
  }
  o.check(!outputs[0][0].empty() && outputs[0][0] == outputs[1][0], "results.csv differs");
  o.check(!outputs[0][1].empty() && outputs[0][1] == outputs[1][1], "best_models.csv differs");
  if (o.pass) {
    const auto lines = std::count(outputs[0][0].begin(), outputs[0][0].end(), '\n');
    o.detail = "seed 7, jobs 1 vs 4, " + std::to_string(lines - 1) + " result rows identical";
  }
  return o;
}

Outcome table_schema() {
  Outcome o;
  const std::filesystem::path fixtures = OCCLUST_FIXTURE_DIR;
  TempDir dir;
  const auto results = pipeline::load_results(fixtures / "table2_results.csv");
  pipeline::emit_report(results, pipeline::best_model_rows(results), dir.path());
  const auto got = slurp(dir / "best_models.csv");
  const auto want = slurp(fixtures / "table2_best_models.csv");
  o.check(!want.empty() && got == want, "best_models.csv:\n" + got);
  if (o.pass) o.detail = "10 rows match";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double limit_seconds;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"metric-oracle", kMetricSeconds, metric_oracle},
      {"eigen-numerics", kNumericsSeconds, numerics},
      {"synthetic-recovery", kRecoverySeconds, recovery},
      {"pipeline-determinism", 0.0, determinism},
      {"table2-schema", 0.0, table_schema},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds > 0.0 && seconds > c.limit_seconds) {
      o.pass = false;
      o.detail += " (over the " + fmt(c.limit_seconds) + " s limit)";
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << " [" << fmt(seconds) << " s]"
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}

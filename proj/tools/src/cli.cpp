#include "cli.hpp"

#include "occlust/error.hpp"
#include "occlust/format.hpp"
#include "occlust/metrics.hpp"
#include "occlust/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

namespace occlust::cli {

namespace {

namespace pl = occlust::pipeline;

struct Options {
  std::string config;
  int jobs = -1;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::string pred;
  std::string truth;
  std::string results;
  bool no_sweep = false;
};

void write_errors(std::ostream& err, const std::vector<std::pair<std::string, std::string>>& errors) {
  nlohmann::json doc;
  doc["errors"] = nlohmann::json::array();
  for (const auto& [kind, message] : errors) doc["errors"].push_back({{"kind", kind}, {"message", message}});
  err << doc.dump() << '\n';
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("-c,--config", o.config, "JSON config file")->required();
  cmd->add_option("--jobs", o.jobs, "Worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", o.seed, "Base seed");
  cmd->add_option("--out", o.out_dir, "Output directory");
  cmd->add_option("overrides", o.overrides, "Dotted key=value config overrides");
}

pl::Settings settings_for(const Options& o) {
  auto s = pl::load_settings(o.config, o.overrides);
  if (o.jobs >= 0) s.jobs = o.jobs;
  if (o.seed) s.seed = *o.seed;
  if (!o.out_dir.empty()) s.out_dir = o.out_dir;
  return s;
}

std::string display_real(double v) {
  std::string s = format_real(v);
  if (s.find_first_of(".eni") == std::string::npos) s += ".0";
  return s;
}

std::vector<pl::ModelData> models_for(const pl::Settings& s, std::ostream& out) {
  std::vector<std::string> warnings;
  auto models = pl::load_models(s, &warnings);
  for (const auto& w : warnings) out << "warning: " << w << '\n';
  if (models.empty()) fail(ErrorKind::load, "no corpus could be loaded");
  return models;
}

int run_pipeline(const Options& o, pl::KPolicy policy, bool sweep, std::ostream& out) {
  const auto settings = settings_for(o);
  const auto models = models_for(settings, out);
  const auto outcome = pl::run_pipeline(models, settings, policy, sweep, [&](const std::string& line) {
    out << line << '\n' << std::flush;
  });
  pl::emit_report(outcome.results, outcome.rows, settings.out_dir);
  out << "wrote " << (settings.out_dir / "results.csv").string() << " and "
      << (settings.out_dir / "best_models.csv").string() << '\n';
  return 0;
}

int validate(const Options& o, std::ostream& out, std::ostream& err) {
  const auto settings = settings_for(o);
  std::vector<std::pair<std::string, std::string>> errors;
  if (settings.corpora.empty()) errors.emplace_back("config", "no corpora configured");
  for (const auto& [id, path] : settings.corpora) {
    try {
      const auto set = io::load_corpus(path);
      const auto truth = io::major_group_labels(set);
      out << "model " << id << ": " << set.size() << " records, m=" << set.dim() << ", "
          << truth.class_count() << " major groups\n";
    } catch (const Error& e) {
      errors.emplace_back(std::string(to_string(e.kind())), "model " + id + ": " + e.what());
    }
  }
  if (!errors.empty()) {
    write_errors(err, errors);
    return 1;
  }
  out << "config ok\n";
  return 0;
}

std::vector<int> encode(const std::vector<std::string>& labels, bool allow_noise) {
  std::map<std::string, int> ids;
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& l : labels) {
    if (allow_noise && l == "-1") {
      out.push_back(cluster::kNoise);
      continue;
    }
    out.push_back(ids.emplace(l, static_cast<int>(ids.size())).first->second);
  }
  return out;
}

int score(const Options& o, std::ostream& out) {
  const auto pred = read_label_csv(o.pred);
  const auto truth = read_label_csv(o.truth);
  std::map<std::string, std::string> truth_by_id;
  for (const auto& [id, label] : truth) {
    if (!truth_by_id.emplace(id, label).second) fail(ErrorKind::validation, "duplicate id " + id + " in " + o.truth);
  }
  std::vector<std::string> p;
  std::vector<std::string> t;
  std::set<std::string> seen;
  for (const auto& [id, label] : pred) {
    if (!seen.insert(id).second) fail(ErrorKind::validation, "duplicate id " + id + " in " + o.pred);
    const auto it = truth_by_id.find(id);
    if (it == truth_by_id.end()) fail(ErrorKind::validation, "id " + id + " has no ground-truth label");
    p.push_back(label);
    t.push_back(it->second);
  }
  if (p.size() != truth_by_id.size()) fail(ErrorKind::validation, "prediction and truth cover different ids");
  if (p.empty()) fail(ErrorKind::validation, "no labels to score");
  const auto pi = encode(p, true);
  const auto ti = encode(t, false);
  const auto pc = metrics::pair_confusion(pi, ti);
  const auto safe = [](auto&& f) {
    try {
      return f();
    } catch (const Error&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  out << "ac=" << display_real(safe([&] { return metrics::accuracy(pc); })) << '\n';
  out << "ari=" << display_real(metrics::adjusted_rand_index(pi, ti).value) << '\n';
  out << "youden=" << display_real(safe([&] { return metrics::youden(pc).index; })) << '\n';
  out << "mi=" << display_real(metrics::mutual_information(pi, ti)) << '\n';
  out << "ami=" << display_real(metrics::adjusted_mutual_information(pi, ti).value) << '\n';
  out << "tp=" << pc.tp << " tn=" << pc.tn << " fp=" << pc.fp << " fn=" << pc.fn << '\n';
  return 0;
}

int report(const Options& o, std::ostream& out) {
  const auto settings = settings_for(o);
  const std::filesystem::path source =
      o.results.empty() ? settings.out_dir / "results.csv" : std::filesystem::path(o.results);
  const auto results = pl::load_results(source);
  const auto rows = pl::best_model_rows(results);
  pl::emit_report(results, rows, settings.out_dir);
  out << "re-emitted " << rows.size() << " best-model rows from " << results.size() << " cells into "
      << settings.out_dir.string() << '\n';
  return 0;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> read_label_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot read " + path);
  std::vector<std::pair<std::string, std::string>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 2) fail(ErrorKind::load, path + " line " + std::to_string(line_no) + ": expected id,label");
    if (rows.empty() && line_no == 1) {
      int v = 0;
      const auto r = std::from_chars(f[1].data(), f[1].data() + f[1].size(), v);
      if (r.ec != std::errc() || r.ptr != f[1].data() + f[1].size()) continue;  // header
    }
    rows.emplace_back(f[0], f[1]);
  }
  return rows;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Occupation embedding clustering experiments", "occlust"};
  app.require_subcommand(1);
  Options o;
  auto* validate_cmd = app.add_subcommand("validate", "Check the config and every corpus");
  auto* baseline_cmd = app.add_subcommand("baseline", "Cluster every model with k = 23");
  auto* sweep_cmd = app.add_subcommand("reduce-sweep", "Baseline, best-model selection and reduction sweep");
  auto* silhouette_cmd = app.add_subcommand("silhouette", "Silhouette-selected k, selection and reduction sweep");
  auto* metrics_cmd = app.add_subcommand("metrics", "Score a predicted labeling against ground truth");
  auto* report_cmd = app.add_subcommand("report", "Re-emit tables from a stored results.csv");
  for (auto* cmd : {validate_cmd, baseline_cmd, sweep_cmd, silhouette_cmd, report_cmd}) add_common(cmd, o);
  silhouette_cmd->add_flag("--no-sweep", o.no_sweep, "Stop after the silhouette baseline");
  report_cmd->add_option("--results", o.results, "results.csv to read (default: <out>/results.csv)");
  metrics_cmd->add_option("--pred", o.pred, "Predicted id,label CSV")->required();
  metrics_cmd->add_option("--truth", o.truth, "Ground-truth id,label CSV")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*validate_cmd) return validate(o, out, err);
    if (*baseline_cmd) return run_pipeline(o, pl::KPolicy::fixed, false, out);
    if (*sweep_cmd) return run_pipeline(o, pl::KPolicy::fixed, true, out);
    if (*silhouette_cmd) return run_pipeline(o, pl::KPolicy::silhouette, !o.no_sweep, out);
    if (*metrics_cmd) return score(o, out);
    if (*report_cmd) return report(o, out);
  } catch (const Error& e) {
    write_errors(err, {{std::string(to_string(e.kind())), e.what()}});
    return 1;
  } catch (const std::exception& e) {
    write_errors(err, {{"internal", e.what()}});
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace occlust::cli

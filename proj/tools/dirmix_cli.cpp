#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dirmix/benchmark.hpp"
#include "dirmix/dirichlet_mle.hpp"
#include "dirmix/io.hpp"
#include "dirmix/tasks.hpp"

using namespace dirmix;
using nlohmann::json;

namespace {

std::vector<double> parse_reals(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ValidationError("not a number: '" + item + "'");
    }
    if (used != item.size()) throw ValidationError("not a number: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError("empty list '" + text + "'");
  return out;
}

std::vector<Index> parse_counts(const std::string& text) {
  std::vector<Index> out;
  for (double v : parse_reals(text)) {
    if (v < 0 || v != static_cast<double>(static_cast<Index>(v))) {
      throw ValidationError("expected nonnegative integers in '" + text + "'");
    }
    out.push_back(static_cast<Index>(v));
  }
  return out;
}

// Rows separated by ';', entries by ','; every entry positive.
Eigen::MatrixXd parse_alpha_spec(const std::string& spec) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(spec);
  std::string row;
  while (std::getline(ss, row, ';')) rows.push_back(parse_reals(row));
  if (rows.empty()) throw ValidationError("empty alpha spec");
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), static_cast<Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw ValidationError("alpha rows differ in length");
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (!(rows[r][c] > 0.0) || !std::isfinite(rows[r][c])) {
        throw ValidationError("alpha entries must be positive and finite");
      }
      out(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    }
  }
  return out;
}

void echo_config(const std::string& command, const json& config) {
  std::cerr << json{{"command", command}, {"config", config}}.dump() << '\n';
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

void emit_reports(const std::vector<BenchmarkReport>& reports, const std::string& out_prefix) {
  for (const auto& r : reports) {
    std::cout << r.method_name << " tasks=" << r.records.size()
              << " mean_accuracy=" << r.mean_accuracy
              << " mean_task_seconds=" << r.mean_task_seconds << '\n';
  }
  if (out_prefix.empty()) return;
  std::ostringstream csv;
  write_csv(csv, reports);
  write_text(out_prefix + ".csv", csv.str());
  json all = json::array();
  for (const auto& r : reports) all.push_back(to_json(r));
  write_text(out_prefix + ".json", (reports.size() == 1 ? all[0] : all).dump(2) + "\n");
  std::cerr << "wrote " << out_prefix << ".csv and " << out_prefix << ".json\n";
}

// Flags shared by the clustering subcommands.
struct RunFlags {
  std::string in_path;
  std::string init_path;
  std::string methods = "hard-em-dirichlet";
  double lambda_scale = 1.0;
  bool no_barrier = false;
  bool no_mdl = false;
  bool no_matching = false;
  unsigned workers = 0;
  std::string out;
  Index tasks = 1000;
  std::uint64_t seed = 0;
  int max_outer_iter = 1000;
  double outer_eps = 1e-13;
  double stiffness = 1.0;

  void attach(CLI::App* app, bool many_methods) {
    app->add_option("--in", in_path, "feature container")->required();
    app->add_option("--init", init_path, "probability container seeding raw-embedding input");
    app->add_option(many_methods ? "--methods" : "--method", methods,
                    many_methods ? "comma-separated methods" : "solver");
    app->add_option("--lambda-scale", lambda_scale, "multiplier on the protocol lambda");
    app->add_flag("--no-barrier", no_barrier, "drop the entropic barrier (hard assignments)");
    app->add_flag("--no-mdl", no_mdl, "drop the partition complexity term");
    app->add_option("--workers", workers, "task-level threads, 0 = all cores");
    app->add_option("--out", out, "output prefix for <out>.csv and <out>.json");
    app->add_option("--tasks", tasks, "number of tasks");
    app->add_option("--seed", seed, "protocol seed");
    app->add_option("--max-iter", max_outer_iter, "outer iteration budget");
    app->add_option("--eps", outer_eps, "outer stopping tolerance");
    app->add_option("--stiffness", stiffness, "soft k-means stiffness");
  }

  std::vector<Method> parsed_methods() const {
    std::vector<Method> out_methods;
    std::stringstream ss(methods);
    std::string name;
    while (std::getline(ss, name, ',')) {
      if (name == "all") {
        for (Method m : all_methods()) out_methods.push_back(m);
        continue;
      }
      const auto m = parse_method(name);
      if (!m) throw ValidationError("unknown method '" + name + "'");
      out_methods.push_back(*m);
    }
    if (out_methods.empty()) throw ValidationError("no method given");
    return out_methods;
  }

  BenchmarkOptions options(Method method) const {
    BenchmarkOptions o;
    o.method = method;
    o.lambda_scale = lambda_scale;
    o.matching = !no_matching;
    o.workers = workers;
    o.config.use_barrier = !no_barrier;
    o.config.use_mdl = !no_mdl;
    o.config.max_outer_iter = max_outer_iter;
    o.config.outer_eps = outer_eps;
    o.config.kmeans_stiffness = stiffness;
    return o;
  }

  FeatureSet load() const {
    LoadedContainer c = read_container(in_path);
    if (!init_path.empty()) {
      LoadedContainer init = read_container(init_path);
      if (init.features.kind != ContentKind::SimplexProbabilities) {
        throw ValidationError("--init container must hold simplex probabilities");
      }
      if (init.features.n_samples() != c.features.n_samples()) {
        throw DimensionError("--init container has a different sample count");
      }
      c.features.init_probabilities = init.features.rows;
      if (c.features.class_names.empty()) c.features.class_names = init.features.class_names;
      if (!c.features.labels) c.features.labels = init.features.labels;
    }
    c.features.validate(kContainerRowSumTol);
    return c.features;
  }

  json echo() const {
    return {{"in", in_path},         {"init", init_path},        {"methods", methods},
            {"lambda_scale", lambda_scale}, {"no_barrier", no_barrier}, {"no_mdl", no_mdl},
            {"no_matching", no_matching},   {"workers", workers},       {"out", out},
            {"tasks", tasks},        {"seed", seed},             {"max_iter", max_outer_iter},
            {"eps", outer_eps},      {"stiffness", stiffness}};
  }
};

struct ZeroShotFlags {
  Index query_size = 75;
  Index min_eff = 3;
  Index max_eff = 0;
  std::string query_sweep;

  void attach(CLI::App* app) {
    app->add_option("--query-size", query_size, "query rows per task");
    app->add_option("--min-eff", min_eff, "minimum effective classes");
    app->add_option("--max-eff", max_eff, "maximum effective classes, 0 = min(10, K)");
    app->add_option("--query-sweep", query_sweep, "comma-separated query sizes");
  }
  ZeroShotProtocol protocol(const RunFlags& run, Index n_classes) const {
    ZeroShotProtocol p;
    p.query_size = query_size;
    p.min_eff_classes = min_eff;
    p.max_eff_classes = max_eff > 0 ? max_eff : std::min<Index>(10, n_classes);
    p.n_tasks = run.tasks;
    p.seed = run.seed;
    return p;
  }
};

struct FewShotFlags {
  std::string shots = "4";
  Index k_eff = 5;
  Index query_size = 75;

  void attach(CLI::App* app) {
    app->add_option("--shots", shots, "shots per class, comma-separated for a sweep");
    app->add_option("--k-eff", k_eff, "classes present in the query");
    app->add_option("--query-size", query_size, "query rows per task");
  }
};

std::vector<BenchmarkReport> run_zero_shot(const RunFlags& run, const ZeroShotFlags& zs) {
  const FeatureSet features = run.load();
  const ZeroShotProtocol protocol = zs.protocol(run, features.n_classes());
  protocol.validate(features.n_classes());
  std::vector<BenchmarkReport> reports;
  for (Method m : run.parsed_methods()) {
    if (zs.query_sweep.empty()) {
      reports.push_back(run_benchmark(features, protocol, run.options(m)));
    } else {
      for (auto& r : sweep_query_size(features, protocol, parse_counts(zs.query_sweep), run.options(m))) {
        reports.push_back(std::move(r));
      }
    }
  }
  return reports;
}

std::vector<BenchmarkReport> run_few_shot(const RunFlags& run, const FewShotFlags& fs) {
  const FeatureSet features = run.load();
  FewShotProtocol protocol;
  protocol.k_eff = fs.k_eff;
  protocol.query_size = fs.query_size;
  protocol.n_tasks = run.tasks;
  protocol.seed = run.seed;
  const auto shots = parse_counts(fs.shots);
  protocol.shots = shots.front();
  protocol.validate(features.n_classes());
  std::vector<BenchmarkReport> reports;
  for (Method m : run.parsed_methods()) {
    for (auto& r : sweep_shots(features, protocol, shots, run.options(m))) {
      reports.push_back(std::move(r));
    }
  }
  return reports;
}

json fit_json(const std::string& algo, const DirichletFit& fit, double seconds) {
  return {{"algo", algo},
          {"alpha", std::vector<double>(fit.alpha.data(), fit.alpha.data() + fit.alpha.size())},
          {"iterations", fit.report.iterations},
          {"converged", fit.report.converged},
          {"objective", fit.report.final_objective},
          {"seconds", seconds}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet-mixture transductive classification toolkit"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic Dirichlet mixture container");
  Index synth_classes = 0;
  std::string synth_alpha, synth_props, synth_out, synth_dtype = "f64", synth_name = "synthetic";
  Index synth_n = 0;
  std::uint64_t synth_seed = 0;
  synth->add_option("--classes", synth_classes, "number of classes K")->required();
  synth->add_option("--alpha", synth_alpha, "rows 'a,b,c;d,e,f;...'")->required();
  synth->add_option("--proportions", synth_props, "class proportions, default uniform");
  synth->add_option("--n", synth_n, "number of samples")->required();
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--out", synth_out, "container path")->required();
  synth->add_option("--dtype", synth_dtype, "f32 or f64")->check(CLI::IsMember({"f32", "f64"}));
  synth->add_option("--dataset", synth_name, "dataset name for the manifest");

  // fit-dirichlet
  auto* fit = app.add_subcommand("fit-dirichlet", "fit one Dirichlet by maximum likelihood");
  std::string fit_in, fit_algo = "quadratic", fit_true, fit_out;
  int fit_label = -1;
  Index fit_n = 10000;
  std::uint64_t fit_seed = 0;
  double fit_eps = 1e-13;
  int fit_max_iter = 1000;
  fit->add_option("--in", fit_in, "container with probability rows");
  fit->add_option("--label", fit_label, "only rows with this label");
  fit->add_option("--alpha-true", fit_true, "inline synthetic data: 'a,b,c'");
  fit->add_option("--n", fit_n, "inline sample count");
  fit->add_option("--seed", fit_seed, "inline generator seed");
  fit->add_option("--algo", fit_algo, "quadratic, minka or both")
      ->check(CLI::IsMember({"quadratic", "minka", "both"}));
  fit->add_option("--eps", fit_eps, "relative squared change tolerance");
  fit->add_option("--max-iter", fit_max_iter, "iteration budget");
  fit->add_option("--out", fit_out, "JSON output file, default stdout");

  // cluster
  auto* cluster = app.add_subcommand("cluster", "zero-shot benchmark of one method");
  RunFlags cluster_run;
  ZeroShotFlags cluster_zs;
  cluster_run.attach(cluster, false);
  cluster_zs.attach(cluster);
  cluster->add_flag("--no-matching", cluster_run.no_matching, "score with per-cluster argmax");

  // fewshot
  auto* fewshot = app.add_subcommand("fewshot", "few-shot benchmark of one method");
  RunFlags few_run;
  few_run.methods = "em-dirichlet";
  FewShotFlags few_fs;
  few_run.attach(fewshot, false);
  few_fs.attach(fewshot);

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "zero- or few-shot benchmark over several methods");
  RunFlags bench_run;
  bench_run.methods = "all";
  ZeroShotFlags bench_zs;
  FewShotFlags bench_fs;
  std::string bench_protocol = "zero-shot";
  bench_run.attach(bench, true);
  bench->add_option("--protocol", bench_protocol, "zero-shot or few-shot")
      ->check(CLI::IsMember({"zero-shot", "few-shot"}));
  bench->add_option("--query-size", bench_zs.query_size, "query rows per task");
  bench->add_option("--min-eff", bench_zs.min_eff, "zero-shot minimum effective classes");
  bench->add_option("--max-eff", bench_zs.max_eff, "zero-shot maximum effective classes");
  bench->add_option("--query-sweep", bench_zs.query_sweep, "zero-shot query sizes");
  bench->add_option("--shots", bench_fs.shots, "few-shot shots, comma-separated");
  bench->add_option("--k-eff", bench_fs.k_eff, "few-shot effective classes");
  bench->add_flag("--no-matching", bench_run.no_matching, "score with per-cluster argmax");

  // inspect
  auto* inspect = app.add_subcommand("inspect", "print a container summary");
  std::string inspect_in;
  inspect->add_option("--in", inspect_in, "container path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*synth) {
      echo_config("synth", {{"classes", synth_classes}, {"alpha", synth_alpha},
                            {"proportions", synth_props}, {"n", synth_n}, {"seed", synth_seed},
                            {"out", synth_out}, {"dtype", synth_dtype}, {"dataset", synth_name}});
      if (synth_n < 1) throw ValidationError("--n must be positive");
      const Eigen::MatrixXd alphas = parse_alpha_spec(synth_alpha);
      if (alphas.rows() != synth_classes || alphas.cols() != synth_classes) {
        throw ValidationError("--alpha must have K rows of K entries");
      }
      Eigen::VectorXd pi = Eigen::VectorXd::Constant(synth_classes, 1.0 / synth_classes);
      if (!synth_props.empty()) {
        const auto p = parse_reals(synth_props);
        if (static_cast<Index>(p.size()) != synth_classes) {
          throw ValidationError("--proportions needs K entries");
        }
        pi = Eigen::Map<const Eigen::VectorXd>(p.data(), synth_classes);
      }
      const FeatureSet features = generate_synthetic_mixture({alphas}, {pi}, synth_n, synth_seed);
      Manifest manifest;
      manifest.dataset = synth_name;
      manifest.class_names = features.class_names;
      manifest.encoder = "synthetic-dirichlet";
      manifest.prompt_template = "";
      manifest.created = utc_timestamp();
      write_container(features, manifest, synth_out,
                      synth_dtype == "f32" ? DType::F32 : DType::F64);
      std::cerr << "wrote " << synth_out << '\n';
    } else if (*fit) {
      echo_config("fit-dirichlet", {{"in", fit_in}, {"label", fit_label}, {"alpha_true", fit_true},
                                    {"n", fit_n}, {"seed", fit_seed}, {"algo", fit_algo},
                                    {"eps", fit_eps}, {"max_iter", fit_max_iter}});
      if (!(fit_eps > 0.0)) throw ValidationError("--eps must be positive");
      if (fit_max_iter < 1) throw ValidationError("--max-iter must be positive");
      Eigen::MatrixXd z;
      if (!fit_in.empty()) {
        const FeatureSet f = read_container(fit_in).features;
        if (f.kind != ContentKind::SimplexProbabilities) {
          throw ValidationError("fit-dirichlet needs simplex probability rows");
        }
        if (fit_label < 0) {
          z = f.rows;
        } else {
          if (!f.labels) throw ValidationError("--label given but the container has no labels");
          std::vector<Index> keep;
          for (std::size_t n = 0; n < f.labels->size(); ++n) {
            if ((*f.labels)[n] == fit_label) keep.push_back(static_cast<Index>(n));
          }
          if (keep.empty()) throw ValidationError("no rows carry label " + std::to_string(fit_label));
          z = f.rows(keep, Eigen::all);
        }
      } else if (!fit_true.empty()) {
        const auto a = parse_reals(fit_true);
        const Index k = static_cast<Index>(a.size());
        Eigen::MatrixXd alphas(1, k);
        for (Index i = 0; i < k; ++i) alphas(0, i) = a[static_cast<std::size_t>(i)];
        // Pad to a square parameter block; only component 0 is drawn.
        Eigen::MatrixXd square = Eigen::MatrixXd::Ones(k, k);
        square.row(0) = alphas.row(0);
        Eigen::VectorXd pi = Eigen::VectorXd::Zero(k);
        pi(0) = 1.0;
        z = generate_synthetic_mixture({square}, {pi}, fit_n, fit_seed).rows;
      } else {
        throw ValidationError("give --in or --alpha-true");
      }
      const auto stats = DirichletStats::from(clamped_log(z), Eigen::VectorXd::Ones(z.rows()));
      MmOptions mm;
      mm.eps = fit_eps;
      mm.max_iter = fit_max_iter;
      const Eigen::VectorXd init = Eigen::VectorXd::Ones(z.cols());
      json out = json::array();
      auto timed = [&](const std::string& algo, auto&& solver) {
        const auto start = std::chrono::steady_clock::now();
        const DirichletFit r = solver(init, stats, mm);
        const double s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.push_back(fit_json(algo, r, s));
      };
      if (fit_algo != "minka") {
        timed("quadratic", [](const auto& i, const auto& s, const auto& o) {
          return fit_dirichlet(i, s, o);
        });
      }
      if (fit_algo != "quadratic") {
        timed("minka", [](const auto& i, const auto& s, const auto& o) {
          return fit_dirichlet_minka(i, s, o);
        });
      }
      const json result = {{"samples", z.rows()}, {"fits", out}};
      if (fit_out.empty()) {
        std::cout << result.dump(2) << '\n';
      } else {
        write_text(fit_out, result.dump(2) + "\n");
      }
    } else if (*cluster) {
      json cfg = cluster_run.echo();
      cfg["query_size"] = cluster_zs.query_size;
      cfg["min_eff"] = cluster_zs.min_eff;
      cfg["max_eff"] = cluster_zs.max_eff;
      cfg["query_sweep"] = cluster_zs.query_sweep;
      echo_config("cluster", cfg);
      emit_reports(run_zero_shot(cluster_run, cluster_zs), cluster_run.out);
    } else if (*fewshot) {
      json cfg = few_run.echo();
      cfg["shots"] = few_fs.shots;
      cfg["k_eff"] = few_fs.k_eff;
      cfg["query_size"] = few_fs.query_size;
      echo_config("fewshot", cfg);
      emit_reports(run_few_shot(few_run, few_fs), few_run.out);
    } else if (*bench) {
      json cfg = bench_run.echo();
      cfg["protocol"] = bench_protocol;
      cfg["query_size"] = bench_zs.query_size;
      cfg["min_eff"] = bench_zs.min_eff;
      cfg["max_eff"] = bench_zs.max_eff;
      cfg["query_sweep"] = bench_zs.query_sweep;
      cfg["shots"] = bench_fs.shots;
      cfg["k_eff"] = bench_fs.k_eff;
      echo_config("benchmark", cfg);
      if (bench_protocol == "zero-shot") {
        emit_reports(run_zero_shot(bench_run, bench_zs), bench_run.out);
      } else {
        bench_fs.query_size = bench_zs.query_size;
        emit_reports(run_few_shot(bench_run, bench_fs), bench_run.out);
      }
    } else if (*inspect) {
      echo_config("inspect", {{"in", inspect_in}});
      const LoadedContainer c = read_container(inspect_in);
      const FeatureSet& f = c.features;
      json summary = {{"kind", f.kind == ContentKind::SimplexProbabilities ? "simplex_probabilities"
                                                                           : "raw_embeddings"},
                      {"dtype", c.dtype == DType::F32 ? "f32" : "f64"},
                      {"n_samples", f.n_samples()},
                      {"dim", f.dim()},
                      {"has_labels", f.has_labels()},
                      {"manifest", to_json(c.manifest)}};
      if (f.labels) {
        std::vector<Index> counts(static_cast<std::size_t>(f.n_classes()), 0);
        for (auto y : *f.labels) ++counts[static_cast<std::size_t>(y)];
        summary["class_counts"] = counts;
        if (f.kind == ContentKind::SimplexProbabilities) {
          Index correct = 0;
          for (Index n = 0; n < f.n_samples(); ++n) {
            if (argmax_lowest(f.rows.row(n)) == (*f.labels)[static_cast<std::size_t>(n)]) ++correct;
          }
          summary["row_argmax_accuracy"] =
              static_cast<double>(correct) / static_cast<double>(f.n_samples());
        }
      }
      std::cout << summary.dump(2) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

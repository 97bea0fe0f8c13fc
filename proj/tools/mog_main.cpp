// mog: graph sparsification workbench.
//   sparsify  prune a graph with MoG or a classical baseline
//   train     end-to-end MoG + GNN training on a labeled graph
//   bench     SpMM timing across a sparsity grid
//   eval      inspect priors, gate decisions, sparsity, downstream accuracy
#include "mog/baselines.hpp"
#include "mog/bench.hpp"
#include "mog/common.hpp"
#include "mog/criteria.hpp"
#include "mog/io.hpp"
#include "mog/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace mog;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::string config_text_from_arg(const std::string& arg) {
  if (arg.empty()) return "{}";
  if (arg.find('=') != std::string::npos && !arg.starts_with("{")) return arg; // inline k=v
  return read_text_file(arg);
}

BaselineConfig parse_baseline_config(const std::string& text, BaselineKind kind,
                                     std::uint64_t seed) {
  nlohmann::json j;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    j = nlohmann::json::parse(text);
  } else {
    j = nlohmann::json::object();
    std::stringstream ss(text);
    std::string pair;
    while (std::getline(ss, pair, ',')) {
      if (pair.empty()) continue;
      const auto eq = pair.find('=');
      if (eq == std::string::npos) throw DataError("inline config expects key=value: " + pair);
      try {
        j[pair.substr(0, eq)] = nlohmann::json::parse(pair.substr(eq + 1));
      } catch (const nlohmann::json::exception&) {
        j[pair.substr(0, eq)] = pair.substr(eq + 1);
      }
    }
  }
  BaselineConfig cfg;
  cfg.kind = kind;
  cfg.seed = seed;
  for (const auto& [key, value] : j.items()) {
    if (key == "s")
      cfg.s = value.get<double>();
    else if (key == "seed")
      cfg.seed = value.get<std::uint64_t>();
    else if (key == "alpha_tol")
      cfg.alpha_tol = value.get<double>();
    else if (key == "er_exact_cap")
      cfg.er_exact_cap = value.get<std::size_t>();
    else
      throw DataError("baseline config: unknown key '" + key + "'");
  }
  return cfg;
}

void write_sidecar(const std::string& output, const SparsifyReport& report,
                   const TrainConfig& cfg) {
  nlohmann::json meta;
  meta["achieved_sparsity"] = report.achieved_sparsity;
  meta["config_hash"] = config_hash(cfg);
  meta["kept_edges"] = report.sparse.n_edges();
  nlohmann::json gates = nlohmann::json::array();
  for (const auto& gd : report.gates) {
    nlohmann::json row;
    row["node"] = gd.node;
    row["experts"] = gd.experts;
    row["weights"] = gd.weights;
    gates.push_back(row);
  }
  meta["gates"] = gates;
  write_text_file(output + ".meta.json", meta.dump(2) + "\n");
}

int cmd_sparsify(const std::string& input, const std::string& features,
                 const std::string& method, const std::string& config_arg,
                 const std::string& output, std::uint64_t seed,
                 const std::string& checkpoint) {
  std::vector<std::int64_t> id_map;
  Graph g = load_graph(input, features, "", &id_map);
  if (!id_map.empty()) write_remap_table(output + ".remap", id_map);

  if (method == "mog") {
    MogState state;
    if (!checkpoint.empty()) {
      std::vector<double> cache;
      state = read_checkpoint(checkpoint, &cache);
      if (cache.size() == g.n_edges()) g.set_grad_cache(std::move(cache));
    } else {
      TrainConfig cfg = parse_train_config_text(config_text_from_arg(config_arg));
      cfg.seed = seed;
      if (!g.has_features())
        throw DataError("mog sparsify requires --features (the router reads them)");
      std::size_t classes = cfg.classes ? cfg.classes : 2;
      state = init_state(cfg, g.features().cols(), classes);
    }
    set_thread_count(state.cfg.threads);
    const SparsifyReport report = mog_sparsify(state, g);
    write_edge_list(output, report.sparse);
    write_sidecar(output, report, state.cfg);
    std::cout << "kept " << report.sparse.n_edges() << "/" << g.n_edges()
              << " edges (achieved sparsity " << format_double(report.achieved_sparsity)
              << ")\n";
    return kExitOk;
  }

  const BaselineKind kind = baseline_from_name(method);
  const BaselineConfig cfg = parse_baseline_config(config_text_from_arg(config_arg), kind, seed);
  const Graph sparse = baseline_sparsify(cfg, g);
  write_edge_list(output, sparse);
  std::cout << "kept " << sparse.n_edges() << "/" << g.n_edges() << " edges (achieved sparsity "
            << format_double(1.0 - static_cast<double>(sparse.n_edges()) /
                                       static_cast<double>(g.n_edges()))
            << ")\n";
  return kExitOk;
}

int cmd_train(const std::string& config_arg, const std::string& input,
              const std::string& features, const std::string& labels,
              const std::string& out_dir) {
  const TrainConfig cfg = parse_train_config_text(config_text_from_arg(config_arg));
  Graph g = load_graph(input, features, labels);
  if (!g.has_labels()) throw DataError("train requires --labels");
  std::filesystem::create_directories(out_dir);

  Trainer trainer(g, cfg);
  std::ofstream metrics(out_dir + "/metrics.txt");
  metrics << metrics_header() << '\n';
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const EpochMetrics m = trainer.run_epoch();
    metrics << metrics_row(m) << '\n';
  }
  metrics.close();

  const std::vector<double> cache(g.grad_cache().begin(), g.grad_cache().end());
  write_checkpoint(out_dir + "/checkpoint.mog", trainer.state(),
                   g.grad_cache_valid() ? &cache : nullptr);
  write_bank(out_dir + "/experts.mog", trainer.state().bank);
  const SparsifyReport report = trainer.sparsify_only();
  write_edge_list(out_dir + "/sparse.el", report.sparse);
  write_sidecar(out_dir + "/sparse.el", report, cfg);
  std::cout << "trained " << cfg.epochs << " epochs; achieved sparsity "
            << format_double(report.achieved_sparsity) << "\n";
  return kExitOk;
}

int cmd_bench(const std::string& input, const std::string& grid_arg, std::size_t width,
              std::size_t repeats, std::uint64_t seed, const std::string& out_path) {
  Graph g = load_graph(input);
  std::vector<double> grid;
  std::stringstream ss(grid_arg);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) grid.push_back(std::stod(tok));
  }
  if (grid.empty()) throw DataError("bench: empty grid");
  const BenchReport report = bench_speedup(g, grid, width, repeats, seed);
  const std::string text = report.to_text();
  std::cout << text;
  if (!out_path.empty()) write_text_file(out_path, text);
  return kExitOk;
}

int cmd_eval(const std::string& graph_path, const std::string& sparse_path,
             const std::string& report_path, const std::string& features,
             const std::string& labels, const std::string& checkpoint, std::uint64_t seed) {
  Graph g = load_graph(graph_path, features, labels);
  std::ostringstream report;

  // per-edge priors table
  {
    std::ofstream priors(report_path + ".priors.tsv");
    priors << "edge\tu\tv\tdegree\tjaccard\ter_approx\tgrad_magnitude\n";
    for (std::size_t e = 0; e < g.n_edges(); ++e) {
      const auto ends = g.edge_ends(static_cast<EdgeId>(e));
      priors << e << '\t' << ends[0] << '\t' << ends[1] << '\t'
             << format_double(degree_prior(g, static_cast<EdgeId>(e))) << '\t'
             << format_double(jaccard_prior(g, static_cast<EdgeId>(e))) << '\t'
             << format_double(er_approx(g, static_cast<EdgeId>(e))) << '\t'
             << format_double(grad_magnitude_prior(g, static_cast<EdgeId>(e))) << '\n';
    }
    report << "priors: " << report_path << ".priors.tsv (" << g.n_edges() << " edges)\n";
    if (!g.grad_cache_valid())
      report << "note: gradient-magnitude prior is stale (no backward pass recorded)\n";
  }

  Graph sparse;
  bool have_sparse = false;
  if (!sparse_path.empty()) {
    sparse = load_graph(sparse_path, features, labels);
    have_sparse = true;
    if (sparse.n_nodes() != g.n_nodes())
      throw DataError("eval: node counts of --graph and --sparse-graph differ");
    report << "sparsity: kept " << sparse.n_edges() << "/" << g.n_edges() << " edges, removed "
           << format_double(1.0 - static_cast<double>(sparse.n_edges()) /
                                      static_cast<double>(g.n_edges()))
           << "\n";
  }

  // gate table needs features (and a checkpoint when available)
  if (g.has_features()) {
    MogState state;
    if (!checkpoint.empty()) {
      state = read_checkpoint(checkpoint);
    } else {
      TrainConfig cfg;
      cfg.seed = seed;
      state = init_state(cfg, g.features().cols(), 2);
      report << "note: gate table uses a seed-initialized router (no --checkpoint given)\n";
    }
    if (state.router.feat_dim() == g.features().cols()) {
      std::ofstream gates(report_path + ".gates.tsv");
      gates << "node\texperts\tweights\n";
      RngStream rng(state.cfg.seed, 0);
      for (std::size_t v = 0; v < g.n_nodes(); ++v) {
        const auto scores =
            gate_scores(state.router, g.features().row(v), false, rng, nullptr);
        const auto gd = select_topk(scores, state.cfg.k, static_cast<NodeId>(v));
        gates << v << '\t';
        for (std::size_t i = 0; i < gd.experts.size(); ++i)
          gates << (i ? "," : "") << gd.experts[i];
        gates << '\t';
        for (std::size_t i = 0; i < gd.weights.size(); ++i)
          gates << (i ? "," : "") << format_double(gd.weights[i]);
        gates << '\n';
      }
      report << "gates: " << report_path << ".gates.tsv\n";
    } else {
      report << "note: checkpoint feature width does not match the graph; gate table skipped\n";
    }
  } else {
    report << "note: no --features given; gate table skipped\n";
  }

  // downstream accuracy via a fresh GNN fit
  if (g.has_labels() && g.has_features() && have_sparse) {
    const auto fit = [&](const Graph& graph) {
      const Split split = make_split(graph.n_nodes(), 0.6, 0.2, seed);
      const std::size_t classes = static_cast<std::size_t>(std::max(graph.n_classes(), 2));
      std::vector<std::size_t> hidden{32};
      GnnParams params = make_gnn(GnnVariant::Gcn, graph.features().cols(), hidden, classes, seed);
      Optimizer opt;
      const SparseOp op = build_operator(graph, GnnVariant::Gcn);
      double loss = 0.0;
      for (int epoch = 0; epoch < 100; ++epoch)
        loss = train_step(params, opt, op, graph.features(), graph.labels(), split.train, 1e-2);
      GnnTape tape;
      const Matrix logits = gnn_forward(params, op, graph.features(), tape);
      (void)loss;
      return accuracy(logits, graph.labels(), split.test);
    };
    const double acc_dense = fit(g);
    const double acc_sparse = fit(sparse);
    report << "downstream test accuracy: dense " << format_double(acc_dense) << ", sparse "
           << format_double(acc_sparse) << " (fresh gcn fit, 100 epochs)\n";
  }

  write_text_file(report_path, report.str());
  std::cout << report.str();
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixture-of-Graphs sparsification workbench"};
  app.require_subcommand(1);

  std::string input, features, labels, method = "mog", config_arg, output, checkpoint;
  std::string out_dir = "out", grid = "0,0.3,0.5,0.7", report_path = "report.txt";
  std::string sparse_path;
  std::uint64_t seed = 1;
  std::size_t width = 64, repeats = 20;

  auto* sp = app.add_subcommand("sparsify", "prune a graph");
  sp->add_option("--input", input, "edge list or MatrixMarket file")->required();
  sp->add_option("--features", features, "node feature table");
  sp->add_option("--method", method, "mog|random|gspar|local-degree|scan|er");
  sp->add_option("--config", config_arg, "JSON file or inline key=value[,key=value...]");
  sp->add_option("--output", output, "output edge list path")->required();
  sp->add_option("--seed", seed, "RNG seed");
  sp->add_option("--checkpoint", checkpoint, "trained MoG checkpoint");

  auto* tr = app.add_subcommand("train", "train MoG end to end");
  tr->add_option("--config", config_arg, "JSON file or inline key=value[,...]");
  tr->add_option("--input", input, "edge list or MatrixMarket file")->required();
  tr->add_option("--features", features, "node feature table")->required();
  tr->add_option("--labels", labels, "node label table")->required();
  tr->add_option("--out-dir", out_dir, "output directory");

  auto* be = app.add_subcommand("bench", "SpMM timing harness");
  be->add_option("--input", input, "edge list or MatrixMarket file")->required();
  be->add_option("--grid", grid, "comma-separated sparsity grid");
  be->add_option("--width", width, "dense feature width");
  be->add_option("--repeats", repeats, "timed repeats (>= 10)");
  be->add_option("--seed", seed, "RNG seed");
  be->add_option("--output", output, "also write the report here");

  auto* ev = app.add_subcommand("eval", "inspect graphs and sparsification results");
  ev->add_option("--graph", input, "original graph")->required();
  ev->add_option("--sparse-graph", sparse_path, "sparsified graph");
  ev->add_option("--report", report_path, "report file")->required();
  ev->add_option("--features", features, "node feature table");
  ev->add_option("--labels", labels, "node label table");
  ev->add_option("--checkpoint", checkpoint, "trained MoG checkpoint");
  ev->add_option("--seed", seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e); // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (sp->parsed()) return cmd_sparsify(input, features, method, config_arg, output, seed,
                                          checkpoint);
    if (tr->parsed()) return cmd_train(config_arg, input, features, labels, out_dir);
    if (be->parsed()) return cmd_bench(input, grid, width, repeats, seed, output);
    if (ev->parsed())
      return cmd_eval(input, sparse_path, report_path, features, labels, checkpoint, seed);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

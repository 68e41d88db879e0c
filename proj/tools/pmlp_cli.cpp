// Command-line front end: train, sweep, ntk, extrapolate, bench.
//
// Exit codes: 0 ok, 2 configuration error, 3 numerical failure (e.g. a
// kernel matrix that does not factor), 4 non-finite probe prediction.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "pmlp/experiments.hpp"

namespace {

using namespace pmlp;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitOverflow = 4;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(detail::parse_double(item, "--t-grid"));
  return out;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream os(path);
  if (!os) fail(ErrorKind::SchemaError, "cannot write " + path);
  os << text;
}

// Flags shared by train and sweep.
struct RunFlags {
  RunConfig cfg;
  std::string activation = "relu";
  std::string scheme = "SYM";
  double alpha = -1.0;
  std::size_t patience = 50;

  void attach(CLI::App* app) {
    app->add_option("--dataset", cfg.dataset, "csbm:<opts>, a dataset.json path, or a name under $PMLP_DATA_DIR")
        ->capture_default_str();
    app->add_option("--layers", cfg.layers, "feed-forward layers")->capture_default_str();
    app->add_option("--hidden", cfg.hidden, "hidden width")->capture_default_str();
    app->add_option("--num-mp", cfg.num_mp, "MP steps for SGC/APPNP placements")->capture_default_str();
    app->add_option("--activation", activation, "relu, tanh, cos, elu")->capture_default_str();
    app->add_option("--scheme", scheme, "SYM, NO_LOOP, RW, DIFF")->capture_default_str();
    app->add_option("--alpha", alpha, "residual weight in [0,1] (model default when omitted)");
    app->add_option("--seed", cfg.seed)->capture_default_str();
    app->add_option("--epochs", cfg.epochs)->capture_default_str();
    app->add_option("--lr", cfg.learning_rate)->capture_default_str();
    app->add_option("--dropout", cfg.dropout)->capture_default_str();
    app->add_option("--weight-decay", cfg.weight_decay)->capture_default_str();
    app->add_option("--patience", patience, "early-stopping patience in epochs, 0 disables")->capture_default_str();
  }

  RunConfig resolve() {
    cfg.activation = parse_activation(activation);
    cfg.scheme = parse_scheme(scheme);
    if (alpha >= 0.0) cfg.alpha = alpha;
    if (patience == 0) cfg.patience.reset();
    else cfg.patience = patience;
    return cfg;
  }
};

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::FactorizationError: return kExitNumerical;
    case ErrorKind::NumericalOverflow: return kExitOverflow;
    default: return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PMLP experiments: MLPs trained graph-free, message passing added at inference"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "train one model and evaluate it on the test ids");
  RunFlags train_flags;
  train_flags.attach(train_cmd);
  train_cmd->add_option("--model", train_flags.cfg.model, "model name, e.g. MLP, PMLP_GCN, GCN")
      ->capture_default_str();
  std::string train_out;
  train_cmd->add_option("--out", train_out, "RunResult JSON path (stdout when omitted)");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "cross product of models x values x seeds as long-format CSV");
  RunFlags sweep_flags;
  sweep_flags.attach(sweep_cmd);
  std::string sweep_axis, sweep_values, sweep_models = "MLP,PMLP_GCN,GCN", sweep_out;
  std::size_t sweep_seeds = 1, sweep_parallel = 1;
  sweep_cmd->add_option("--sweep", sweep_axis, "layers, hidden, activation, scheme, split_fraction, sparsify, noise")
      ->required();
  sweep_cmd->add_option("--values", sweep_values, "comma separated values")->required();
  sweep_cmd->add_option("--models", sweep_models, "comma separated model names")->capture_default_str();
  sweep_cmd->add_option("--seeds", sweep_seeds, "seeds per cell")->capture_default_str();
  sweep_cmd->add_option("--parallel", sweep_parallel, "concurrent cells")->capture_default_str();
  sweep_cmd->add_option("--out", sweep_out, "CSV path (stdout when omitted)");

  // ntk
  auto* ntk_cmd = app.add_subcommand("ntk", "infinite-width kernel regression on one-hot labels");
  std::string ntk_dataset = "csbm:", ntk_mode = "pmlp-cross", ntk_ridge = "auto", ntk_out;
  std::uint64_t ntk_seed = 0;
  ntk_cmd->add_option("--dataset", ntk_dataset)->capture_default_str();
  ntk_cmd->add_option("--mode", ntk_mode, "mlp, gntk, pmlp-cross")->capture_default_str();
  ntk_cmd->add_option("--ridge", ntk_ridge, "ridge value or 'auto' (1e-8 * mean diagonal)")->capture_default_str();
  ntk_cmd->add_option("--seed", ntk_seed, "seed for generated datasets")->capture_default_str();
  ntk_cmd->add_option("--out", ntk_out, "output prefix: <out>.kernel, <out>.kernel.json, <out>.predictions.csv, <out>.json")->required();

  // extrapolate
  auto* ext_cmd = app.add_subcommand("extrapolate", "directional slope probes of a wide trained network");
  std::vector<std::string> ext_wirings{"isolated", "star:2", "complete:3"};
  std::string ext_grid = "10,20,50,100", ext_out;
  SurrogateConfig sur;
  double ext_alpha = 0.5, ext_dt = 1.0;
  std::size_t ext_seeds = 8;
  std::uint64_t ext_seed0 = 0;
  ext_cmd->add_option("--wiring", ext_wirings, "isolated, star:k, complete:k (repeatable)")->capture_default_str();
  ext_cmd->add_option("--alpha", ext_alpha, "cosine between neighbor features and the probe direction")
      ->capture_default_str();
  ext_cmd->add_option("--width", sur.width)->capture_default_str();
  ext_cmd->add_option("--t-grid", ext_grid, "comma separated increasing t values")->capture_default_str();
  ext_cmd->add_option("--delta-t", ext_dt)->capture_default_str();
  ext_cmd->add_option("--seeds", ext_seeds)->capture_default_str();
  ext_cmd->add_option("--first-seed", ext_seed0)->capture_default_str();
  ext_cmd->add_option("--dim", sur.dim)->capture_default_str();
  ext_cmd->add_option("--train-size", sur.num_train)->capture_default_str();
  ext_cmd->add_option("--epochs", sur.epochs)->capture_default_str();
  ext_cmd->add_option("--lr", sur.learning_rate)->capture_default_str();
  ext_cmd->add_option("--out", ext_out, "JSON path (stdout when omitted)");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "median per-step training time per model");
  BenchConfig bench;
  std::string bench_models = "MLP,GCN", bench_out;
  bench_cmd->add_option("--n", bench.n)->capture_default_str();
  bench_cmd->add_option("--d", bench.d)->capture_default_str();
  bench_cmd->add_option("--hidden", bench.hidden)->capture_default_str();
  bench_cmd->add_option("--layers", bench.layers)->capture_default_str();
  bench_cmd->add_option("--avg-degree", bench.avg_degree)->capture_default_str();
  bench_cmd->add_option("--models", bench_models)->capture_default_str();
  bench_cmd->add_option("--steps", bench.steps, "measured steps after the warm-up")->capture_default_str();
  bench_cmd->add_option("--warmup", bench.warmup)->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed)->capture_default_str();
  bench_cmd->add_option("--out", bench_out, "JSON path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train_cmd) {
      const RunConfig cfg = train_flags.resolve();
      parse_model(cfg.model);
      const Dataset data = resolve_dataset(cfg.dataset, cfg.seed);
      emit(train_out, run_experiment(data, cfg).to_json().dump(2) + "\n");
    } else if (*sweep_cmd) {
      SweepSpec spec;
      spec.axis = parse_sweep_axis(sweep_axis);
      spec.values = split_list(sweep_values);
      spec.models = split_list(sweep_models);
      spec.seeds = sweep_seeds;
      spec.parallel = sweep_parallel;
      spec.base = sweep_flags.resolve();
      std::ostringstream os;
      write_sweep_csv(os, run_sweep(spec));
      emit(sweep_out, os.str());
    } else if (*ntk_cmd) {
      const Dataset data = resolve_dataset(ntk_dataset, ntk_seed);
      const Ridge ridge =
          ntk_ridge == "auto" ? Ridge::automatic() : Ridge::fixed(detail::parse_double(ntk_ridge, "--ridge"));
      const NtkReport rep = run_ntk(data, parse_ntk_mode(ntk_mode), ridge);
      {
        std::ofstream os(ntk_out + ".kernel");
        if (!os) fail(ErrorKind::SchemaError, "cannot write " + ntk_out + ".kernel");
        write_matrix(os, rep.train_kernel.k);
      }
      write_json_file(ntk_out + ".kernel.json", Json{{"kind", to_string(rep.train_kernel.kind)},
                                                     {"node_ids", rep.train_kernel.node_ids},
                                                     {"ridge", rep.ridge},
                                                     {"experimental", rep.train_kernel.experimental}});
      {
        std::ofstream os(ntk_out + ".predictions.csv");
        os << "node_id";
        for (std::size_t k = 0; k < rep.predictions.cols(); ++k) os << ",class_" << k;
        os << '\n';
        for (std::size_t r = 0; r < rep.test_ids.size(); ++r) {
          os << rep.test_ids[r];
          for (std::size_t k = 0; k < rep.predictions.cols(); ++k)
            os << ',' << detail::format_double(rep.predictions(r, k));
          os << '\n';
        }
      }
      const Json summary{{"mode", to_string(rep.mode)},   {"dataset", data.meta.name},
                         {"num_train", rep.train_kernel.size()}, {"num_test", rep.test_ids.size()},
                         {"ridge", rep.ridge},             {"test_mse", rep.test_mse},
                         {"accuracy", rep.accuracy},       {"revision", PMLP_REVISION}};
      write_json_file(ntk_out + ".json", summary);
      std::cout << summary.dump(2) << '\n';
    } else if (*ext_cmd) {
      ProbeSpec base;
      base.alpha = ext_alpha;
      base.t_grid = parse_grid(ext_grid);
      base.delta_t = ext_dt;
      std::vector<ProbeSpec> specs;
      for (const auto& w : ext_wirings) {
        ProbeSpec s = base;
        s.wiring = Wiring::parse(w);
        specs.push_back(s);
      }
      Json out = Json::array();
      for (std::size_t k = 0; k < ext_seeds; ++k) {
        const std::uint64_t seed = ext_seed0 + k;
        const Network net = train_surrogate(sur, seed);
        for (const auto& s : specs)
          out.push_back(run_probe(net, s, seed, s.wiring.name() + "/seed" + std::to_string(seed)).to_json());
      }
      emit(ext_out, out.dump(2) + "\n");
    } else if (*bench_cmd) {
      bench.models = split_list(bench_models);
      for (const auto& m : bench.models) parse_model(m);
      emit(bench_out, run_bench(bench).to_json().dump(2) + "\n");
    }
  } catch (const Error& e) {
    std::cerr << "pmlp: " << to_string(e.kind()) << ": " << e.what();
    if (e.kind() == ErrorKind::FactorizationError) std::cerr << " (try a larger --ridge)";
    std::cerr << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "pmlp: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pmlp/dataset.hpp"
#include "pmlp/extrapolation.hpp"
#include "pmlp/gntk.hpp"
#include "pmlp/models.hpp"

#ifndef PMLP_REVISION
#define PMLP_REVISION "unknown"
#endif

namespace pmlp {

using Json = nlohmann::json;

inline constexpr int kRunResultSchema = 1;

// ---------------------------------------------------------------------------
// Single runs

struct RunConfig {
  std::string dataset = "csbm:";
  std::string model = "PMLP_GCN";
  std::size_t layers = 2;
  std::size_t hidden = 64;
  std::size_t num_mp = 2;
  Activation activation = Activation::Relu;
  Scheme scheme = Scheme::Sym;
  std::optional<double> alpha;
  std::uint64_t seed = 0;
  std::size_t epochs = 200;
  double learning_rate = 0.01;
  double dropout = 0.5;
  double weight_decay = 5e-4;
  std::optional<std::size_t> patience = 50;

  Json to_json() const {
    Json j{{"dataset", dataset},
           {"model", model},
           {"layers", layers},
           {"hidden", hidden},
           {"num_mp", num_mp},
           {"activation", to_string(activation)},
           {"scheme", to_string(scheme)},
           {"alpha", alpha ? Json(*alpha) : Json(nullptr)},
           {"seed", seed},
           {"epochs", epochs},
           {"lr", learning_rate},
           {"dropout", dropout},
           {"weight_decay", weight_decay},
           {"patience", patience ? Json(*patience) : Json(nullptr)}};
    return j;
  }

  static RunConfig from_json(const Json& j) {
    RunConfig c;
    c.dataset = j.at("dataset").get<std::string>();
    c.model = j.at("model").get<std::string>();
    c.layers = j.at("layers").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::size_t>();
    c.num_mp = j.at("num_mp").get<std::size_t>();
    c.activation = parse_activation(j.at("activation").get<std::string>());
    c.scheme = parse_scheme(j.at("scheme").get<std::string>());
    if (!j.at("alpha").is_null()) c.alpha = j["alpha"].get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.learning_rate = j.at("lr").get<double>();
    c.dropout = j.at("dropout").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    if (j.at("patience").is_null()) c.patience.reset();
    else c.patience = j["patience"].get<std::size_t>();
    return c;
  }

  TrainConfig train_config() const {
    TrainConfig t;
    t.epochs = epochs;
    t.learning_rate = learning_rate;
    t.dropout_rate = dropout;
    t.weight_decay = weight_decay;
    t.seed = seed;
    t.early_stop_patience = patience;
    return t;
  }
};

struct RunResult {
  std::string model_name;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  std::optional<double> train_loss_final;  // empty when no epoch ran
  double wallclock_train_ms = 0.0;
  double wallclock_infer_ms = 0.0;
  RunConfig config;
  std::string revision = PMLP_REVISION;

  Json to_json() const {
    return Json{{"schema", kRunResultSchema},
                {"model_name", model_name},
                {"seed", seed},
                {"accuracy", accuracy},
                {"train_loss_final", train_loss_final ? Json(*train_loss_final) : Json(nullptr)},
                {"wallclock_train_ms", wallclock_train_ms},
                {"wallclock_infer_ms", wallclock_infer_ms},
                {"config", config.to_json()},
                {"revision", revision}};
  }

  static RunResult from_json(const Json& j) {
    try {
      if (j.at("schema").get<int>() != kRunResultSchema)
        fail(ErrorKind::SchemaError, "unsupported RunResult schema " + j.at("schema").dump());
      RunResult r;
      r.model_name = j.at("model_name").get<std::string>();
      r.seed = j.at("seed").get<std::uint64_t>();
      r.accuracy = j.at("accuracy").get<double>();
      if (!j.at("train_loss_final").is_null()) r.train_loss_final = j["train_loss_final"].get<double>();
      r.wallclock_train_ms = j.at("wallclock_train_ms").get<double>();
      r.wallclock_infer_ms = j.at("wallclock_infer_ms").get<double>();
      r.config = RunConfig::from_json(j.at("config"));
      r.revision = j.at("revision").get<std::string>();
      return r;
    } catch (const Json::exception& e) {
      fail(ErrorKind::SchemaError, std::string("RunResult: ") + e.what());
    }
  }

  // Payload without the wallclock fields, for reproducibility comparisons.
  Json payload() const {
    Json j = to_json();
    j.erase("wallclock_train_ms");
    j.erase("wallclock_infer_ms");
    return j;
  }
};

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream os(path);
  require(static_cast<bool>(os), ErrorKind::SchemaError, "cannot write " + path);
  os << j.dump(2) << '\n';
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::SchemaError, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    fail(ErrorKind::SchemaError, path + ": " + e.what());
  }
}

/// "csbm:<options>" generates a CSBM (its seed defaults to `run_seed`), a
/// path to a dataset.json loads that manifest, anything else is looked up
/// as a dataset name under $PMLP_DATA_DIR.
inline Dataset resolve_dataset(const std::string& spec, std::uint64_t run_seed) {
  if (spec.rfind("csbm:", 0) == 0 || spec == "csbm") {
    const std::string opts = spec.size() > 5 ? spec.substr(5) : "";
    auto p = CsbmParams::parse(opts);
    if (opts.find("seed=") == std::string::npos) p.seed = run_seed;
    return csbm_generate(p);
  }
  if (std::filesystem::exists(spec)) {
    if (std::filesystem::is_directory(spec)) return load_manifest((std::filesystem::path(spec) / "dataset.json").string());
    return load_manifest(spec);
  }
  if (auto found = find_dataset(spec)) return load_manifest(*found);
  fail(ErrorKind::SchemaError, "dataset '" + spec + "' not found (not csbm:, not a path, not under $PMLP_DATA_DIR)");
}

inline double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

/// Trains cfg.model on `data` and evaluates it on the test ids.
inline RunResult run_experiment(const Dataset& data, const RunConfig& cfg) {
  NetConfig nc;
  nc.in_dim = data.x.cols();
  nc.out_dim = data.num_classes;
  nc.hidden = cfg.hidden;
  nc.num_layers = cfg.layers;
  nc.activation = cfg.activation;
  nc.dropout_rate = cfg.dropout;
  const ModelSpec spec = make_model(cfg.model, nc, cfg.num_mp, cfg.scheme, cfg.alpha);
  const Targets targets = Targets::classes(data.labels, data.num_classes);

  RunResult r;
  r.model_name = cfg.model;
  r.seed = cfg.seed;
  r.config = cfg;
  auto t0 = std::chrono::steady_clock::now();
  const TrainResult tr = train_model(spec, cfg.train_config(), data.x, targets, data.split);
  r.wallclock_train_ms = elapsed_ms(t0);
  if (!tr.history.train_loss.empty()) r.train_loss_final = tr.history.train_loss.back();
  t0 = std::chrono::steady_clock::now();
  const Evaluation ev = evaluate(spec, tr.net, data.x, data.labels, data.split);
  r.wallclock_infer_ms = elapsed_ms(t0);
  r.accuracy = ev.accuracy;
  return r;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepAxis { Layers, Hidden, Activation, Scheme, SplitFraction, Sparsify, Noise };

inline const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::Layers: return "layers";
    case SweepAxis::Hidden: return "hidden";
    case SweepAxis::Activation: return "activation";
    case SweepAxis::Scheme: return "scheme";
    case SweepAxis::SplitFraction: return "split_fraction";
    case SweepAxis::Sparsify: return "sparsify";
    case SweepAxis::Noise: return "noise";
  }
  return "?";
}

inline SweepAxis parse_sweep_axis(const std::string& s) {
  for (auto a : {SweepAxis::Layers, SweepAxis::Hidden, SweepAxis::Activation, SweepAxis::Scheme,
                 SweepAxis::SplitFraction, SweepAxis::Sparsify, SweepAxis::Noise})
    if (s == to_string(a)) return a;
  fail(ErrorKind::ParseError, "unknown sweep axis '" + s + "'");
}

struct SweepSpec {
  SweepAxis axis = SweepAxis::Layers;
  std::vector<std::string> values;
  std::vector<std::string> models;
  std::size_t seeds = 1;
  RunConfig base;
  std::size_t parallel = 1;
};

struct SweepRow {
  std::string model;
  std::string axis;
  std::string value;
  std::uint64_t seed = 0;
  std::string status = "OK";  // OK or FAILED
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double train_loss_final = std::numeric_limits<double>::quiet_NaN();
  double wallclock_train_ms = 0.0;
  double wallclock_infer_ms = 0.0;
  std::string error;
};

// Seed for structural perturbations / re-splits of one sweep cell.
inline std::uint64_t cell_stream_seed(std::uint64_t seed, SweepAxis axis) {
  std::uint64_t s = seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(axis) + 1;
  return splitmix64(s);
}

/// One (model, value, seed) cell: applies the swept value to the base config
/// or dataset, then runs. Failures become FAILED rows.
inline SweepRow run_sweep_cell(const SweepSpec& spec, const std::string& model, const std::string& value,
                               std::uint64_t seed) {
  SweepRow row;
  row.model = model;
  row.axis = to_string(spec.axis);
  row.value = value;
  row.seed = seed;
  try {
    RunConfig cfg = spec.base;
    cfg.model = model;
    cfg.seed = seed;
    auto num = [&](const std::string& v) { return detail::parse_double(v, std::string("sweep value for ") + row.axis); };
    switch (spec.axis) {
      case SweepAxis::Layers: cfg.layers = static_cast<std::size_t>(num(value)); break;
      case SweepAxis::Hidden: cfg.hidden = static_cast<std::size_t>(num(value)); break;
      case SweepAxis::Activation: cfg.activation = parse_activation(value); break;
      case SweepAxis::Scheme: cfg.scheme = parse_scheme(value); break;
      default: break;
    }
    Dataset data = resolve_dataset(cfg.dataset, seed);
    const std::uint64_t stream = cell_stream_seed(seed, spec.axis);
    switch (spec.axis) {
      case SweepAxis::SplitFraction: data = labeled_fraction_split(data, num(value), stream); break;
      case SweepAxis::Sparsify: data = with_graph(data, perturb(data.graph, Perturbation::Sparsify, num(value), stream)); break;
      case SweepAxis::Noise: data = with_graph(data, perturb(data.graph, Perturbation::AddNoise, num(value), stream)); break;
      default: break;
    }
    const RunResult r = run_experiment(data, cfg);
    row.accuracy = r.accuracy;
    row.train_loss_final = r.train_loss_final.value_or(std::numeric_limits<double>::quiet_NaN());
    row.wallclock_train_ms = r.wallclock_train_ms;
    row.wallclock_infer_ms = r.wallclock_infer_ms;
  } catch (const std::exception& e) {
    row.status = "FAILED";
    row.error = e.what();
  }
  return row;
}

/// Cross product models x values x seeds (seeds base.seed .. base.seed+K-1).
/// With parallel > 1 cells run on worker threads; rows always come back in
/// (model, value, seed) order.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  require(!spec.values.empty(), ErrorKind::ParseError, "sweep needs at least one value");
  require(!spec.models.empty(), ErrorKind::ParseError, "sweep needs at least one model");
  require(spec.seeds >= 1, ErrorKind::ParseError, "sweep needs at least one seed");
  for (const auto& m : spec.models) parse_model(m);

  struct Cell {
    std::string model, value;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const auto& m : spec.models)
    for (const auto& v : spec.values)
      for (std::size_t k = 0; k < spec.seeds; ++k) cells.push_back({m, v, spec.base.seed + k});

  std::vector<SweepRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < cells.size();)
      rows[i] = run_sweep_cell(spec, cells[i].model, cells[i].value, cells[i].seed);
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(spec.parallel, cells.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return rows;
}

inline constexpr const char* kSweepCsvHeader =
    "model,axis,value,seed,status,accuracy,train_loss_final,wallclock_train_ms,wallclock_infer_ms,error";

namespace detail {
inline std::string csv_safe(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  return s;
}
inline std::string csv_num(double v) { return std::isnan(v) ? "" : format_double(v); }
}  // namespace detail

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << kSweepCsvHeader << '\n';
  for (const auto& r : rows)
    os << detail::csv_safe(r.model) << ',' << r.axis << ',' << detail::csv_safe(r.value) << ',' << r.seed << ','
       << r.status << ',' << detail::csv_num(r.accuracy) << ',' << detail::csv_num(r.train_loss_final) << ','
       << detail::csv_num(r.wallclock_train_ms) << ',' << detail::csv_num(r.wallclock_infer_ms) << ','
       << detail::csv_safe(r.error) << '\n';
}

inline std::vector<SweepRow> read_sweep_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kSweepCsvHeader) fail(ErrorKind::SchemaError, "sweep CSV: bad header");
  std::vector<SweepRow> rows;
  std::size_t lineno = 1;
  auto num = [&](std::string_view s) {
    return s.empty() ? std::numeric_limits<double>::quiet_NaN()
                     : detail::parse_double(s, "sweep CSV line " + std::to_string(lineno));
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::blank(line)) continue;
    const auto c = detail::split_commas(line);
    if (c.size() != 10) fail(ErrorKind::SchemaError, "sweep CSV line " + std::to_string(lineno) + ": expected 10 fields");
    SweepRow r;
    r.model = c[0];
    r.axis = c[1];
    r.value = c[2];
    r.seed = static_cast<std::uint64_t>(detail::parse_int(c[3], "sweep CSV seed"));
    r.status = c[4];
    r.accuracy = num(c[5]);
    r.train_loss_final = num(c[6]);
    r.wallclock_train_ms = num(c[7]);
    r.wallclock_infer_ms = num(c[8]);
    r.error = c[9];
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Per-step training time

struct BenchConfig {
  std::size_t n = 20000;
  std::size_t d = 128;
  std::size_t hidden = 64;
  std::size_t layers = 2;
  std::size_t num_classes = 40;
  double avg_degree = 13.7;  // ogbn-arxiv: 2 * 1,166,243 / 169,343
  std::vector<std::string> models{"MLP", "GCN"};
  std::size_t steps = 10;
  std::size_t warmup = 3;
  std::uint64_t seed = 0;
};

struct BenchEntry {
  std::string model;
  double median_ms = 0.0;
  std::vector<double> step_ms;  // measured steps, warm-ups excluded
};

struct BenchReport {
  BenchConfig config;
  std::size_t num_edges = 0;
  std::vector<BenchEntry> entries;

  // Median step time of entry i divided by that of the first MLP entry.
  std::optional<double> ratio_to_mlp(std::size_t i) const {
    for (const auto& e : entries)
      if (e.model == "MLP" && e.median_ms > 0.0) return entries.at(i).median_ms / e.median_ms;
    return std::nullopt;
  }

  Json to_json() const {
    Json models = Json::array();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto r = ratio_to_mlp(i);
      models.push_back({{"model", entries[i].model},
                        {"median_step_ms", entries[i].median_ms},
                        {"step_ms", entries[i].step_ms},
                        {"ratio_to_mlp", r ? Json(*r) : Json(nullptr)}});
    }
    return Json{{"n", config.n},           {"d", config.d},         {"hidden", config.hidden},
                {"layers", config.layers}, {"steps", config.steps}, {"warmup", config.warmup},
                {"num_edges", num_edges},  {"models", models},      {"blas", blas_in_use()},
                {"revision", PMLP_REVISION}};
  }
};

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Full-batch training steps (forward, backward, Adam) over all n nodes of a
/// label-independent random graph with the requested average degree. Each
/// model uses its training placement, so PMLP variants time as MLPs.
inline BenchReport run_bench(const BenchConfig& cfg) {
  require(cfg.n >= 2 && cfg.steps >= 1, ErrorKind::DimensionError, "bench needs n >= 2 and steps >= 1");
  CsbmParams p;
  p.n = cfg.n;
  p.num_classes = cfg.num_classes;
  p.feature_dim = cfg.d;
  p.intra_p = p.inter_q = std::min(1.0, cfg.avg_degree / static_cast<double>(cfg.n - 1));
  p.feature_signal = 1.0;
  p.seed = cfg.seed;
  p.train_per_class = 0;
  p.valid_per_class = 0;
  const Dataset data = csbm_generate(p);
  const Targets y = Targets::classes(data.labels, cfg.num_classes);
  std::vector<NodeId> all(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) all[i] = static_cast<NodeId>(i);

  BenchReport report;
  report.config = cfg;
  report.num_edges = data.graph.num_edges();
  for (const auto& name : cfg.models) {
    NetConfig nc;
    nc.in_dim = cfg.d;
    nc.out_dim = cfg.num_classes;
    nc.hidden = cfg.hidden;
    nc.num_layers = cfg.layers;
    const ModelSpec spec = make_model(name, nc);
    std::optional<TransitionMatrix> t;
    if (spec.train_placement.needs_graph())
      t = transition_matrix(data.graph, spec.train_placement.scheme, spec.train_placement.diffusion_order);
    Rng rng(cfg.seed);
    Network net = Network::init(nc, rng);
    Rng dropout_rng = rng.derive(1);
    auto params = net.parameters();
    AdamState adam = AdamState::for_shapes(params);
    BenchEntry e;
    e.model = name;
    for (std::size_t s = 0; s < cfg.warmup + cfg.steps; ++s) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto fr = forward(net, data.x, t ? &*t : nullptr, spec.train_placement, true, &dropout_rng);
      const auto lg = loss_and_grad(net, fr.logits, fr.cache, y, all, LossKind::CrossEntropy, 5e-4);
      adam_step(adam, params, lg.grads.spans(), AdamParams{});
      const double ms = elapsed_ms(t0);
      if (s >= cfg.warmup) e.step_ms.push_back(ms);
    }
    e.median_ms = median(e.step_ms);
    report.entries.push_back(std::move(e));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Infinite-width kernel regression on a dataset

enum class NtkMode { Mlp, Gntk, PmlpCross };

inline const char* to_string(NtkMode m) {
  switch (m) {
    case NtkMode::Mlp: return "mlp";
    case NtkMode::Gntk: return "gntk";
    case NtkMode::PmlpCross: return "pmlp-cross";
  }
  return "?";
}

inline NtkMode parse_ntk_mode(const std::string& s) {
  for (auto m : {NtkMode::Mlp, NtkMode::Gntk, NtkMode::PmlpCross})
    if (s == to_string(m)) return m;
  fail(ErrorKind::ParseError, "unknown ntk mode '" + s + "' (mlp, gntk, pmlp-cross)");
}

struct NtkReport {
  NtkMode mode = NtkMode::Mlp;
  KernelMatrix train_kernel;
  double ridge = 0.0;
  std::vector<NodeId> test_ids;
  DenseMatrix predictions;  // test x classes
  double test_mse = 0.0;
  double accuracy = 0.0;
};

/// Kernel regression on one-hot label targets of the train nodes.
///   mlp         MLP NTK for fit and prediction
///   gntk        GNTK on the train graph for the fit, GNN cross kernel
///               (train graph vs full graph) for prediction
///   pmlp-cross  MLP NTK for the fit, PMLP cross kernel for prediction
inline NtkReport run_ntk(const Dataset& data, NtkMode mode, Ridge ridge) {
  const auto& split = data.split;
  require(!split.train_ids.empty(), ErrorKind::EmptyMask, "no train nodes");
  NtkReport rep;
  rep.mode = mode;
  rep.test_ids = split.test_ids;
  if (mode == NtkMode::Gntk) {
    rep.train_kernel = gntk_node(data.x, split.train_graph, MpPlacement::per_layer(Scheme::Rw), 2, split.train_ids);
  } else {
    rep.train_kernel = mlp_ntk(gather_rows(data.x, split.train_ids));
    rep.train_kernel.node_ids = split.train_ids;
  }
  const std::size_t c = std::max<std::size_t>(1, data.num_classes);
  const std::size_t m = split.train_ids.size();
  rep.predictions = DenseMatrix(split.test_ids.size(), c);
  std::vector<KernelRegressor> regs;
  for (std::size_t k = 0; k < c; ++k) {
    Vector y(m);
    for (std::size_t i = 0; i < m; ++i) y[i] = data.labels[split.train_ids[i]] == static_cast<int>(k) ? 1.0 : 0.0;
    regs.push_back(kernel_fit(rep.train_kernel, y, ridge));
  }
  rep.ridge = regs.front().ridge;
  double se = 0.0;
  std::size_t hit = 0;
  for (std::size_t r = 0; r < split.test_ids.size(); ++r) {
    const NodeId u = split.test_ids[r];
    Vector cross;
    switch (mode) {
      case NtkMode::Mlp: cross = cross_kernel_mlp(data.x, split.train_ids, u); break;
      case NtkMode::Gntk: cross = cross_kernel_gnn(data.x, split.train_graph, split.full_graph, split.train_ids, u); break;
      case NtkMode::PmlpCross: cross = cross_kernel_pmlp(data.x, split.full_graph, split.train_ids, u); break;
    }
    std::size_t best = 0;
    for (std::size_t k = 0; k < c; ++k) {
      const double p = kernel_predict(regs[k], cross);
      rep.predictions(r, k) = p;
      const double target = data.labels[u] == static_cast<int>(k) ? 1.0 : 0.0;
      se += (p - target) * (p - target);
      if (p > rep.predictions(r, best)) best = k;
    }
    if (static_cast<int>(best) == data.labels[u]) ++hit;
  }
  if (!split.test_ids.empty()) {
    rep.test_mse = se / static_cast<double>(split.test_ids.size() * c);
    rep.accuracy = static_cast<double>(hit) / static_cast<double>(split.test_ids.size());
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Extrapolation probes on a wide trained network

struct SurrogateConfig {
  std::size_t dim = 4;
  std::size_t num_train = 64;
  std::size_t width = 4096;
  std::size_t epochs = 300;
  double learning_rate = 1e-3;
};

/// Wide two-layer ReLU MLP fit with squared loss (no dropout, no weight
/// decay) to the scalar target y = x1 + sin(2 x2) + 0.5 |x3| on Gaussian
/// inputs. The training data depends only on `seed`.
inline Network train_surrogate(const SurrogateConfig& cfg, std::uint64_t seed) {
  require(cfg.dim >= 3, ErrorKind::DimensionError, "surrogate needs dim >= 3");
  Rng rng = Rng(seed).derive(11);
  DenseMatrix x(cfg.num_train, cfg.dim), y(cfg.num_train, 1);
  for (std::size_t i = 0; i < cfg.num_train; ++i) {
    for (double& v : x.row(i)) v = rng.normal();
    y(i, 0) = x(i, 0) + std::sin(2.0 * x(i, 1)) + 0.5 * std::abs(x(i, 2));
  }
  std::vector<NodeId> ids(cfg.num_train);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<NodeId>(i);
  const auto split = inductive_split(edgeless_graph(cfg.num_train), ids, {}, {});
  NetConfig nc;
  nc.in_dim = cfg.dim;
  nc.out_dim = 1;
  nc.hidden = cfg.width;
  nc.num_layers = 2;
  nc.dropout_rate = 0.0;
  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.learning_rate = cfg.learning_rate;
  tc.dropout_rate = 0.0;
  tc.weight_decay = 0.0;
  tc.loss = LossKind::Squared;
  tc.seed = seed;
  tc.early_stop_patience.reset();
  const Targets targets = Targets::values(y);
  return train(nc, tc, TrainData{x, targets, split}, MpPlacement::none(), MpPlacement::none()).net;
}

struct ProbeSpec {
  Wiring wiring;
  double alpha = 0.5;  // cosine between neighbor features and v
  std::vector<double> t_grid{10, 20, 50, 100};
  double delta_t = 1.0;
};

struct ProbeReport {
  std::string probe_id;
  std::uint64_t seed = 0;
  ProbeSpec spec;
  SlopeSeries series;
  std::vector<double> deviations;
  std::vector<double> bounds;
  double bound_constant = 0.0;  // max_t deviation / bound, reported only

  Json to_json() const {
    return Json{{"probe_id", probe_id},
                {"wiring", spec.wiring.name()},
                {"seed", seed},
                {"alpha_target", spec.alpha},
                {"t_grid", series.t_grid},
                {"delta_t", spec.delta_t},
                {"slopes", series.slopes},
                {"mlp_slopes", series.mlp_slopes},
                {"c_v_hat", series.c_v_hat},
                {"coeff_factor", series.coeff_factor},
                {"alpha_min", series.alpha_min},
                {"alpha_min_raw", series.alpha_min_raw},
                {"d_max", series.d_max},
                {"deviations", deviations},
                {"bounds", bounds},
                {"bound_constant", bound_constant}};
  }
};

// Probe direction v and a unit u orthogonal to it, drawn from `rng`.
inline std::pair<Vector, Vector> probe_directions(std::size_t dim, Rng& rng) {
  require(dim >= 2, ErrorKind::DimensionError, "probe needs dim >= 2");
  Vector v(dim), u(dim);
  auto unit = [](Vector& a) {
    const double n = norm2(a);
    for (double& e : a) e /= n;
  };
  do {
    for (double& e : v) e = rng.normal();
  } while (norm2(v) == 0.0);
  unit(v);
  double nu = 0.0;
  while (nu < 1e-6) {
    for (double& e : u) e = rng.normal();
    const double p = dot(u, v);
    for (std::size_t k = 0; k < dim; ++k) u[k] -= p * v[k];
    nu = norm2(u);
  }
  unit(u);
  return {v, u};
}

/// Slope probe of a trained network: MLP mode on the lone test node, PMLP
/// mode with per-layer random-walk MP on the wired probe graph. Directions
/// come from `direction_seed`.
inline ProbeReport run_probe(const Network& net, const ProbeSpec& spec, std::uint64_t direction_seed,
                             const std::string& probe_id) {
  Rng rng = Rng(direction_seed).derive(29);
  const auto [v, u] = probe_directions(net.in_dim(), rng);
  ExtrapolationProbe probe;
  probe.v = v;
  probe.t_grid = spec.t_grid;
  probe.delta_t = spec.delta_t;
  probe.wiring = spec.wiring;
  probe.neighbor_features = aligned_neighbor_features(v, u, spec.alpha, spec.wiring.num_neighbors());

  ProbeReport rep;
  rep.probe_id = probe_id;
  rep.seed = direction_seed;
  rep.spec = spec;
  rep.series = probe_slopes(network_predictor(net, false), network_predictor(net, true), probe);
  rep.deviations = deviation_series(rep.series);
  const Graph g = spec.wiring.graph();
  for (std::size_t k = 0; k < spec.t_grid.size(); ++k) {
    const double t = spec.t_grid[k];
    const double b = deviation_rate_bound(g, 0, probe.features_at(t), t).bound;
    rep.bounds.push_back(b);
    rep.bound_constant = std::max(rep.bound_constant, rep.deviations[k] / b);
  }
  return rep;
}

}  // namespace pmlp

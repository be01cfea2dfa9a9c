// vqtoken CLI: data synthesis, clip compression, benchmark harness, TokDense
// arithmetic and gradient checks.
//
// Exit codes: 0 success, 1 check/benchmark failure, 2 usage error,
// 3 data/format error.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vqtoken/block_check.hpp"
#include "vqtoken/checkpoint.hpp"
#include "vqtoken/dataset.hpp"
#include "vqtoken/errors.hpp"
#include "vqtoken/harness.hpp"
#include "vqtoken/metrics.hpp"
#include "vqtoken/parallel.hpp"
#include "vqtoken/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

std::string format4(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << std::fixed << v;
  return ss.str();
}

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) {
    throw vqtoken::ContractError("cannot open config file: " + path);
  }
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw vqtoken::FormatError(vqtoken::FormatError::Code::kCorrupt,
                               std::string("config: ") + e.what());
  }
  if (!cfg.is_object()) {
    throw vqtoken::FormatError(vqtoken::FormatError::Code::kCorrupt,
                               "config: expected a JSON object");
  }
  return cfg;
}

// Precedence: explicit flag > config file value > built-in default.
template <typename T>
void apply_config(const json& cfg, const char* key, const CLI::Option* opt, T& value) {
  if (opt != nullptr && opt->count() > 0) return;
  if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

vqtoken::GridDims parse_grid(const std::string& grid, std::uint32_t frames) {
  const auto x = grid.find('x');
  if (x == std::string::npos) {
    throw vqtoken::ContractError("--grid expects HxW, got '" + grid + "'");
  }
  int h = 0, w = 0;
  try {
    h = std::stoi(grid.substr(0, x));
    w = std::stoi(grid.substr(x + 1));
  } catch (const std::exception&) {
    throw vqtoken::ContractError("--grid expects HxW, got '" + grid + "'");
  }
  if (h <= 0 || w <= 0 || frames == 0) {
    throw vqtoken::ContractError("grid dimensions must be >= 1");
  }
  return vqtoken::GridDims{frames, static_cast<std::uint32_t>(h),
                           static_cast<std::uint32_t>(w)};
}

void print_effective_config(bool verbose, const std::string& name,
                            const std::vector<std::pair<std::string, std::string>>& kv) {
  if (!verbose) return;
  std::cout << "# " << name << " config:";
  for (const auto& [k, v] : kv) std::cout << ' ' << k << '=' << v;
  std::cout << '\n';
}

// --- synth ------------------------------------------------------------------

struct SynthArgs {
  std::size_t clips = 200;
  std::uint32_t frames = 8;
  std::string grid = "6x6";
  std::uint32_t dim = 32;
  std::uint64_t seed = 0;
  std::string out;
  double noise = 0.15;
  std::size_t classes = 4;
  std::size_t objects_min = 1;
  std::size_t objects_max = 3;
};

int run_synth(const SynthArgs& args, bool verbose) {
  vqtoken::DatasetConfig cfg;
  cfg.num_clips = args.clips;
  cfg.dims = parse_grid(args.grid, args.frames);
  cfg.dim = args.dim;
  cfg.num_classes = args.classes;
  cfg.noise_std = args.noise;
  cfg.objects_min = args.objects_min;
  cfg.objects_max = args.objects_max;
  cfg.seed = args.seed;

  print_effective_config(verbose, "synth",
                         {{"clips", std::to_string(args.clips)},
                          {"frames", std::to_string(args.frames)},
                          {"grid", args.grid},
                          {"dim", std::to_string(args.dim)},
                          {"noise", format4(args.noise)},
                          {"seed", std::to_string(args.seed)},
                          {"out", args.out}});

  const vqtoken::ProxyDataset data = vqtoken::build_dataset(cfg);
  fs::create_directories(args.out);

  ordered_json manifest = ordered_json::array();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const vqtoken::SynthClip& clip = data.clip(i);
    const std::string file = clip.label.clip_id + ".vqtk";
    vqtoken::write_grid(clip.grid, fs::path(args.out) / file);
    ordered_json entry;
    entry["clipId"] = clip.label.clip_id;
    entry["file"] = file;
    entry["classId"] = clip.label.class_id;
    manifest.push_back(entry);
  }
  std::ofstream mf(fs::path(args.out) / "manifest.json", std::ios::trunc);
  mf << manifest.dump(2) << '\n';
  std::cout << "wrote " << data.size() << " clips + manifest to " << args.out << '\n';
  return kExitOk;
}

// --- compress ----------------------------------------------------------------

struct CompressArgs {
  std::string input;
  std::string mode = "fixed";
  std::size_t k = 32;
  double tau = 0.92;
  std::size_t kmin = 4;
  std::size_t kmax = 256;
  std::string params_path;
  std::string variant = "cluster-positional";
  std::string out;
  std::uint64_t seed = 0;
  std::uint32_t heads = 4;
};

int run_compress(const CompressArgs& args, bool verbose) {
  if (!fs::exists(args.input)) {
    throw vqtoken::ContractError("input file not found: " + args.input);
  }
  const vqtoken::TokenGrid grid = vqtoken::read_grid(args.input);

  vqtoken::QuantizerConfig qcfg;
  if (args.mode == "fixed") {
    qcfg.mode = vqtoken::QuantizerConfig::Mode::kFixed;
  } else if (args.mode == "adaptive") {
    qcfg.mode = vqtoken::QuantizerConfig::Mode::kAdaptive;
  } else {
    throw vqtoken::ContractError("--mode must be fixed or adaptive");
  }
  qcfg.cluster_count = args.k;
  qcfg.split_threshold = args.tau;
  qcfg.k_min = args.kmin;
  qcfg.k_max = std::min<std::size_t>(args.kmax, grid.token_count());
  qcfg.seed = args.seed;

  const auto variant = vqtoken::variant_from_name(args.variant);
  vqtoken::VqAttnParams params;
  if (!args.params_path.empty()) {
    if (!fs::exists(args.params_path)) {
      throw vqtoken::ContractError("params file not found: " + args.params_path);
    }
    params = vqtoken::load_params(args.params_path);
    if (params.dim != grid.dim) {
      throw vqtoken::FormatError(vqtoken::FormatError::Code::kCorrupt,
                                 "params dim does not match grid dim");
    }
  } else {
    params = vqtoken::make_attn_params(variant, grid.dim, args.heads, args.seed,
                                       grid.dims, static_cast<std::uint32_t>(args.k));
  }

  print_effective_config(verbose, "compress",
                         {{"input", args.input},
                          {"mode", args.mode},
                          {"k", std::to_string(args.k)},
                          {"tau", format4(args.tau)},
                          {"variant", args.variant},
                          {"seed", std::to_string(args.seed)}});

  const vqtoken::CompressResult result = vqtoken::compress_clip(grid, qcfg, params);
  vqtoken::CompressedFile file;
  file.tokens = result.compressed.tokens;
  file.map = result.index_map;
  if (!args.out.empty()) vqtoken::write_compressed(file, args.out);

  const double percent =
      100.0 * static_cast<double>(result.assignment.cluster_count) /
      static_cast<double>(grid.token_count());
  std::cout << "tokens: " << result.assignment.cluster_count << " / " << grid.token_count()
            << " (" << format4(percent) << "%)\n";
  return kExitOk;
}

// --- bench -------------------------------------------------------------------

struct BenchArgs {
  std::string data_dir;
  std::string methods = "vq,prune,tome,vidtome,interp";
  std::string budgets = "12,32,64";
  bool adaptive = false;
  bool ablation = false;
  std::uint64_t seed = 0;
  std::string report = "bench.jsonl";
  std::string csv;
  std::string table;
  std::size_t epochs = 500;
  double probe_lr = 0.1;
  std::size_t joint_epochs = 300;
  double joint_lr = 0.02;
  std::size_t threads = 0;
  bool measure_time = false;
  std::size_t layers = 24;
  double tau = 0.92;
  std::size_t kmin = 4;
  std::size_t kmax = 256;
};

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

vqtoken::ProxyDataset load_dataset(const std::string& dir, std::uint64_t seed) {
  const fs::path manifest_path = fs::path(dir) / "manifest.json";
  if (!fs::exists(manifest_path)) {
    throw vqtoken::ContractError("no manifest.json under --data dir: " + dir);
  }
  std::ifstream in(manifest_path);
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw vqtoken::FormatError(vqtoken::FormatError::Code::kCorrupt,
                               std::string("manifest: ") + e.what());
  }
  if (!manifest.is_array() || manifest.empty()) {
    throw vqtoken::FormatError(vqtoken::FormatError::Code::kCorrupt,
                               "manifest: expected a non-empty array");
  }

  std::vector<vqtoken::SynthClip> clips;
  int max_class = 0;
  for (const auto& entry : manifest) {
    vqtoken::SynthClip clip;
    clip.label.clip_id = entry.at("clipId").get<std::string>();
    clip.label.class_id = entry.at("classId").get<int>();
    clip.grid = vqtoken::read_grid(fs::path(dir) / entry.at("file").get<std::string>());
    max_class = std::max(max_class, clip.label.class_id);
    clips.push_back(std::move(clip));
  }

  vqtoken::DatasetConfig cfg;
  cfg.dims = clips.front().grid.dims;
  cfg.dim = clips.front().grid.dim;
  cfg.num_classes = static_cast<std::size_t>(max_class) + 1;
  cfg.seed = seed;
  return vqtoken::assemble_dataset(cfg, std::move(clips));
}

int run_bench(const BenchArgs& args, bool verbose) {
  vqtoken::HarnessOptions opts;
  opts.probe_epochs = args.epochs;
  opts.probe_lr = args.probe_lr;
  opts.joint_epochs = args.joint_epochs;
  opts.joint_lr = args.joint_lr;
  opts.threads = args.threads;
  opts.measure_time = args.measure_time;
  opts.llm_layers = args.layers;
  opts.seed = args.seed;
  opts.quantizer.split_threshold = args.tau;
  opts.quantizer.k_min = args.kmin;
  opts.quantizer.k_max = args.kmax;
  opts.quantizer.seed = args.seed;

  std::vector<vqtoken::ReducerMethod> methods;
  for (const std::string& name : split_csv(args.methods)) {
    methods.push_back(vqtoken::reducer_from_name(name));
  }
  std::vector<std::size_t> budgets;
  for (const std::string& b : split_csv(args.budgets)) {
    long v = 0;
    try {
      v = std::stol(b);
    } catch (const std::exception&) {
      throw vqtoken::ContractError("bad budget '" + b + "'");
    }
    if (v <= 0) throw vqtoken::ContractError("budgets must be positive");
    budgets.push_back(static_cast<std::size_t>(v));
  }

  print_effective_config(verbose, "bench",
                         {{"data", args.data_dir},
                          {"methods", args.methods},
                          {"budgets", args.budgets},
                          {"adaptive", args.adaptive ? "yes" : "no"},
                          {"ablation", args.ablation ? "yes" : "no"},
                          {"seed", std::to_string(args.seed)},
                          {"epochs", std::to_string(args.epochs)},
                          {"joint_epochs", std::to_string(args.joint_epochs)}});

  const vqtoken::ProxyDataset data = load_dataset(args.data_dir, args.seed);

  std::vector<vqtoken::BenchmarkRun> runs =
      vqtoken::run_fixed_length(data, budgets, methods, opts);
  if (args.adaptive) {
    for (auto& run : vqtoken::run_adaptive_length(data, opts)) runs.push_back(run);
  }
  if (args.ablation) {
    for (auto& run : vqtoken::run_ablation(data, opts)) runs.push_back(run);
  }

  vqtoken::write_runs_ledger(runs, args.report);
  const std::string csv = vqtoken::runs_csv(runs);
  const std::string csv_path =
      args.csv.empty() ? fs::path(args.report).replace_extension(".csv").string()
                       : args.csv;
  {
    std::ofstream out(csv_path, std::ios::trunc);
    out << csv;
  }
  const std::string table = vqtoken::runs_table(runs);
  if (!args.table.empty()) {
    std::ofstream out(args.table, std::ios::trunc);
    out << table;
  }
  std::cout << table;
  std::cout << "ledger: " << args.report << "\ncsv: " << csv_path << '\n';
  return kExitOk;
}

// --- tokdense -----------------------------------------------------------------

int run_tokdense(double accuracy, double tokens) {
  std::cout << format4(vqtoken::tok_dense(accuracy, tokens)) << '\n';
  return kExitOk;
}

// --- gradcheck ----------------------------------------------------------------

int run_gradcheck(std::uint64_t seed, const std::string& variant, double tolerance,
                  bool corrupt, bool verbose) {
  vqtoken::BlockCheckConfig cfg;
  cfg.variant = vqtoken::variant_from_name(variant);
  cfg.seed = seed;
  cfg.corrupt = corrupt;
  print_effective_config(verbose, "gradcheck",
                         {{"seed", std::to_string(seed)},
                          {"variant", variant},
                          {"tolerance", format4(tolerance)}});

  const vqtoken::GradCheckReport report = vqtoken::check_attention_block(cfg);
  std::cout << "checked " << report.param_count << " parameters across "
            << report.per_param_errors.size() << " tensors\n";
  for (const auto& [name, err] : report.per_param_errors) {
    std::cout << "  " << std::left << std::setw(16) << name << " rel_err "
              << std::scientific << std::setprecision(3) << err << '\n';
    std::cout.unsetf(std::ios::floatfield);
  }
  std::cout << "max_rel_error " << std::scientific << std::setprecision(3)
            << report.max_rel_error << (report.passed(tolerance) ? " PASS" : " FAIL")
            << '\n';
  std::cout.unsetf(std::ios::floatfield);
  if (!report.passed(tolerance)) {
    std::string worst;
    double worst_err = -1.0;
    for (const auto& [name, err] : report.per_param_errors) {
      if (err > worst_err) {
        worst_err = err;
        worst = name;
      }
    }
    std::cerr << "gradcheck failed: worst tensor " << worst << '\n';
    return kExitCheckFailed;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vqtoken: extreme video-token reduction via adaptive vector quantization"};
  app.require_subcommand(1);
  std::string config_path;
  bool verbose = false;
  app.add_option("--config", config_path, "JSON config file (flags take precedence)");
  app.add_flag("--verbose", verbose, "print the effective configuration");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic proxy dataset");
  auto* o_clips = synth_cmd->add_option("--clips", synth.clips, "number of clips");
  auto* o_frames = synth_cmd->add_option("--frames", synth.frames, "frames per clip (T)");
  auto* o_grid = synth_cmd->add_option("--grid", synth.grid, "spatial grid HxW");
  auto* o_dim = synth_cmd->add_option("--dim", synth.dim, "embedding dim (D)");
  auto* o_sseed = synth_cmd->add_option("--seed", synth.seed, "generation seed");
  synth_cmd->add_option("--out", synth.out, "output directory")->required();
  auto* o_noise = synth_cmd->add_option("--noise", synth.noise, "noise level");
  auto* o_classes = synth_cmd->add_option("--classes", synth.classes, "motion classes (<=4)");
  auto* o_omin = synth_cmd->add_option("--objects-min", synth.objects_min, "min objects");
  auto* o_omax = synth_cmd->add_option("--objects-max", synth.objects_max, "max objects");

  CompressArgs compress;
  auto* comp_cmd = app.add_subcommand("compress", "compress one VQTK clip to VQTC");
  comp_cmd->add_option("--input", compress.input, "input .vqtk clip")->required();
  auto* o_mode = comp_cmd->add_option("--mode", compress.mode, "fixed|adaptive");
  auto* o_k = comp_cmd->add_option("--k", compress.k, "cluster count (fixed mode)");
  auto* o_tau = comp_cmd->add_option("--tau", compress.tau, "adaptive split threshold");
  auto* o_kmin = comp_cmd->add_option("--kmin", compress.kmin, "adaptive min clusters");
  auto* o_kmax = comp_cmd->add_option("--kmax", compress.kmax, "adaptive max clusters");
  comp_cmd->add_option("--params", compress.params_path, "VQTP parameter checkpoint");
  auto* o_variant = comp_cmd->add_option("--variant", compress.variant,
                                         "literal-flat|cluster-positional");
  comp_cmd->add_option("--out", compress.out, "output .vqtc path");
  auto* o_cseed = comp_cmd->add_option("--seed", compress.seed, "clustering/init seed");
  auto* o_heads = comp_cmd->add_option("--heads", compress.heads, "attention heads");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "run the token-reduction benchmark suite");
  bench_cmd->add_option("--data", bench.data_dir, "dataset dir from synth")->required();
  auto* o_methods = bench_cmd->add_option("--methods", bench.methods, "comma list");
  auto* o_budgets = bench_cmd->add_option("--budgets", bench.budgets, "comma list");
  bench_cmd->add_flag("--adaptive", bench.adaptive, "also run the adaptive subtask");
  bench_cmd->add_flag("--ablation", bench.ablation, "also run the ablation matrix");
  auto* o_bseed = bench_cmd->add_option("--seed", bench.seed, "harness seed");
  auto* o_report = bench_cmd->add_option("--report", bench.report, "JSONL ledger path");
  bench_cmd->add_option("--csv", bench.csv, "CSV summary path");
  bench_cmd->add_option("--table", bench.table, "plain-text table path");
  auto* o_epochs = bench_cmd->add_option("--epochs", bench.epochs, "probe epochs");
  auto* o_plr = bench_cmd->add_option("--probe-lr", bench.probe_lr, "probe lr");
  auto* o_jepochs =
      bench_cmd->add_option("--joint-epochs", bench.joint_epochs, "joint epochs");
  auto* o_jlr = bench_cmd->add_option("--joint-lr", bench.joint_lr, "joint lr");
  auto* o_threads = bench_cmd->add_option("--threads", bench.threads, "worker threads");
  bench_cmd->add_flag("--measure-time", bench.measure_time,
                      "record wall-clock (breaks byte-reproducibility)");
  auto* o_layers = bench_cmd->add_option("--layers", bench.layers, "LLM layer count");
  auto* o_btau = bench_cmd->add_option("--tau", bench.tau, "adaptive split threshold");
  auto* o_bkmin = bench_cmd->add_option("--kmin", bench.kmin, "adaptive min clusters");
  auto* o_bkmax = bench_cmd->add_option("--kmax", bench.kmax, "adaptive max clusters");

  double td_accuracy = 0.0, td_tokens = 0.0;
  auto* tok_cmd = app.add_subcommand("tokdense", "accuracy per retained token");
  tok_cmd->add_option("--accuracy", td_accuracy, "accuracy in percent")->required();
  tok_cmd->add_option("--tokens", td_tokens, "retained token count")->required();

  std::uint64_t gc_seed = 0;
  std::string gc_variant = "cluster-positional";
  double gc_tolerance = 1e-5;
  bool gc_corrupt = false;
  auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference check of the block");
  auto* o_gseed = gc_cmd->add_option("--seed", gc_seed, "seed");
  auto* o_gvariant = gc_cmd->add_option("--variant", gc_variant, "encoder variant");
  auto* o_gtol = gc_cmd->add_option("--tolerance", gc_tolerance, "max relative error");
  gc_cmd->add_flag("--corrupt", gc_corrupt, "test hook: corrupt one gradient")
      ->group("");  // hidden

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const json cfg = load_config_file(config_path);
    if (synth_cmd->parsed()) {
      apply_config(cfg, "clips", o_clips, synth.clips);
      apply_config(cfg, "frames", o_frames, synth.frames);
      apply_config(cfg, "grid", o_grid, synth.grid);
      apply_config(cfg, "dim", o_dim, synth.dim);
      apply_config(cfg, "seed", o_sseed, synth.seed);
      apply_config(cfg, "noise", o_noise, synth.noise);
      apply_config(cfg, "classes", o_classes, synth.classes);
      apply_config(cfg, "objects-min", o_omin, synth.objects_min);
      apply_config(cfg, "objects-max", o_omax, synth.objects_max);
      return run_synth(synth, verbose);
    }
    if (comp_cmd->parsed()) {
      apply_config(cfg, "mode", o_mode, compress.mode);
      apply_config(cfg, "k", o_k, compress.k);
      apply_config(cfg, "tau", o_tau, compress.tau);
      apply_config(cfg, "kmin", o_kmin, compress.kmin);
      apply_config(cfg, "kmax", o_kmax, compress.kmax);
      apply_config(cfg, "variant", o_variant, compress.variant);
      apply_config(cfg, "seed", o_cseed, compress.seed);
      apply_config(cfg, "heads", o_heads, compress.heads);
      return run_compress(compress, verbose);
    }
    if (bench_cmd->parsed()) {
      apply_config(cfg, "methods", o_methods, bench.methods);
      apply_config(cfg, "budgets", o_budgets, bench.budgets);
      apply_config(cfg, "seed", o_bseed, bench.seed);
      apply_config(cfg, "report", o_report, bench.report);
      apply_config(cfg, "epochs", o_epochs, bench.epochs);
      apply_config(cfg, "probe-lr", o_plr, bench.probe_lr);
      apply_config(cfg, "joint-epochs", o_jepochs, bench.joint_epochs);
      apply_config(cfg, "joint-lr", o_jlr, bench.joint_lr);
      apply_config(cfg, "threads", o_threads, bench.threads);
      apply_config(cfg, "layers", o_layers, bench.layers);
      apply_config(cfg, "tau", o_btau, bench.tau);
      apply_config(cfg, "kmin", o_bkmin, bench.kmin);
      apply_config(cfg, "kmax", o_bkmax, bench.kmax);
      return run_bench(bench, verbose);
    }
    if (tok_cmd->parsed()) {
      return run_tokdense(td_accuracy, td_tokens);
    }
    if (gc_cmd->parsed()) {
      apply_config(cfg, "seed", o_gseed, gc_seed);
      apply_config(cfg, "variant", o_gvariant, gc_variant);
      apply_config(cfg, "tolerance", o_gtol, gc_tolerance);
      return run_gradcheck(gc_seed, gc_variant, gc_tolerance, gc_corrupt, verbose);
    }
  } catch (const vqtoken::ContractError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const vqtoken::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const vqtoken::StateError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
  return kExitUsage;
}

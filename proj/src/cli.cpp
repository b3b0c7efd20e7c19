#include "tquate/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "parallel.hpp"
#include "tquate/checkpoint.hpp"
#include "tquate/data.hpp"
#include "tquate/eval.hpp"
#include "tquate/patterns.hpp"
#include "tquate/train.hpp"

namespace tquate::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

void print_cause_chain(const std::exception& e, std::ostream& err, int depth = 0) {
  err << (depth == 0 ? "error: " : "  caused by: ") << e.what() << '\n';
  try {
    std::rethrow_if_nested(e);
  } catch (const std::exception& inner) {
    print_cause_chain(inner, err, depth + 1);
  } catch (...) {
  }
}

unsigned default_threads() {
  const char* env = std::getenv("TQUATE_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(env, &used);
    if (used != std::char_traits<char>::length(env)) throw std::invalid_argument(env);
    return static_cast<unsigned>(v);
  } catch (const std::exception&) {
    throw UsageError(std::string("TQUATE_THREADS must be a non-negative integer, got '") + env + "'");
  }
}

// Looks for "--name value" or "--name=value" among the train arguments.
std::optional<std::string> prescan(const std::vector<std::string>& args, const std::string& name) {
  if (args.empty() || args.front() != "train") return std::nullopt;
  std::optional<std::string> found;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == name && i + 1 < args.size()) {
      found = args[i + 1];
    } else if (args[i].rfind(name + "=", 0) == 0) {
      found = args[i].substr(name.size() + 1);
    }
  }
  return found;
}

TrainConfig preset_config(const std::string& name) {
  if (name == "icews14") return TrainConfig::icews14();
  if (name == "icews05-15") return TrainConfig::icews05_15();
  if (name == "gdelt") return TrainConfig::gdelt();
  throw UsageError("unknown preset '" + name + "' (expected icews14, icews05-15 or gdelt)");
}

void print_dataset_summary(std::ostream& out, const QuadrupleDataset& ds) {
  out << "entities: " << ds.num_entities << '\n'
      << "relations: " << ds.num_relations << '\n'
      << "timestamps: " << ds.num_timestamps << '\n'
      << "train: " << ds.train.size() << '\n'
      << "valid: " << ds.valid.size() << '\n'
      << "test: " << ds.test.size() << '\n';
}

struct EvalArgs {
  std::string checkpoint;
  std::string dataset;
  std::string split = "test";
  std::string results;
  std::string ranks;
  unsigned threads = 0;
};

int run_eval(const EvalArgs& a, std::ostream& out) {
  const Checkpoint ckpt = read_checkpoint(a.checkpoint);
  const LoadedDataset data = open_dataset(a.dataset);
  const auto& ds = data.data;
  const auto& p = ckpt.params;
  if (p.num_entities() != ds.num_entities || p.num_relations != ds.num_relations ||
      p.num_timestamps() != ds.num_timestamps) {
    std::ostringstream msg;
    msg << "checkpoint shape (" << p.num_entities() << " entities, " << p.num_relations << " relations, "
        << p.num_timestamps() << " timestamps) does not match dataset (" << ds.num_entities << ", "
        << ds.num_relations << ", " << ds.num_timestamps << ")";
    throw CheckpointError(msg.str());
  }
  const std::vector<Quadruple>* split = nullptr;
  if (a.split == "train") split = &ds.train;
  if (a.split == "valid") split = &ds.valid;
  if (a.split == "test") split = &ds.test;
  const FilterIndex filter = FilterIndex::build(ds);
  const RankingResult result = evaluate(p, *split, filter, resolve_threads(a.threads));
  out << format_results_table(result, a.split);
  if (!a.results.empty()) write_results_kv(a.results, result, a.split);
  if (!a.ranks.empty()) write_rank_dump(a.ranks, *split, result);
  return kExitOk;
}

int run_inspect(const std::string& path, std::ostream& out) {
  const CheckpointHeader h = read_checkpoint_header(path);
  const std::uint64_t time_tables = h.periodic_enabled ? 2 : 1;
  const std::uint64_t params =
      (std::uint64_t{h.num_entities} + 2ull * h.num_relations + time_tables * h.num_timestamps) * h.dim * 4ull;
  out << "format: TQUATECK\n"
      << "version: " << h.version << '\n'
      << "entities: " << h.num_entities << '\n'
      << "relations: " << h.num_relations << '\n'
      << "timestamps: " << h.num_timestamps << '\n'
      << "dim: " << h.dim << '\n'
      << "periodic: " << (h.periodic_enabled ? "true" : "false") << '\n'
      << "seed: " << h.seed << '\n'
      << "parameters: " << params << '\n';
  return kExitOk;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw UsageError(path + ":" + std::to_string(line_no) + ": empty key");
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    std::replace(key.begin(), key.end(), '_', '-');
    entries.emplace_back(std::move(key), std::move(value));
  }
  return entries;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    const unsigned env_threads = default_threads();

    CLI::App app{"Temporal knowledge graph completion with quaternion embeddings", "tquate"};
    app.require_subcommand(1, 1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    // preprocess
    std::string pre_dataset, pre_out;
    auto* pre = app.add_subcommand("preprocess", "Parse a dataset directory into a binary cache");
    pre->add_option("--dataset", pre_dataset, "Dataset directory with train/valid/test")->required();
    pre->add_option("--out", pre_out, "Cache file to write")->required();

    // train
    const auto preset_name = prescan(args, "--preset");
    TrainConfig cfg = preset_name ? preset_config(*preset_name) : TrainConfig{};
    std::string dataset, checkpoint, metrics, config_path, preset_arg;
    unsigned train_threads = env_threads;
    auto* tr = app.add_subcommand("train", "Train a model");
    tr->add_option("--config", config_path, "Flat key = value file; flags override its entries");
    tr->add_option("--preset", preset_arg, "Hyperparameter preset")
        ->check(CLI::IsMember({"icews14", "icews05-15", "gdelt"}));
    tr->add_option("--dataset", dataset, "Dataset directory or cache file");
    tr->add_option("--dim", cfg.dim, "Quaternion embedding dimension")->capture_default_str();
    tr->add_option("--batch-size", cfg.batch_size, "Minibatch size")->capture_default_str();
    tr->add_option("--epochs,--max-epochs", cfg.max_epochs, "Number of epochs")->capture_default_str();
    tr->add_option("--lr,--learning-rate", cfg.learning_rate, "Adagrad learning rate")->capture_default_str();
    tr->add_option("--lambda-e", cfg.lambda_e, "Embedding regularizer weight")->capture_default_str();
    tr->add_option("--lambda-t", cfg.lambda_t, "Temporal regularizer weight")->capture_default_str();
    tr->add_option("--p", cfg.p, "Norm order of both regularizers")->capture_default_str();
    tr->add_option("--periodic,--periodic-enabled", cfg.periodic_enabled, "Use periodic time (true/false)")
        ->capture_default_str();
    tr->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
    tr->add_option("--eval-every", cfg.eval_every, "Validate every N epochs")->capture_default_str();
    tr->add_option("--checkpoint", checkpoint, "Final checkpoint path; the best model goes to <path>.best");
    tr->add_option("--metrics", metrics, "Append-only metrics log");
    tr->add_option("--threads", train_threads, "Worker threads, 0 = all cores, 1 = strict deterministic");

    if (const auto cpath = prescan(args, "--config")) {
      for (const auto& [key, value] : read_config_file(*cpath)) {
        CLI::Option* opt = (key == "config" || key == "preset") ? nullptr : tr->get_option_no_throw("--" + key);
        if (opt == nullptr) throw UsageError("unknown config key '" + key + "' in " + *cpath);
        opt->default_val(value);
      }
    }

    // eval
    EvalArgs ev_args;
    ev_args.threads = env_threads;
    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint with time-wise filtered ranking");
    ev->add_option("--checkpoint", ev_args.checkpoint, "Checkpoint file")->required();
    ev->add_option("--dataset", ev_args.dataset, "Dataset directory or cache file")->required();
    ev->add_option("--split", ev_args.split, "Split to rank")
        ->check(CLI::IsMember({"train", "valid", "test"}))
        ->capture_default_str();
    ev->add_option("--results", ev_args.results, "Write key=value metrics here");
    ev->add_option("--ranks", ev_args.ranks, "Write per-query ranks here");
    ev->add_option("--threads", ev_args.threads, "Worker threads, 0 = all cores");

    // verify-patterns
    std::size_t trials = 1000, dim = 8;
    std::uint64_t vp_seed = 0;
    unsigned vp_threads = env_threads;
    auto* vp = app.add_subcommand("verify-patterns", "Check the five relation patterns numerically");
    vp->add_option("--trials", trials, "Random trials per check")->capture_default_str()->check(CLI::PositiveNumber);
    vp->add_option("--dim", dim, "Quaternion dimension")->capture_default_str()->check(CLI::PositiveNumber);
    vp->add_option("--seed", vp_seed, "Random seed")->capture_default_str();
    vp->add_option("--threads", vp_threads, "Worker threads, 0 = all cores");

    // inspect
    std::string inspect_path;
    auto* in = app.add_subcommand("inspect", "Print a checkpoint header");
    in->add_option("--checkpoint", inspect_path, "Checkpoint file")->required();

    try {
      std::vector<std::string> reversed(args.rbegin(), args.rend());
      app.parse(reversed);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kExitOk : kExitUsage;
    }

    if (pre->parsed()) {
      const LoadedDataset data = load_dataset(pre_dataset);
      save_dataset_cache(data, pre_out);
      print_dataset_summary(out, data.data);
      out << "wrote " << pre_out << '\n';
      return kExitOk;
    }
    if (tr->parsed()) {
      if (dataset.empty()) throw UsageError("train: --dataset is required (flag or config file)");
      cfg.dataset = dataset;
      cfg.checkpoint = checkpoint;
      cfg.metrics = metrics;
      cfg.threads = resolve_threads(train_threads);
      cfg.validate();
      const LoadedDataset data = open_dataset(cfg.dataset);
      print_dataset_summary(out, data.data);
      const auto result = train(cfg, data, [&](const EvalRecord& rec) {
        out << std::fixed << std::setprecision(4) << "epoch " << rec.epoch << "  loss " << rec.train_loss
            << "  valid MRR " << rec.valid.mrr << "  H@1 " << rec.valid.hits1 << "  H@3 " << rec.valid.hits3
            << "  H@10 " << rec.valid.hits10 << "  (" << std::setprecision(1) << rec.seconds << " s)\n"
            << std::defaultfloat << std::flush;
      });
      out << "parameters: " << parameter_count(result.params) << '\n';
      out << "best valid MRR: " << std::setprecision(6) << result.best_valid_mrr << '\n';
      if (!checkpoint.empty()) out << "checkpoint: " << checkpoint << " (best: " << checkpoint << ".best)\n";
      return kExitOk;
    }
    if (ev->parsed()) return run_eval(ev_args, out);
    if (vp->parsed()) {
      const PatternReport report = verify_patterns(trials, dim, vp_seed, resolve_threads(vp_threads));
      out << report.table();
      return report.all_passed() ? kExitOk : kExitFailure;
    }
    if (in->parsed()) return run_inspect(inspect_path, out);
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    print_cause_chain(e, err);
    return kExitFailure;
  }
}

}  // namespace tquate::cli

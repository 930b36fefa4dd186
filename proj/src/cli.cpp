#include "beam/cli.hpp"

#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "beam/core_model.hpp"
#include "beam/mathfn.hpp"
#include "beam/pairstats.hpp"

namespace beam::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr std::size_t kStreamBlock = std::size_t{1} << 18;
constexpr std::size_t kListedWarnings = 10;
constexpr int kCurvePoints = 999;

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_output(const fs::path& path) {
  File f(std::fopen(path.string().c_str(), "wb"));
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  std::setvbuf(f.get(), nullptr, _IOFBF, 1 << 20);
  return f;
}

void write_text(const fs::path& path, const std::string& text) {
  File f = open_output(path);
  std::fwrite(text.data(), 1, text.size(), f.get());
}

fs::path prepare_output_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory '" + dir + "'");
  return fs::path(dir);
}

PriorSpec parse_prior(const std::string& text, Eigen::Index p) {
  if (text == "identity") return PriorSpec::identity();
  if (text.rfind("scaled:", 0) == 0) {
    double tau = 0.0;
    try {
      std::size_t used = 0;
      tau = std::stod(text.substr(7), &used);
      if (used != text.size() - 7) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ConfigError("invalid prior scale in '" + text + "'");
    }
    if (!(tau > 0.0)) throw ConfigError("prior scale must be positive");
    return PriorSpec::scaled_identity(tau);
  }
  if (text.rfind("file:", 0) == 0) {
    Eigen::MatrixXd d = read_matrix(text.substr(5));
    if (d.rows() != p || d.cols() != p) {
      throw ConfigError("prior matrix must be " + std::to_string(p) + " x " + std::to_string(p));
    }
    return PriorSpec::explicit_matrix(std::move(d));
  }
  throw ConfigError("unknown prior '" + text + "' (use identity, scaled:<tau> or file:<path>)");
}

struct TestOutput {
  TestType test;
  File edges;
  std::vector<double> adjusted;
  std::vector<std::int32_t> degrees;
};

void write_edge_header(std::FILE* f) {
  std::fputs("i\tj\tname_i\tname_j\tr_posterior\tlog_sbf\ttail_prob\tadjusted_tail\tselected\n", f);
}

void write_edge_row(std::FILE* f, const DataMatrix& data, const PairStat& s, TestType test,
                    double adjusted, bool selected) {
  const bool marginal = test == TestType::marginal;
  const std::string line = std::to_string(s.i + 1) + '\t' + std::to_string(s.j + 1) + '\t' +
                           data.name(s.i) + '\t' + data.name(s.j) + '\t' +
                           format_real(marginal ? s.r_t : s.r_q) + '\t' +
                           format_real(marginal ? s.log_sbf_m : s.log_sbf_c) + '\t' +
                           format_sci(marginal ? s.tail_m : s.tail_c) + '\t' + format_sci(adjusted) +
                           '\t' + (selected ? "1" : "0") + '\n';
  std::fwrite(line.data(), 1, line.size(), f);
}

void emit_rows(std::span<const PairStat> block, std::size_t offset, const DataMatrix& data,
               double level, std::vector<TestOutput>& outputs) {
  for (std::size_t k = 0; k < block.size(); ++k) {
    const PairStat& s = block[k];
    for (TestOutput& out : outputs) {
      const double adj = out.adjusted[offset + k];
      const bool selected = adj <= level;
      if (selected) {
        ++out.degrees[static_cast<std::size_t>(s.i)];
        ++out.degrees[static_cast<std::size_t>(s.j)];
      }
      write_edge_row(out.edges.get(), data, s, out.test, adj, selected);
    }
  }
}

struct FlagCollector {
  std::size_t count = 0;
  std::vector<std::pair<std::int32_t, std::int32_t>> listed;

  void scan(std::span<const PairStat> block) {
    for (const PairStat& s : block) {
      if (s.flags == kFlagNone) continue;
      ++count;
      if (listed.size() < kListedWarnings) listed.emplace_back(s.i, s.j);
    }
  }

  void report(const DataMatrix& data) const {
    if (count == 0) return;
    std::cerr << "warning: " << count
              << " pair(s) with |correlation| = 1; their log scaled Bayes factor is inf and "
                 "tail probability 0\n";
    for (const auto& [i, j] : listed) {
      std::cerr << "warning:   pair (" << i + 1 << ", " << j + 1 << ") " << data.name(i) << " / "
                << data.name(j) << '\n';
    }
    if (count > listed.size()) std::cerr << "warning:   ...\n";
  }
};

void write_degrees(const fs::path& dir, const DataMatrix& data, const TestOutput& out) {
  const std::string tag(to_string(out.test));
  File f = open_output(dir / ("degrees_" + tag + ".tsv"));
  std::fputs("i\tname\tdegree\n", f.get());
  for (Eigen::Index i = 0; i < data.p(); ++i) {
    std::fprintf(f.get(), "%lld\t%s\t%d\n", static_cast<long long>(i + 1), data.name(i).c_str(),
                 out.degrees[static_cast<std::size_t>(i)]);
  }
  File h = open_output(dir / ("degree_hist_" + tag + ".tsv"));
  std::fputs("degree\tcount\n", h.get());
  for (const auto& [degree, count] : degree_distribution(out.degrees)) {
    std::fprintf(h.get(), "%d\t%lld\n", degree, static_cast<long long>(count));
  }
}

void write_fit_json(const fs::path& dir, const ModelFit& fit) {
  Json j;
  j["n"] = fit.n;
  j["p"] = fit.p;
  j["delta"] = fit.delta;
  j["alpha"] = fit.alpha;
  j["logml"] = fit.log_ml;
  j["prior"] = fit.prior.describe();
  write_text(dir / "fit.json", j.dump(2) + "\n");
}

void write_ml_curve(const fs::path& dir, const DataMatrix& data, const PriorSpec& prior) {
  File f = open_output(dir / "ml_curve.tsv");
  std::fputs("alpha\tdelta\tlogml\n", f.get());
  for (const auto& pt : marginal_likelihood_curve(data, prior, kCurvePoints)) {
    const std::string line =
        format_real(pt.alpha) + '\t' + format_real(pt.delta) + '\t' + format_real(pt.log_ml) + '\n';
    std::fputs(line.c_str(), f.get());
  }
}

int fit_impl(const RunConfig& config) {
  if (!(config.level > 0.0 && config.level < 1.0)) throw ConfigError("--level must lie in (0, 1)");
  if (!config.marginal && !config.conditional) throw ConfigError("no test selected");
  if (config.threads < 0) throw ConfigError("--threads must be positive");
  const int threads = resolve_threads(config.threads);

  TableReadOptions read_options;
  read_options.delimiter = config.delimiter;
  read_options.has_header = config.has_header;
  read_options.transpose = config.transpose;
  RawTable raw = read_table(config.input_path, read_options);
  const DataMatrix data = standardize(raw.values, std::move(raw.names));
  const PriorSpec prior = parse_prior(config.prior, data.p());
  if (data.p() < 2) throw InputError("at least two variables are required");

  ModelFit fit;
  if (config.delta_override) {
    if (!(*config.delta_override > static_cast<double>(data.p()) + 1.0)) {
      throw ConfigError("--delta must exceed p + 1 = " + std::to_string(data.p() + 1));
    }
    fit = fit_at_delta(data, prior, *config.delta_override);
  } else {
    fit = fit_delta(data, prior);
  }

  const fs::path dir = prepare_output_dir(config.output_dir);
  write_fit_json(dir, fit);
  write_ml_curve(dir, data, prior);

  TestSelection tests;
  tests.marginal = config.marginal;
  tests.conditional = config.conditional;
  std::vector<TestOutput> outputs;
  for (TestType t : {TestType::marginal, TestType::conditional}) {
    if ((t == TestType::marginal && !tests.marginal) || (t == TestType::conditional && !tests.conditional)) {
      continue;
    }
    TestOutput out;
    out.test = t;
    out.edges = open_output(dir / ("edges_" + std::string(to_string(t)) + ".tsv"));
    write_edge_header(out.edges.get());
    out.degrees.assign(static_cast<std::size_t>(data.p()), 0);
    outputs.push_back(std::move(out));
  }

  KernelOptions kernel_options;
  kernel_options.with_gram = tests.marginal;
  const PrecomputedKernels kernels = precompute_kernels(data, fit, kernel_options);
  const PairSweeper sweeper(data, fit, kernels, tests);
  const std::size_t m = pair_count(data.p());
  FlagCollector flags;

  if (config.streaming) {
    // Pass 1 keeps one tail probability per pair and test; pass 2 recomputes
    // the pair statistics block by block and writes them out.
    for (TestOutput& out : outputs) out.adjusted.reserve(m);
    std::vector<PairStat> block(std::min(m, kStreamBlock));
    for (std::size_t begin = 0; begin < m; begin += kStreamBlock) {
      const std::size_t len = std::min(kStreamBlock, m - begin);
      std::span<PairStat> view(block.data(), len);
      sweeper.compute_parallel(begin, view, threads);
      flags.scan(view);
      for (TestOutput& out : outputs) {
        for (const PairStat& s : view) {
          out.adjusted.push_back(out.test == TestType::marginal ? s.tail_m : s.tail_c);
        }
      }
    }
    for (TestOutput& out : outputs) adjust_in_place(out.adjusted, config.adjustment);
    for (std::size_t begin = 0; begin < m; begin += kStreamBlock) {
      const std::size_t len = std::min(kStreamBlock, m - begin);
      std::span<PairStat> view(block.data(), len);
      sweeper.compute_parallel(begin, view, threads);
      emit_rows(view, begin, data, config.level, outputs);
    }
  } else {
    PairTable table;
    table.n = data.n();
    table.p = data.p();
    table.delta = fit.delta;
    table.tests = tests;
    table.pairs.resize(m);
    sweeper.compute_parallel(0, table.pairs, threads);
    flags.scan(table.pairs);
    for (TestOutput& out : outputs) {
      out.adjusted = tail_column(table, out.test);
      adjust_in_place(out.adjusted, config.adjustment);
    }
    emit_rows(table.pairs, 0, data, config.level, outputs);
  }

  flags.report(data);
  for (TestOutput& out : outputs) {
    if (std::ferror(out.edges.get())) throw ConfigError("write error on edges file");
    write_degrees(dir, data, out);
  }
  return kExitOk;
}

template <typename F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DomainError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("BEAM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return omp_get_max_threads();
}

int cmd_fit(const RunConfig& config) {
  return guarded([&] { return fit_impl(config); });
}

std::string scenario_to_json(const SimScenario& s) {
  Json j;
  j["structure"] = std::string(to_string(s.structure));
  j["p"] = s.p;
  j["n"] = s.n;
  j["seed"] = s.seed;
  j["block_size"] = s.block_size;
  j["cluster_edge_prob"] = s.cluster_edge_prob;
  j["min_eigen"] = s.min_eigen;
  return j.dump(2) + "\n";
}

SimScenario scenario_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("invalid scenario file: ") + e.what());
  }
  SimScenario s;
  try {
    if (j.contains("structure")) {
      const auto parsed = parse_structure(j.at("structure").get<std::string>());
      if (!parsed) throw ConfigError("unknown structure in scenario file");
      s.structure = *parsed;
    }
    if (j.contains("p")) s.p = j.at("p").get<int>();
    if (j.contains("n")) s.n = j.at("n").get<int>();
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("block_size")) s.block_size = j.at("block_size").get<int>();
    if (j.contains("cluster_edge_prob")) s.cluster_edge_prob = j.at("cluster_edge_prob").get<double>();
    if (j.contains("min_eigen")) s.min_eigen = j.at("min_eigen").get<double>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("invalid scenario file: ") + e.what());
  }
  return s;
}

int cmd_simulate(const SimulateConfig& config) {
  return guarded([&] {
    const SimScenario& s = config.scenario;
    s.validate();
    const GroundTruth truth = gen_precision(s);
    const std::uint64_t data_seed = replicate_sample_seed(s, 0);
    const Eigen::MatrixXd x = sample_mvn(s.n, truth, data_seed);
    const fs::path dir = prepare_output_dir(config.output_dir);

    File data = open_output(dir / "data.tsv");
    for (int c = 0; c < s.p; ++c) std::fprintf(data.get(), "%sV%d", c ? "\t" : "", c + 1);
    std::fputc('\n', data.get());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      std::string line;
      for (Eigen::Index c = 0; c < x.cols(); ++c) {
        if (c) line += '\t';
        line += format_real(x(r, c));
      }
      line += '\n';
      std::fputs(line.c_str(), data.get());
    }

    File edges = open_output(dir / "truth_edges.tsv");
    std::fputs("i\tj\tweight\n", edges.get());
    for (const auto& [i, j] : truth.true_edges) {
      std::fprintf(edges.get(), "%d\t%d\t%s\n", i + 1, j + 1, format_real(truth.psi(i, j)).c_str());
    }

    Json manifest = Json::parse(scenario_to_json(s));
    manifest["data_seed"] = data_seed;
    manifest["true_edges"] = truth.true_edges.size();
    write_text(dir / "scenario.json", manifest.dump(2) + "\n");
    return kExitOk;
  });
}

int cmd_bench(const BenchConfig& config) {
  return guarded([&] {
    config.scenario.validate();
    if (config.replicates < 1) throw ConfigError("--replicates must be at least 1");
    const int threads = resolve_threads(config.threads);
    const fs::path dir = prepare_output_dir(config.output_dir);
    const SimScenario& s = config.scenario;

    File rows = open_output(dir / "replicates.tsv");
    std::fputs("structure\tp\tn\treplicate\taucRoc\taucPr\truntimeSeconds\n", rows.get());
    std::vector<EvalResult> results;
    for (int r = 0; r < config.replicates; ++r) {
      const EvalResult e = run_replicate(s, r, threads);
      std::fprintf(rows.get(), "%s\t%d\t%d\t%d\t%s\t%s\t%s\n", std::string(to_string(s.structure)).c_str(),
                   s.p, s.n, r + 1, format_real(e.auc_roc).c_str(), format_real(e.auc_pr).c_str(),
                   format_real(e.runtime_seconds).c_str());
      results.push_back(e);
    }
    const BenchmarkSummary sum = summarize(s, std::move(results));

    File summary = open_output(dir / "summary.tsv");
    const char* header =
        "structure\tp\tn\treplicates\tmeanAucRoc\tsdAucRoc\tmeanAucPr\tsdAucPr\tmeanRuntimeSeconds\n";
    char line[512];
    std::snprintf(line, sizeof line, "%s\t%d\t%d\t%d\t%s\t%s\t%s\t%s\t%s\n",
                  std::string(to_string(s.structure)).c_str(), s.p, s.n, config.replicates,
                  format_real(sum.mean_roc).c_str(), format_real(sum.sd_roc).c_str(),
                  format_real(sum.mean_pr).c_str(), format_real(sum.sd_pr).c_str(),
                  format_real(sum.mean_runtime).c_str());
    std::fputs(header, summary.get());
    std::fputs(line, summary.get());
    std::cout << header << line;
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// Argument parsing

namespace {

void add_scenario_options(CLI::App* cmd, SimScenario& s, std::string& structure,
                          std::string& scenario_file) {
  cmd->add_option("--scenario", scenario_file, "Scenario JSON (flags given explicitly override it)");
  cmd->add_option("--structure", structure, "band, cluster, hub or random")
      ->check(CLI::IsMember({"band", "cluster", "hub", "random"}));
  cmd->add_option("--p", s.p, "Number of variables");
  cmd->add_option("--n", s.n, "Sample size");
  cmd->add_option("--seed", s.seed, "Base seed");
  cmd->add_option("--block-size", s.block_size, "Block size for cluster and hub");
  cmd->add_option("--edge-prob", s.cluster_edge_prob, "Within-block edge probability (cluster)");
  cmd->add_option("--min-eigen", s.min_eigen, "Smallest eigenvalue of the precision matrix");
}

// Merges --scenario with explicitly given flags.
SimScenario resolve_scenario(const CLI::App* cmd, const SimScenario& flags,
                             const std::string& structure, const std::string& scenario_file) {
  SimScenario s = flags;
  if (!scenario_file.empty()) {
    std::ifstream in(scenario_file);
    if (!in) throw ConfigError("cannot open scenario file '" + scenario_file + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    s = scenario_from_json(buf.str());
    if (cmd->count("--p")) s.p = flags.p;
    if (cmd->count("--n")) s.n = flags.n;
    if (cmd->count("--seed")) s.seed = flags.seed;
    if (cmd->count("--block-size")) s.block_size = flags.block_size;
    if (cmd->count("--edge-prob")) s.cluster_edge_prob = flags.cluster_edge_prob;
    if (cmd->count("--min-eigen")) s.min_eigen = flags.min_eigen;
  }
  if (!structure.empty()) s.structure = *parse_structure(structure);
  return s;
}

int parse_threads(const std::string& text) {
  if (text.empty() || text == "auto") return 0;
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size() && v > 0) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("--threads must be a positive integer or 'auto'");
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Marginal and conditional independence graphs from closed-form Bayes factors"};
  app.require_subcommand(1);

  RunConfig fit_cfg;
  std::string delimiter = "auto", tests = "conditional", adjustment = "bonferroni", fit_threads;
  bool header = false, no_header = false;
  double delta = 0.0;
  std::uint64_t seed = 0;
  auto* fit = app.add_subcommand("fit", "Fit delta, score all pairs and select edges");
  fit->add_option("input", fit_cfg.input_path, "CSV/TSV file, rows = observations")->required();
  fit->add_option("--delimiter", delimiter, "tab, comma or auto")
      ->check(CLI::IsMember({"tab", "comma", "auto"}));
  fit->add_flag("--header", header, "First row holds variable names");
  fit->add_flag("--no-header", no_header, "First row is data");
  fit->add_flag("--transpose", fit_cfg.transpose, "Rows are variables, columns are observations");
  fit->add_option("--prior", fit_cfg.prior, "identity, scaled:<tau> or file:<path>");
  fit->add_option("--delta", delta, "Use this delta instead of the empirical-Bayes estimate");
  fit->add_option("--tests", tests, "marginal, conditional or both")
      ->check(CLI::IsMember({"marginal", "conditional", "both"}));
  fit->add_option("--adjust", adjustment, "none, bonferroni, holm, BH or BY");
  fit->add_option("--level", fit_cfg.level, "Error-rate level for edge selection");
  fit->add_option("--out,-o", fit_cfg.output_dir, "Output directory");
  fit->add_option("--threads", fit_threads, "Worker threads or 'auto' (env BEAM_THREADS)");
  fit->add_flag("--streaming", fit_cfg.streaming, "Do not retain the pair table in memory");
  fit->add_option("--seed", seed, "Recorded for reproducibility; the fit itself is deterministic");

  SimulateConfig sim_cfg;
  std::string sim_structure, sim_file;
  auto* sim = app.add_subcommand("simulate", "Write a simulated dataset and its true edges");
  add_scenario_options(sim, sim_cfg.scenario, sim_structure, sim_file);
  sim->add_option("--out,-o", sim_cfg.output_dir, "Output directory");

  BenchConfig bench_cfg;
  std::string bench_structure, bench_file, bench_threads;
  auto* bench = app.add_subcommand("bench", "Replicate benchmark: AUC-ROC, AUC-PR and runtime");
  add_scenario_options(bench, bench_cfg.scenario, bench_structure, bench_file);
  bench->add_option("--replicates", bench_cfg.replicates, "Number of replicates");
  bench->add_option("--out,-o", bench_cfg.output_dir, "Output directory");
  bench->add_option("--threads", bench_threads, "Worker threads or 'auto'");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (fit->parsed()) {
    return guarded([&] {
      if (header && no_header) throw ConfigError("--header and --no-header are exclusive");
      if (header) fit_cfg.has_header = true;
      if (no_header) fit_cfg.has_header = false;
      fit_cfg.delimiter = delimiter == "tab"     ? Delimiter::tab
                          : delimiter == "comma" ? Delimiter::comma
                                                 : Delimiter::automatic;
      fit_cfg.marginal = tests != "conditional";
      fit_cfg.conditional = tests != "marginal";
      const auto method = parse_adjustment(adjustment);
      if (!method) throw ConfigError("unknown adjustment '" + adjustment + "'");
      fit_cfg.adjustment = *method;
      if (fit->count("--delta")) fit_cfg.delta_override = delta;
      if (fit->count("--seed")) fit_cfg.seed = seed;
      fit_cfg.threads = parse_threads(fit_threads);
      return cmd_fit(fit_cfg);
    });
  }
  if (sim->parsed()) {
    return guarded([&] {
      sim_cfg.scenario = resolve_scenario(sim, sim_cfg.scenario, sim_structure, sim_file);
      return cmd_simulate(sim_cfg);
    });
  }
  return guarded([&] {
    bench_cfg.scenario = resolve_scenario(bench, bench_cfg.scenario, bench_structure, bench_file);
    bench_cfg.threads = parse_threads(bench_threads);
    return cmd_bench(bench_cfg);
  });
}

}  // namespace beam::cli

#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "CLI11.hpp"
#include "relunmd/compress.hpp"
#include "relunmd/errors.hpp"
#include "relunmd/nmf.hpp"

namespace relunmd::cli {

namespace {

namespace fs = std::filesystem;

// Bad flag combinations discovered after CLI11 parsing; mapped to exit 2
// like any other usage problem.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Clock make_clock(const ExperimentConfig& cfg) {
  if (cfg.zero_clock) {
    return [] { return 0.0; };
  }
  return {};  // fit falls back to the wall clock
}

double now_seconds(const ExperimentConfig& cfg) {
  if (cfg.zero_clock) {
    return 0.0;
  }
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch())
      .count();
}

// Range checks that do not need the data dimensions, run before any file
// is touched so bad flags fail fast as usage errors.
void check_solver_params(const ExperimentConfig& cfg) {
  NmdParams p = cfg.params;
  if (p.rank < 1) {
    p.rank = 1;  // rank comes from a list; per-point values checked later
  }
  constexpr Index huge = std::numeric_limits<Index>::max();
  try {
    p.validate(huge, huge);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

std::string derive_labels_path(const std::string& input) {
  std::string path = input;
  bool changed = false;
  const std::pair<const char*, const char*> swaps[] = {
      {"images", "labels"}, {"idx3", "idx1"}};
  for (const auto& [from, to] : swaps) {
    const std::size_t pos = path.find(from);
    if (pos != std::string::npos) {
      path.replace(pos, std::string(from).size(), to);
      changed = true;
    }
  }
  if (!changed) {
    throw InvalidArgument("cannot derive a labels file from " + input +
                          "; pass --labels");
  }
  return path;
}

Matrix load_input(const ExperimentConfig& cfg) {
  Matrix m = io::load_dataset(cfg.dataset);
  if (cfg.per_class >= 0) {
    const std::string labels = cfg.labels_path.empty()
                                   ? derive_labels_path(cfg.dataset.path)
                                   : cfg.labels_path;
    m = io::subset_per_class(m, io::read_idx_labels(labels), cfg.per_class);
  }
  return m;
}

fs::path ensure_out_dir(const ExperimentConfig& cfg) {
  const fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + dir.string() + ": " +
                  ec.message());
  }
  return dir;
}

std::string number_tag(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%g", value);
  return buffer;
}

// Runs fn(0..n-1), spreading the indices over the configured worker slots.
// The first exception wins and is rethrown after all workers drain.
void run_indexed(int n, int workers, const std::function<void(int)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<int> next{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  const int count = std::min(workers, n);
  pool.reserve(static_cast<std::size_t>(count));
  for (int t = 0; t < count; ++t) {
    pool.emplace_back(worker);
  }
  for (std::thread& t : pool) {
    t.join();
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

void print_run_summary(const NmdResult& result) {
  const TraceRecord& last = result.trace.back();
  std::printf("rel_error=%.12g iters=%d seconds=%.6g stop_reason=%s\n",
              last.rel_error, last.k, last.seconds,
              to_string(result.stop_reason));
}

void write_trace_with_tol(const fs::path& path, const ConvergenceTrace& trace,
                          double tol_min) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  out << "k,seconds,rel_error,objective,tol\n";
  char buffer[200];
  for (const TraceRecord& r : trace.records) {
    std::snprintf(buffer, sizeof(buffer), "%d,%.9g,%.12g,%.12g,%.12g\n", r.k,
                  r.seconds, r.rel_error, r.objective,
                  r.rel_error - tol_min);
    out << buffer;
  }
  if (!out.good()) {
    throw IoError("write failed for " + path.string());
  }
}

}  // namespace

int cmd_decompose(const ExperimentConfig& cfg) {
  check_solver_params(cfg);
  const Matrix m = load_input(cfg);
  const fs::path dir = ensure_out_dir(cfg);

  const NmdResult result = fit(m, cfg.params, make_clock(cfg));
  io::write_matrix_market((dir / "U.mtx").string(), result.u);
  io::write_matrix_market((dir / "V.mtx").string(), result.v);
  io::write_trace_csv((dir / "trace.csv").string(), result.trace);
  print_run_summary(result);
  return result.stop_reason == StopReason::numeric_failure ? 1 : 0;
}

int cmd_beta_sweep(const ExperimentConfig& cfg) {
  check_solver_params(cfg);
  if (cfg.betas.empty()) {
    throw UsageError("beta-sweep: --betas must name at least one value");
  }
  const Matrix m = load_input(cfg);
  const fs::path dir = ensure_out_dir(cfg);
  const Clock clock = make_clock(cfg);

  const int n = static_cast<int>(cfg.betas.size());
  std::vector<NmdResult> results(static_cast<std::size_t>(n));
  run_indexed(n, cfg.workers, [&](int i) {
    NmdParams p = cfg.params;
    p.beta = cfg.betas[static_cast<std::size_t>(i)];
    p.alpha = p.beta;  // the sweep ties the two momentum weights together
    NmdResult r = fit(m, p, clock);
    io::write_trace_csv(
        (dir / ("trace_beta_" + number_tag(p.beta) + ".csv")).string(),
        r.trace);
    results[static_cast<std::size_t>(i)] = std::move(r);
  });

  std::ofstream summary(dir / "beta_sweep_summary.csv");
  if (!summary) {
    throw IoError("cannot open beta_sweep_summary.csv for writing");
  }
  summary << "beta,final_rel_error\n";
  bool failed = false;
  char buffer[96];
  for (int i = 0; i < n; ++i) {
    const NmdResult& r = results[static_cast<std::size_t>(i)];
    std::snprintf(buffer, sizeof(buffer), "%g,%.12g\n",
                  cfg.betas[static_cast<std::size_t>(i)],
                  r.trace.back().rel_error);
    summary << buffer;
    std::printf("beta=%g ", cfg.betas[static_cast<std::size_t>(i)]);
    print_run_summary(r);
    failed = failed || r.stop_reason == StopReason::numeric_failure;
  }
  if (!summary.good()) {
    throw IoError("write failed for beta_sweep_summary.csv");
  }
  return failed ? 1 : 0;
}

int cmd_rank_sweep(const ExperimentConfig& cfg) {
  check_solver_params(cfg);
  if (cfg.ranks.empty()) {
    throw UsageError("rank-sweep: --ranks must name at least one value");
  }
  for (const Index r : cfg.ranks) {
    if (r < 1) {
      throw UsageError("rank-sweep: rank " + std::to_string(r) +
                       " is not positive");
    }
  }
  const Matrix m = load_input(cfg);
  const fs::path dir = ensure_out_dir(cfg);
  const Clock clock = make_clock(cfg);
  const Index limit = std::min(m.rows(), m.cols());

  const int n = static_cast<int>(cfg.ranks.size());
  std::vector<NmdResult> results(static_cast<std::size_t>(n));
  std::vector<bool> skipped(static_cast<std::size_t>(n), false);
  for (int i = 0; i < n; ++i) {
    if (cfg.ranks[static_cast<std::size_t>(i)] > limit) {
      skipped[static_cast<std::size_t>(i)] = true;
      std::fprintf(stderr,
                   "warning: rank %lld exceeds min(rows, cols) = %lld; "
                   "skipped\n",
                   static_cast<long long>(
                       cfg.ranks[static_cast<std::size_t>(i)]),
                   static_cast<long long>(limit));
    }
  }
  run_indexed(n, cfg.workers, [&](int i) {
    if (skipped[static_cast<std::size_t>(i)]) {
      return;
    }
    NmdParams p = cfg.params;
    p.rank = cfg.ranks[static_cast<std::size_t>(i)];
    NmdResult r = fit(m, p, clock);
    io::write_trace_csv(
        (dir / ("trace_rank_" + std::to_string(p.rank) + ".csv")).string(),
        r.trace);
    results[static_cast<std::size_t>(i)] = std::move(r);
  });

  std::ofstream summary(dir / "rank_sweep_summary.csv");
  if (!summary) {
    throw IoError("cannot open rank_sweep_summary.csv for writing");
  }
  summary << "rank,rel_error,mean_iter_seconds\n";
  bool failed = false;
  char buffer[128];
  for (int i = 0; i < n; ++i) {
    const Index rank = cfg.ranks[static_cast<std::size_t>(i)];
    if (skipped[static_cast<std::size_t>(i)]) {
      summary << rank << ",,\n";
      continue;
    }
    const NmdResult& r = results[static_cast<std::size_t>(i)];
    const TraceRecord& last = r.trace.back();
    const double mean_iter =
        last.k > 0
            ? (last.seconds - r.trace.records.front().seconds) / last.k
            : 0.0;
    std::snprintf(buffer, sizeof(buffer), "%lld,%.12g,%.9g\n",
                  static_cast<long long>(rank), last.rel_error, mean_iter);
    summary << buffer;
    std::printf("rank=%lld ", static_cast<long long>(rank));
    print_run_summary(r);
    failed = failed || r.stop_reason == StopReason::numeric_failure;
  }
  if (!summary.good()) {
    throw IoError("write failed for rank_sweep_summary.csv");
  }
  return failed ? 1 : 0;
}

int cmd_compare(const ExperimentConfig& cfg) {
  if (cfg.trace_inputs.size() < 2) {
    throw UsageError("compare: need at least two trace CSVs");
  }
  std::vector<ConvergenceTrace> traces;
  traces.reserve(cfg.trace_inputs.size());
  for (const std::string& path : cfg.trace_inputs) {
    ConvergenceTrace t = io::read_trace_csv(path);
    if (t.empty()) {
      throw IoError(path + ": trace has no records");
    }
    traces.push_back(std::move(t));
  }

  double tol_min = traces.front().back().rel_error;
  for (const ConvergenceTrace& t : traces) {
    tol_min = std::min(tol_min, t.back().rel_error);
  }

  const fs::path dir = ensure_out_dir(cfg);
  std::set<std::string> used;
  std::ofstream summary(dir / "compare_summary.csv");
  if (!summary) {
    throw IoError("cannot open compare_summary.csv for writing");
  }
  summary << "trace,final_rel_error,final_tol\n";
  std::printf("tol_min=%.12g\n", tol_min);
  char buffer[512];
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const fs::path input(cfg.trace_inputs[i]);
    std::string stem = input.stem().string();
    int suffix = 2;
    while (!used.insert(stem).second) {
      stem = input.stem().string() + "_" + std::to_string(suffix++);
    }
    write_trace_with_tol(dir / (stem + "_tol.csv"), traces[i], tol_min);
    const double final_error = traces[i].back().rel_error;
    std::snprintf(buffer, sizeof(buffer), "%s,%.12g,%.12g\n",
                  input.filename().string().c_str(), final_error,
                  final_error - tol_min);
    summary << buffer;
    std::printf("%s final_rel_error=%.12g tol=%.12g\n",
                input.filename().string().c_str(), final_error,
                final_error - tol_min);
  }
  if (!summary.good()) {
    throw IoError("write failed for compare_summary.csv");
  }
  return 0;
}

int cmd_nmf_compress(const ExperimentConfig& cfg) {
  check_solver_params(cfg);
  if (cfg.ranks.empty()) {
    throw UsageError("nmf-compress: --ranks must name at least one value");
  }
  const Matrix m = load_input(cfg);
  const fs::path dir = ensure_out_dir(cfg);

  const NmfFactors factors =
      nmf_hals(m, cfg.nmf_rank, cfg.nmf_sweeps, cfg.params.seed);
  const double nmf_error =
      (m - factors.w_basis * factors.h_coef).norm() / m.norm();
  std::printf("nmf rank=%lld rel_error=%.12g\n",
              static_cast<long long>(cfg.nmf_rank), nmf_error);

  const int grid_cols = static_cast<int>(
      std::ceil(std::sqrt(static_cast<double>(factors.w_basis.cols()))));
  if (cfg.montage) {
    io::write_pgm((dir / "montage_original.pgm").string(),
                  render_montage(factors.w_basis, cfg.tile_height,
                                 cfg.tile_width, grid_cols));
  }

  const CompressMethod methods[] = {CompressMethod::nmd_tm,
                                    CompressMethod::tsvd};
  const int n = static_cast<int>(cfg.ranks.size()) * 2;
  std::vector<CompressionReport> rows(static_cast<std::size_t>(n));
  std::vector<Matrix> approx(static_cast<std::size_t>(n));
  run_indexed(n, cfg.workers, [&](int i) {
    const Index rank = cfg.ranks[static_cast<std::size_t>(i) / 2];
    const CompressMethod method = methods[i % 2];
    const double t0 = now_seconds(cfg);
    BasisCompression bc =
        compress_basis(factors.w_basis, rank, method, cfg.params);
    bc.report.tol_nmf = tol_nmf(m, bc.approx, cfg.nmf_sweeps);
    bc.report.seconds = now_seconds(cfg) - t0;
    rows[static_cast<std::size_t>(i)] = bc.report;
    approx[static_cast<std::size_t>(i)] = std::move(bc.approx);
  });

  for (int i = 0; i < n; ++i) {
    const CompressionReport& row = rows[static_cast<std::size_t>(i)];
    std::printf("method=%s rank=%lld basis_rel_error=%.12g tol_nmf=%.12g\n",
                to_string(row.method), static_cast<long long>(row.rank),
                row.basis_rel_error, row.tol_nmf);
    if (cfg.montage) {
      const std::string name = std::string("montage_") +
                               to_string(row.method) + "_r" +
                               std::to_string(row.rank) + ".pgm";
      io::write_pgm((dir / name).string(),
                    render_montage(approx[static_cast<std::size_t>(i)],
                                   cfg.tile_height, cfg.tile_width,
                                   grid_cols));
    }
  }
  write_compression_report_csv((dir / "nmf_compress_report.csv").string(),
                               rows);
  return 0;
}

int cmd_plot_script(const ExperimentConfig& cfg) {
  const fs::path dir = ensure_out_dir(cfg);
  std::ofstream out(dir / "plot_traces.py");
  if (!out) {
    throw IoError("cannot open plot_traces.py for writing");
  }
  out << "#!/usr/bin/env python3\n"
         "\"\"\"Plot solver trace CSVs (k,seconds,rel_error,objective).\n"
         "\n"
         "Usage: python3 plot_traces.py trace1.csv [trace2.csv ...]\n"
         "\"\"\"\n"
         "import csv\n"
         "import sys\n"
         "\n"
         "import matplotlib.pyplot as plt\n"
         "\n"
         "fig, (left, right) = plt.subplots(1, 2, figsize=(11, 4))\n"
         "for path in sys.argv[1:]:\n"
         "    with open(path) as handle:\n"
         "        rows = list(csv.DictReader(handle))\n"
         "    k = [int(r['k']) for r in rows]\n"
         "    seconds = [float(r['seconds']) for r in rows]\n"
         "    err = [float(r['rel_error']) for r in rows]\n"
         "    left.semilogy(k, err, label=path)\n"
         "    right.semilogy(seconds, err, label=path)\n"
         "left.set_xlabel('iteration')\n"
         "left.set_ylabel('relative error')\n"
         "right.set_xlabel('seconds')\n"
         "left.legend(fontsize=7)\n"
         "fig.tight_layout()\n"
         "fig.savefig('traces.png', dpi=150)\n"
         "print('wrote traces.png')\n";
  if (!out.good()) {
    throw IoError("write failed for plot_traces.py");
  }
  std::printf("wrote %s\n", (dir / "plot_traces.py").string().c_str());
  return 0;
}

int run_cli(int argc, const char* const* argv) {
  ExperimentConfig cfg;
  if (const char* env = std::getenv("THREADS")) {
    cfg.workers = std::max(1, std::atoi(env));
  }

  CLI::App app{
      "Momentum-accelerated ReLU decomposition experiments: fit low-rank "
      "X = UV with max(0, X) close to a sparse nonnegative matrix"};
  app.require_subcommand(1);

  const std::map<std::string, io::DataFormat> format_names{
      {"idx", io::DataFormat::idx},
      {"mtx", io::DataFormat::matrix_market},
      {"csv", io::DataFormat::csv}};
  std::string clock_mode = "wall";
  bool raw_pixels = false;

  auto add_data_flags = [&](CLI::App* sub) {
    sub->add_option("--input", cfg.dataset.path, "input matrix file")
        ->required();
    sub->add_option("--format", cfg.dataset.format,
                    "input format; sniffed from the file when omitted")
        ->transform(CLI::CheckedTransformer(format_names));
    sub->add_option("--labels", cfg.labels_path,
                    "IDX1 label file for --per-class; derived from --input "
                    "when omitted");
    sub->add_option("--per-class", cfg.per_class,
                    "keep the first N samples of each label value")
        ->check(CLI::NonNegativeNumber);
    sub->add_flag("--raw", raw_pixels,
                  "keep IDX pixel bytes as 0..255 instead of scaling to "
                  "[0, 1]");
  };
  auto add_out_flags = [&](CLI::App* sub) {
    sub->add_option("--out", cfg.out_dir, "output directory")
        ->capture_default_str();
    sub->add_option("--clock", clock_mode,
                    "trace timestamps: wall clock, or none for "
                    "byte-reproducible output")
        ->check(CLI::IsMember({"wall", "none"}))
        ->capture_default_str();
  };
  auto add_solver_flags = [&](CLI::App* sub, bool with_rank) {
    if (with_rank) {
      sub->add_option("--rank", cfg.params.rank, "factorization rank")
          ->required()
          ->check(CLI::PositiveNumber);
    }
    sub->add_option("--alpha", cfg.params.alpha,
                    "extrapolation weight for W and X, in [0, 1)")
        ->capture_default_str();
    sub->add_option("--beta", cfg.params.beta,
                    "combination weight for U and V, in (0, 1]")
        ->capture_default_str();
    sub->add_option("--lambda", cfg.params.lambda, "Tikhonov weight")
        ->capture_default_str();
    sub->add_option("--max-iters", cfg.params.max_iters, "iteration cap")
        ->capture_default_str();
    sub->add_option("--time-budget", cfg.params.time_limit_seconds,
                    "soft wall-clock budget in seconds; the in-flight "
                    "iteration finishes");
    sub->add_option("--rel-tol", cfg.params.rel_change_tol,
                    "stop after 5 consecutive relative-error changes below "
                    "this");
    sub->add_option("--seed", cfg.params.seed,
                    "seed for every randomized piece")
        ->capture_default_str();
  };

  CLI::App* decompose = app.add_subcommand(
      "decompose", "one fit; writes U.mtx, V.mtx and trace.csv");
  add_data_flags(decompose);
  add_solver_flags(decompose, true);
  add_out_flags(decompose);

  CLI::App* beta_sweep = app.add_subcommand(
      "beta-sweep", "one fit per beta with alpha = beta; writes per-beta "
                    "traces and a summary CSV");
  add_data_flags(beta_sweep);
  add_solver_flags(beta_sweep, true);
  add_out_flags(beta_sweep);
  beta_sweep
      ->add_option("--betas", cfg.betas, "beta values to sweep")
      ->delimiter(',');
  cfg.betas = {0.01, 0.1, 0.3, 0.45, 0.6, 0.75, 0.9, 0.95};

  CLI::App* rank_sweep = app.add_subcommand(
      "rank-sweep", "one fit per rank; writes per-rank traces and a "
                    "summary CSV");
  add_data_flags(rank_sweep);
  add_solver_flags(rank_sweep, false);
  add_out_flags(rank_sweep);
  rank_sweep->add_option("--ranks", cfg.ranks, "rank values to sweep")
      ->required()
      ->delimiter(',');

  CLI::App* compare = app.add_subcommand(
      "compare", "align two or more trace CSVs on the best final error and "
                 "add a tol column to each");
  compare
      ->add_option("traces", cfg.trace_inputs,
                   "trace CSVs produced here or by other tools")
      ->expected(-1);
  add_out_flags(compare);

  CLI::App* nmf_compress = app.add_subcommand(
      "nmf-compress", "factor the data with a nonnegative basis, compress "
                      "the basis at each rank, report downstream error");
  add_data_flags(nmf_compress);
  add_solver_flags(nmf_compress, false);
  add_out_flags(nmf_compress);
  nmf_compress
      ->add_option("--ranks", cfg.ranks, "compression ranks for the basis")
      ->required()
      ->delimiter(',');
  nmf_compress
      ->add_option("--nmf-rank", cfg.nmf_rank, "inner rank of the basis")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  nmf_compress
      ->add_option("--nmf-sweeps", cfg.nmf_sweeps,
                   "HALS sweeps for the factorization and each refit")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  std::vector<int> montage_dims;
  nmf_compress
      ->add_option("--montage", montage_dims,
                   "also write basis montages; takes tile HEIGHT,WIDTH")
      ->expected(2)
      ->delimiter(',');

  CLI::App* plot_script = app.add_subcommand(
      "plot-script", "write a small python stub that plots trace CSVs");
  add_out_flags(plot_script);

  try {
    app.parse(argc, argv);
    cfg.zero_clock = clock_mode == "none";
    cfg.dataset.normalization = raw_pixels ? io::Normalization::raw
                                           : io::Normalization::unit_scale;
    if (!montage_dims.empty()) {
      cfg.montage = true;
      cfg.tile_height = montage_dims[0];
      cfg.tile_width = montage_dims[1];
      if (cfg.tile_height < 1 || cfg.tile_width < 1) {
        throw UsageError("--montage tile dimensions must be positive");
      }
    }

    if (decompose->parsed()) {
      return cmd_decompose(cfg);
    }
    if (beta_sweep->parsed()) {
      return cmd_beta_sweep(cfg);
    }
    if (rank_sweep->parsed()) {
      return cmd_rank_sweep(cfg);
    }
    if (compare->parsed()) {
      return cmd_compare(cfg);
    }
    if (nmf_compress->parsed()) {
      return cmd_nmf_compress(cfg);
    }
    if (plot_script->parsed()) {
      return cmd_plot_script(cfg);
    }
    std::fprintf(stderr, "error: no subcommand\n");
    return 2;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exits 0
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace relunmd::cli

#ifndef RELUNMD_TOOLS_CLI_HPP
#define RELUNMD_TOOLS_CLI_HPP

#include <string>
#include <vector>

#include "relunmd/io.hpp"
#include "relunmd/solver.hpp"

namespace relunmd::cli {

// Everything a subcommand needs, filled in by flag parsing. Commands are
// split out so tests can drive them without spawning a process.
struct ExperimentConfig {
  io::DatasetHandle dataset;
  std::string labels_path;  // IDX1 labels; derived from --input when empty
  NmdParams params;
  std::vector<double> betas;  // sweep points, alpha = beta for each
  std::vector<Index> ranks;   // rank sweep / compression rank list
  Index per_class = -1;       // rows kept per label value; < 0 keeps all
  std::string out_dir = ".";
  std::vector<std::string> trace_inputs;  // compare: trace CSVs to align
  Index nmf_rank = 100;
  int nmf_sweeps = 500;
  bool montage = false;
  int tile_height = 0;
  int tile_width = 0;
  bool zero_clock = false;  // --clock none: all seconds columns print 0
  int workers = 1;          // THREADS env, worker slots for sweep points
};

int cmd_decompose(const ExperimentConfig& cfg);
int cmd_beta_sweep(const ExperimentConfig& cfg);
int cmd_rank_sweep(const ExperimentConfig& cfg);
int cmd_compare(const ExperimentConfig& cfg);
int cmd_nmf_compress(const ExperimentConfig& cfg);
int cmd_plot_script(const ExperimentConfig& cfg);

/// Parses argv and dispatches. Exit status 0 on success, 1 on runtime or
/// data errors, 2 on usage errors.
int run_cli(int argc, const char* const* argv);

}  // namespace relunmd::cli

#endif

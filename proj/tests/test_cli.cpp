#include <doctest.h>

#include <string>

#include <relunmd/io.hpp>
#include <relunmd/matrix.hpp>
#include <relunmd/solver.hpp>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using relunmd::Matrix;
namespace io = relunmd::io;

namespace {

std::string cli() { return RELUNMD_CLI_PATH; }

std::string example1_csv() {
  return std::string(RELUNMD_TEST_DATA_DIR) + "/example1_m.csv";
}

// Single worker keeps subprocess output deterministic.
testsupport::ProcessResult run_cli(const std::string& args) {
  return testsupport::run_process("THREADS=1 " + cli() + " " + args);
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("usage problems exit with code 2") {
  SUBCASE("missing subcommand") {
    const auto r = run_cli("");
    CHECK(r.exit_code == 2);
  }
  SUBCASE("unknown flag") {
    const auto r = run_cli("decompose --input x.csv --rank 2 --frobulate");
    CHECK(r.exit_code == 2);
  }
  SUBCASE("non-positive rank") {
    const auto r =
        run_cli("decompose --input " + example1_csv() + " --rank 0");
    CHECK(r.exit_code == 2);
  }
  SUBCASE("compare with fewer than two traces") {
    testsupport::TempDir dir;
    testsupport::write_file_bytes(dir.file("t.csv"),
                                  "k,seconds,rel_error,objective\n0,0,1,1\n");
    const auto r = run_cli("compare " + dir.file("t.csv"));
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("two trace") != std::string::npos);
  }
  SUBCASE("help exits cleanly") {
    const auto r = run_cli("--help");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("Usage") != std::string::npos);
  }
}

TEST_CASE("a missing input file exits with code 1") {
  const auto r =
      run_cli("decompose --input /nonexistent/nowhere.csv --rank 2");
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("error:") != std::string::npos);
}

TEST_CASE("decompose writes factors and a trace") {
  testsupport::TempDir dir;
  const auto r = run_cli("decompose --input " + example1_csv() +
                         " --rank 2 --lambda 1e-8 --max-iters 500 --out " +
                         dir.path());
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("rel_error=") != std::string::npos);
  CHECK(r.output.find("stop_reason=") != std::string::npos);

  const Matrix u = io::read_matrix_market(dir.file("U.mtx"));
  const Matrix v = io::read_matrix_market(dir.file("V.mtx"));
  REQUIRE(u.rows() == 5);
  REQUIRE(u.cols() == 2);
  REQUIRE(v.rows() == 2);
  REQUIRE(v.cols() == 5);

  const auto trace = io::read_trace_csv(dir.file("trace.csv"));
  REQUIRE(trace.records.size() == 501);
  CHECK(trace.records.front().k == 0);
  CHECK(trace.back().k == 500);
  // The sparse 5x5 example should be well into convergence by then.
  CHECK(trace.back().rel_error < 1e-2);

  // The written factors carry the solution: their clipped product's error
  // tracks the traced final value (the trace is measured at the
  // extrapolated iterate, so the two agree only approximately).
  const Matrix m = io::read_csv(example1_csv());
  const double err = (m - relunmd::relu(u * v)).norm() / m.norm();
  CHECK(err == doctest::Approx(trace.back().rel_error).epsilon(0.05));
}

TEST_CASE("the trace is byte-reproducible with the clock disabled") {
  testsupport::TempDir dir;
  const std::string args = "decompose --input " + example1_csv() +
                           " --rank 2 --max-iters 40 --seed 11 --clock none";
  REQUIRE(run_cli(args + " --out " + dir.file("one")).exit_code == 0);
  REQUIRE(run_cli(args + " --out " + dir.file("two")).exit_code == 0);
  CHECK(testsupport::read_file_bytes(dir.file("one") + "/trace.csv") ==
        testsupport::read_file_bytes(dir.file("two") + "/trace.csv"));
}

TEST_CASE("beta-sweep ties alpha to beta and matches a plain run") {
  testsupport::TempDir dir;
  REQUIRE(run_cli("beta-sweep --input " + example1_csv() +
                  " --rank 2 --betas 0.6 --max-iters 30 --clock none --out " +
                  dir.file("sweep"))
              .exit_code == 0);
  REQUIRE(run_cli("decompose --input " + example1_csv() +
                  " --rank 2 --alpha 0.6 --beta 0.6 --max-iters 30 "
                  "--clock none --out " +
                  dir.file("plain"))
              .exit_code == 0);
  CHECK(testsupport::read_file_bytes(dir.file("sweep") +
                                     "/trace_beta_0.6.csv") ==
        testsupport::read_file_bytes(dir.file("plain") + "/trace.csv"));
}

TEST_CASE("beta-sweep summarises one row per beta") {
  testsupport::TempDir dir;
  const auto r = run_cli("beta-sweep --input " + example1_csv() +
                         " --rank 2 --betas 0.95,0.3 --max-iters 30 --out " +
                         dir.path());
  REQUIRE(r.exit_code == 0);
  const std::string summary =
      testsupport::read_file_bytes(dir.file("beta_sweep_summary.csv"));
  CHECK(summary.rfind("beta,final_rel_error\n", 0) == 0);
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 3);
  CHECK(io::read_trace_csv(dir.file("trace_beta_0.95.csv")).records.size() ==
        31);
  CHECK(io::read_trace_csv(dir.file("trace_beta_0.3.csv")).records.size() ==
        31);
}

TEST_CASE("rank-sweep skips oversized ranks with a warning") {
  testsupport::TempDir dir;
  const auto r = run_cli("rank-sweep --input " + example1_csv() +
                         " --ranks 1,2,99 --max-iters 20 --out " + dir.path());
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("rank 99 exceeds") != std::string::npos);
  const std::string summary =
      testsupport::read_file_bytes(dir.file("rank_sweep_summary.csv"));
  CHECK(summary.rfind("rank,rel_error,mean_iter_seconds\n", 0) == 0);
  CHECK(summary.find("99,,\n") != std::string::npos);
  CHECK(io::read_trace_csv(dir.file("trace_rank_2.csv")).records.size() == 21);
}

TEST_CASE("compare normalises traces against the best final error") {
  testsupport::TempDir dir;
  testsupport::write_file_bytes(dir.file("a.csv"),
                                "k,seconds,rel_error,objective\n"
                                "0,0,0.5,8\n1,0.1,0.1,2\n");
  testsupport::write_file_bytes(dir.file("b.csv"),
                                "k,seconds,rel_error,objective\n"
                                "0,0,0.6,9\n1,0.1,0.12,3\n");
  const auto r = run_cli("compare " + dir.file("a.csv") + " " +
                         dir.file("b.csv") + " --out " + dir.file("cmp"));
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("tol_min=0.1\n") != std::string::npos);

  const std::string summary =
      testsupport::read_file_bytes(dir.file("cmp") + "/compare_summary.csv");
  CHECK(summary == "trace,final_rel_error,final_tol\n"
                   "a.csv,0.1,0\n"
                   "b.csv,0.12,0.02\n");

  const std::string tol_b =
      testsupport::read_file_bytes(dir.file("cmp") + "/b_tol.csv");
  CHECK(tol_b == "k,seconds,rel_error,objective,tol\n"
                 "0,0,0.6,9,0.5\n"
                 "1,0.1,0.12,3,0.02\n");
}

TEST_CASE("nmf-compress reports both methods at every rank") {
  testsupport::TempDir dir;
  const Matrix m = testsupport::make_sparse_nonneg(32, 30, 0.6, 5);
  const std::string input = dir.file("data.csv");
  io::write_csv(input, m);

  const auto r = run_cli("nmf-compress --input " + input +
                         " --nmf-rank 6 --nmf-sweeps 300 --ranks 3,6"
                         " --max-iters 300 --seed 3 --montage 8,4 --out " +
                         dir.file("out"));
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("nmf rank=6") != std::string::npos);

  const std::string report = testsupport::read_file_bytes(
      dir.file("out") + "/nmf_compress_report.csv");
  const auto rows = testsupport::split_lines(report);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "method,rank,basis_rel_error,tol_nmf,seconds");
  // Rank 6 spans the whole 32x6 basis, so its direct truncation is exact.
  bool saw_exact_tsvd = false;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto fields = testsupport::split_csv(rows[i]);
    REQUIRE(fields.size() == 5);
    const double basis_err = std::stod(fields[2]);
    const double tol = std::stod(fields[3]);
    CHECK(std::isfinite(basis_err));
    CHECK(std::isfinite(tol));
    CHECK(basis_err >= 0.0);
    if (fields[0] == "tsvd" && fields[1] == "6") {
      CHECK(basis_err <= 1e-10);
      saw_exact_tsvd = true;
    }
  }
  CHECK(saw_exact_tsvd);

  // The montages are valid PGMs with an 8x4 tile per basis column.
  const auto original =
      testsupport::oracle_parse_pgm(dir.file("out") + "/montage_original.pgm");
  CHECK(original.maxval == 255);
  CHECK(original.width >= 4);
  CHECK(original.height >= 8);
  const auto compressed = testsupport::oracle_parse_pgm(
      dir.file("out") + "/montage_nmd_tm_r3.pgm");
  CHECK(compressed.width == original.width);
  CHECK(compressed.height == original.height);
}

TEST_CASE("per-class selection flows through the dataset flags") {
  testsupport::TempDir dir;
  const auto corpus = testsupport::make_digit_corpus(3, 21);
  const std::string images = testsupport::write_corpus(dir.path(), corpus);
  const auto r = run_cli("decompose --input " + images +
                         " --per-class 2 --rank 3 --max-iters 5 --out " +
                         dir.file("out"));
  REQUIRE(r.exit_code == 0);
  // 10 classes x 2 samples, so U is 20 x rank.
  const Matrix u = io::read_matrix_market(dir.file("out") + "/U.mtx");
  CHECK(u.rows() == 20);
  CHECK(u.cols() == 3);
  CHECK(io::read_trace_csv(dir.file("out") + "/trace.csv").records.size() ==
        6);
}

TEST_CASE("plot-script writes a runnable python stub") {
  testsupport::TempDir dir;
  const auto r = run_cli("plot-script --out " + dir.path());
  REQUIRE(r.exit_code == 0);
  const std::string script =
      testsupport::read_file_bytes(dir.file("plot_traces.py"));
  CHECK(script.find("matplotlib") != std::string::npos);
  CHECK(script.find("rel_error") != std::string::npos);
}

TEST_SUITE_END();

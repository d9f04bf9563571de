#include "cli.hpp"

int main(int argc, char** argv) {
  return relunmd::cli::run_cli(argc, argv);
}

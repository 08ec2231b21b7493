#include "merotherm/cli.hpp"

int main(int argc, char** argv) { return merotherm::cli::run_cli(argc, argv); }

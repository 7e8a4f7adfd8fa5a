#include "cli.hpp"

int main(int argc, char** argv) { return condcov::cli::cli_main(argc, argv); }

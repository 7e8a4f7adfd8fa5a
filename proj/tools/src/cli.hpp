#pragma once

#include <iosfwd>

namespace condcov::cli {

// Exit codes: 0 success, 1 library error, 2 usage error, 3 unexpected failure.
int cli_main(int argc, char** argv);
int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace condcov::cli

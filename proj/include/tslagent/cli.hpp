#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tslagent::cli {

enum ExitCode : int
{
  Ok = 0,
  Failure = 1, // analysis errors and other failures
  ParseError = 2,
  Unrealizable = 3,
  VerificationFailed = 4,
  OracleFailure = 5,
  IoFailure = 6,
};

/// Runs one command; `args` excludes the program name.
int run( std::vector<std::string> const& args, std::istream& in, std::ostream& out, std::ostream& err );

} // namespace tslagent::cli

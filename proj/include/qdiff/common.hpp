#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qdiff {

enum class ErrorCode {
    Io,           // file missing / unreadable / malformed container
    Parse,        // CSV or JSON content errors
    Query,        // unknown relation/attribute, AVG over empty, ...
    Incomparable, // no attribute matches between the two queries
    Infeasible,   // solver reports no feasible assignment
    Invalid,      // bad configuration or out-of-contract arguments
};

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

enum class Side : std::uint8_t { Left = 0, Right = 1 };

inline const char* side_name(Side s) { return s == Side::Left ? "left" : "right"; }

// Execution mode for the data-parallel kernels. Serial is the reference
// implementation; Parallel uses OpenMP when compiled in and must produce
// identical results.
enum class ExecMode { Serial, Parallel };

std::string trim(const std::string& s);
std::string fold_case(const std::string& s);

} // namespace qdiff

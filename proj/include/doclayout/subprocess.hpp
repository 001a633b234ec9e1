#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace doclayout {

struct ProcessOptions {
  std::chrono::milliseconds timeout{30'000};
  // Standard output beyond this many bytes kills the child.
  std::size_t max_output = 10u * 1024u * 1024u;
  // Added to (or overriding) the parent environment.
  std::vector<std::pair<std::string, std::string>> env;
};

struct ProcessResult {
  int exit_code = -1;       // valid when !signaled && !timed_out
  bool signaled = false;    // terminated by a signal it did not get from us
  int signal = 0;
  bool timed_out = false;
  bool output_overflow = false;
  std::string out;          // standard output (truncated on overflow)
  std::string err_tail;     // last few KB of standard error

  bool ok() const { return !signaled && !timed_out && !output_overflow && exit_code == 0; }
};

// Runs argv[0] (searched on PATH) with argv[1..] and waits for it, killing it
// on timeout or output overflow. Throws Error when the process cannot be
// started at all.
ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& opts = {});

// Splits a command line on whitespace, honouring single and double quotes
// and backslash escapes outside single quotes.
std::vector<std::string> split_command(const std::string& command);

}  // namespace doclayout

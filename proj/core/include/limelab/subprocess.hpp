#pragma once

#include <string>

namespace limelab {

/// Child process with line-oriented stdin/stdout pipes. Commands run via
/// /bin/sh -c. Not copyable; the destructor closes the pipes and reaps.
class ChildProcess {
 public:
  explicit ChildProcess(const std::string& command);
  ~ChildProcess();

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  /// Writes one line (newline appended). Throws on a broken pipe.
  void write_line(const std::string& line);

  /// Reads one line (newline stripped). Throws on EOF.
  std::string read_line();

  /// Closes stdin, waits for exit, returns the exit status.
  int finish();

 private:
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  long pid_ = -1;
  std::string buffer_;
  bool finished_ = false;
};

}  // namespace limelab

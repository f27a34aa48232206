#include "limelab/subprocess.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstring>
#include <mutex>

#include "limelab/common.hpp"

namespace limelab {

ChildProcess::ChildProcess(const std::string& command) {
  // Broken pipes must surface as write errors, not SIGPIPE.
  static std::once_flag sigpipe_once;
  std::call_once(sigpipe_once, [] { std::signal(SIGPIPE, SIG_IGN); });

  int to_child[2];
  int from_child[2];
  if (pipe(to_child) != 0 || pipe(from_child) != 0)
    throw Error("ChildProcess: pipe() failed: " + std::string(std::strerror(errno)));

  const pid_t pid = fork();
  if (pid < 0) throw Error("ChildProcess: fork() failed: " + std::string(std::strerror(errno)));
  if (pid == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);
  stdin_fd_ = to_child[1];
  stdout_fd_ = from_child[0];
  pid_ = pid;
}

ChildProcess::~ChildProcess() {
  if (!finished_) {
    if (stdin_fd_ >= 0) close(stdin_fd_);
    if (stdout_fd_ >= 0) close(stdout_fd_);
    if (pid_ > 0) {
      int status = 0;
      waitpid(static_cast<pid_t>(pid_), &status, 0);
    }
  }
}

void ChildProcess::write_line(const std::string& line) {
  std::string out = line;
  out.push_back('\n');
  std::size_t written = 0;
  while (written < out.size()) {
    const ssize_t n = ::write(stdin_fd_, out.data() + written, out.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error("ChildProcess: write failed: " + std::string(std::strerror(errno)));
    }
    written += static_cast<std::size_t>(n);
  }
}

std::string ChildProcess::read_line() {
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    char chunk[4096];
    const ssize_t n = ::read(stdout_fd_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error("ChildProcess: read failed: " + std::string(std::strerror(errno)));
    }
    if (n == 0) throw Error("ChildProcess: unexpected EOF from child");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

int ChildProcess::finish() {
  if (finished_) return 0;
  finished_ = true;
  if (stdin_fd_ >= 0) close(stdin_fd_);
  if (stdout_fd_ >= 0) close(stdout_fd_);
  int status = 0;
  waitpid(static_cast<pid_t>(pid_), &status, 0);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace limelab

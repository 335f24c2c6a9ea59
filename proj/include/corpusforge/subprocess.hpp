#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <mutex>
#include <optional>
#include <streambuf>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "corpusforge/error.hpp"

extern char** environ;

namespace corpusforge {

struct ProcessSpec {
  std::vector<std::string> argv;
  /// Added to (or overriding) the parent's environment.
  std::vector<std::pair<std::string, std::string>> env;
  std::filesystem::path cwd;
};

/// `/bin/sh -c command`.
inline ProcessSpec shell_command(std::string command) {
  return ProcessSpec{{"/bin/sh", "-c", std::move(command)}, {}, {}};
}

struct ProcessResult {
  int exit_code = -1;    // valid when the child exited normally
  int term_signal = 0;   // nonzero when killed by a signal
  bool timed_out = false;
  bool cancelled = false;
  std::string out;
  std::string err;

  bool ok() const noexcept { return exit_code == 0 && term_signal == 0 && !timed_out && !cancelled; }

  std::string describe() const {
    if (timed_out) return "timed out";
    if (cancelled) return "cancelled";
    if (term_signal) return "killed by signal " + std::to_string(term_signal);
    return "exited with status " + std::to_string(exit_code);
  }
};

struct RunLimits {
  std::optional<std::chrono::steady_clock::time_point> deadline;
  const std::atomic<bool>* cancel = nullptr;
};

namespace detail {

inline void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

struct Fd {
  int fd = -1;
  Fd() = default;
  explicit Fd(int f) : fd(f) {}
  Fd(Fd&& o) noexcept : fd(std::exchange(o.fd, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    reset();
    fd = std::exchange(o.fd, -1);
    return *this;
  }
  ~Fd() { reset(); }
  void reset() {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }
};

inline std::pair<Fd, Fd> make_pipe() {
  int p[2];
  if (::pipe2(p, O_CLOEXEC) != 0) throw IoError(std::string("pipe: ") + std::strerror(errno));
  return {Fd(p[0]), Fd(p[1])};
}

// Environment block and argv prepared before fork(), so the child only calls
// async-signal-safe functions.
struct ExecImage {
  std::vector<std::string> env_storage;
  std::vector<char*> argv;
  std::vector<char*> envp;
  std::string cwd;

  explicit ExecImage(const ProcessSpec& spec) : cwd(spec.cwd.string()) {
    if (spec.argv.empty()) throw Error("empty command line");
    for (char** e = environ; e && *e; ++e) {
      std::string_view kv(*e);
      const auto eq = kv.find('=');
      const auto key = kv.substr(0, eq);
      const bool overridden = std::any_of(spec.env.begin(), spec.env.end(),
                                          [&](const auto& p) { return p.first == key; });
      if (!overridden) env_storage.emplace_back(kv);
    }
    for (const auto& [k, v] : spec.env) env_storage.push_back(k + "=" + v);
    for (auto& s : env_storage) envp.push_back(s.data());
    envp.push_back(nullptr);
    for (const auto& a : spec.argv) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
  }
};

inline pid_t spawn(ExecImage& image, int stdin_fd, int stdout_fd, int stderr_fd) {
  ignore_sigpipe();
  const pid_t pid = ::fork();
  if (pid < 0) throw IoError(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    ::signal(SIGPIPE, SIG_DFL);
    if (stdin_fd >= 0) ::dup2(stdin_fd, STDIN_FILENO);
    if (stdout_fd >= 0) ::dup2(stdout_fd, STDOUT_FILENO);
    if (stderr_fd >= 0) ::dup2(stderr_fd, STDERR_FILENO);
    if (!image.cwd.empty() && ::chdir(image.cwd.c_str()) != 0) ::_exit(126);
    ::execvpe(image.argv[0], image.argv.data(), image.envp.data());
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  return pid;
}

inline void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

inline void wait_child(pid_t pid, ProcessResult& result) {
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  if (WIFSIGNALED(status)) result.term_signal = WTERMSIG(status);
}

}  // namespace detail

/// Runs a child process, feeding `input` on stdin and capturing stdout and stderr.
/// The child runs in its own process group; on timeout or cancellation the whole
/// group is killed.
inline ProcessResult run_process(const ProcessSpec& spec, std::string_view input, RunLimits limits = {}) {
  using clock = std::chrono::steady_clock;
  detail::ExecImage image(spec);
  auto [in_r, in_w] = detail::make_pipe();
  auto [out_r, out_w] = detail::make_pipe();
  auto [err_r, err_w] = detail::make_pipe();

  const pid_t pid = detail::spawn(image, in_r.fd, out_w.fd, err_w.fd);
  in_r.reset();
  out_w.reset();
  err_w.reset();
  detail::set_nonblocking(in_w.fd);
  detail::set_nonblocking(out_r.fd);
  detail::set_nonblocking(err_r.fd);

  ProcessResult result;
  std::size_t written = 0;
  if (input.empty()) in_w.reset();
  char buf[1 << 16];
  bool killed = false;

  while (out_r.fd >= 0 || err_r.fd >= 0) {
    if (!killed) {
      const bool cancel = limits.cancel && limits.cancel->load(std::memory_order_relaxed);
      const bool expired = limits.deadline && clock::now() >= *limits.deadline;
      if (cancel || expired) {
        result.cancelled = cancel;
        result.timed_out = expired && !cancel;
        ::kill(-pid, SIGKILL);
        killed = true;
        in_w.reset();
      }
    }
    pollfd fds[3];
    int n = 0;
    int idx_in = -1, idx_out = -1, idx_err = -1;
    if (in_w.fd >= 0) fds[idx_in = n++] = {in_w.fd, POLLOUT, 0};
    if (out_r.fd >= 0) fds[idx_out = n++] = {out_r.fd, POLLIN, 0};
    if (err_r.fd >= 0) fds[idx_err = n++] = {err_r.fd, POLLIN, 0};
    int timeout_ms = 100;
    if (limits.deadline && !killed) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(*limits.deadline - clock::now()).count();
      timeout_ms = static_cast<int>(std::clamp<long long>(left, 0, 100));
    }
    const int rc = ::poll(fds, static_cast<nfds_t>(n), timeout_ms);
    if (rc < 0) {
      if (errno == EINTR) continue;
      ::kill(-pid, SIGKILL);
      detail::wait_child(pid, result);
      throw IoError(std::string("poll: ") + std::strerror(errno));
    }
    if (idx_in >= 0 && (fds[idx_in].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const ssize_t w = ::write(in_w.fd, input.data() + written, std::min<std::size_t>(input.size() - written, 1 << 16));
      if (w > 0) {
        written += static_cast<std::size_t>(w);
        if (written == input.size()) in_w.reset();
      } else if (w < 0 && errno != EAGAIN && errno != EINTR) {
        in_w.reset();  // child stopped reading (EPIPE)
      }
    }
    auto drain = [&](detail::Fd& fd, std::string& sink) {
      for (;;) {
        const ssize_t r = ::read(fd.fd, buf, sizeof buf);
        if (r > 0) {
          sink.append(buf, static_cast<std::size_t>(r));
          continue;
        }
        if (r == 0) fd.reset();
        else if (errno != EAGAIN && errno != EINTR) fd.reset();
        break;
      }
    };
    if (idx_out >= 0 && (fds[idx_out].revents & (POLLIN | POLLHUP | POLLERR))) drain(out_r, result.out);
    if (idx_err >= 0 && (fds[idx_err].revents & (POLLIN | POLLHUP | POLLERR))) drain(err_r, result.err);
  }
  in_w.reset();
  detail::wait_child(pid, result);
  return result;
}

/// A long-lived child that consumes whatever we write to its stdin (a trainer fed
/// from the scheduler). Its stdout and stderr are inherited.
class ChildSink {
 public:
  explicit ChildSink(const ProcessSpec& spec) {
    detail::ExecImage image(spec);
    auto [r, w] = detail::make_pipe();
    pid_ = detail::spawn(image, r.fd, -1, -1);
    write_ = std::move(w);
  }
  ChildSink(const ChildSink&) = delete;
  ChildSink& operator=(const ChildSink&) = delete;
  ~ChildSink() {
    if (pid_ > 0) {
      write_.reset();
      ProcessResult ignored;
      detail::wait_child(pid_, ignored);
    }
  }

  /// Returns false once the child has closed its end.
  bool write(std::string_view data) {
    while (!data.empty()) {
      const ssize_t w = ::write(write_.fd, data.data(), data.size());
      if (w < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      data.remove_prefix(static_cast<std::size_t>(w));
    }
    return true;
  }

  /// Closes stdin and waits for the child to exit.
  ProcessResult finish() {
    write_.reset();
    ProcessResult result;
    detail::wait_child(pid_, result);
    pid_ = -1;
    return result;
  }

 private:
  pid_t pid_ = -1;
  detail::Fd write_;
};

/// std::streambuf adapter so a ChildSink can back a std::ostream.
class ChildSinkBuf : public std::streambuf {
 public:
  explicit ChildSinkBuf(ChildSink& sink) : sink_(sink) { setp(buffer_, buffer_ + sizeof buffer_); }
  ~ChildSinkBuf() override { sync(); }

 protected:
  int_type overflow(int_type ch) override {
    if (sync() != 0) return traits_type::eof();
    if (!traits_type::eq_int_type(ch, traits_type::eof())) {
      *pptr() = traits_type::to_char_type(ch);
      pbump(1);
    }
    return traits_type::not_eof(ch);
  }

  int sync() override {
    const auto n = static_cast<std::size_t>(pptr() - pbase());
    if (n && !sink_.write(std::string_view(pbase(), n))) return -1;
    setp(buffer_, buffer_ + sizeof buffer_);
    return 0;
  }

 private:
  ChildSink& sink_;
  char buffer_[1 << 16];
};

}  // namespace corpusforge

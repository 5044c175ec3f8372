#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <mutex>
#include <sstream>

#include "chartloom/util/strings.hpp"
#include "chartloom/viz/renderer.hpp"

namespace fs = std::filesystem;

namespace chartloom::viz {

namespace {

class Fd {
public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Fd& operator=(Fd&& other) noexcept {
    reset();
    fd_ = std::exchange(other.fd_, -1);
    return *this;
  }
  ~Fd() { reset(); }
  int get() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

private:
  int fd_ = -1;
};

// Worker process with its stdin/stdout piped; killed and reaped on scope exit.
class Worker {
public:
  explicit Worker(const std::vector<std::string>& argv) {
    int in_pipe[2], out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0 || ::pipe2(out_pipe, O_CLOEXEC) != 0) {
      throw RendererError(std::string("pipe: ") + std::strerror(errno));
    }
    // Built before fork: the child may only make async-signal-safe calls.
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    pid_ = ::fork();
    if (pid_ < 0) throw RendererError(std::string("fork: ") + std::strerror(errno));
    if (pid_ == 0) {
      ::dup2(in_pipe[0], STDIN_FILENO);
      ::dup2(out_pipe[1], STDOUT_FILENO);
      ::execvp(args[0], args.data());
      ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    stdin_ = Fd(in_pipe[1]);
    stdout_ = Fd(out_pipe[0]);
  }

  Worker(const Worker&) = delete;
  Worker& operator=(const Worker&) = delete;

  ~Worker() {
    stdin_.reset();
    stdout_.reset();
    if (pid_ > 0) {
      int status = 0;
      if (::waitpid(pid_, &status, WNOHANG) == 0) {
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, &status, 0);
      }
    }
  }

  void send_line(const std::string& line) {
    std::string data = line + "\n";
    const char* p = data.data();
    std::size_t left = data.size();
    while (left > 0) {
      auto n = ::write(stdin_.get(), p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw RendererError(std::string("sandbox write failed: ") + std::strerror(errno));
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
    stdin_.reset();
  }

  // First line of output, or throws when the deadline passes or the worker
  // closes stdout without a newline-terminated reply.
  std::string read_line(std::chrono::steady_clock::time_point deadline) {
    std::string buffer;
    char chunk[4096];
    for (;;) {
      if (auto nl = buffer.find('\n'); nl != std::string::npos) return buffer.substr(0, nl);
      auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (remaining.count() <= 0) throw RendererError("sandbox did not reply before the deadline");
      pollfd pfd{stdout_.get(), POLLIN, 0};
      int rc = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw RendererError(std::string("poll: ") + std::strerror(errno));
      }
      if (rc == 0) continue;
      auto n = ::read(stdout_.get(), chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw RendererError(std::string("sandbox read failed: ") + std::strerror(errno));
      }
      if (n == 0) throw RendererError("sandbox exited without a reply" + exit_note());
      buffer.append(chunk, static_cast<std::size_t>(n));
    }
  }

private:
  std::string exit_note() {
    int status = 0;
    if (::waitpid(pid_, &status, 0) == pid_) {
      pid_ = -1;
      if (WIFEXITED(status)) return " (exit code " + std::to_string(WEXITSTATUS(status)) + ")";
      if (WIFSIGNALED(status)) return " (signal " + std::to_string(WTERMSIG(status)) + ")";
    }
    return {};
  }

  pid_t pid_ = -1;
  Fd stdin_;
  Fd stdout_;
};

}  // namespace

SandboxRenderer::SandboxRenderer(std::string command, std::chrono::seconds grace) : grace_(grace) {
  // A worker that exits early must not take the process down with SIGPIPE.
  static std::once_flag ignore_sigpipe;
  std::call_once(ignore_sigpipe, [] { ::signal(SIGPIPE, SIG_IGN); });
  std::istringstream in(command);
  std::string arg;
  while (in >> arg) argv_.push_back(arg);
  if (argv_.empty()) throw ConfigError("sandbox command is empty");
}

nlohmann::ordered_json SandboxRenderer::job_json(const std::string& code, const fs::path& workdir, const fs::path& output_path,
                                         std::chrono::seconds timeout) {
  nlohmann::ordered_json job;
  job["code"] = code;
  job["workdir"] = workdir.string();
  job["output_path"] = output_path.string();
  job["timeout_s"] = timeout.count();
  return job;
}

RenderOutcome SandboxRenderer::interpret_reply(const std::string& line) {
  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw RendererError(std::string("malformed sandbox reply: ") + e.what());
  }
  if (!reply.is_object() || !reply.contains("status") || !reply.at("status").is_string()) {
    throw RendererError("sandbox reply lacks a status");
  }
  const auto status = reply.at("status").get<std::string>();
  const auto stderr_text = reply.value("stderr", std::string{});
  if (status == "ok") {
    if (!reply.contains("image_path") || !reply.at("image_path").is_string()) {
      throw RendererError("sandbox reported ok without image_path");
    }
    const auto path = reply.at("image_path").get<std::string>();
    std::error_code ec;
    if (!fs::exists(path, ec) || fs::file_size(path, ec) == 0) {
      throw RendererError("sandbox reported ok but image is missing or empty: " + path);
    }
    auto bytes = util::read_file(path);
    return RenderOutcome::ok(gateway::Bytes(bytes.begin(), bytes.end()));
  }
  if (status == "timeout") return RenderOutcome::failed(stderr_text.empty() ? "timeout" : "timeout: " + stderr_text);
  if (status == "error") return RenderOutcome::failed(stderr_text.empty() ? "error" : stderr_text);
  throw RendererError("unknown sandbox status '" + status + "'");
}

RenderOutcome SandboxRenderer::render(const std::string& code, const fs::path& workdir, std::chrono::seconds timeout) {
  if (timeout.count() <= 0 || timeout > kMaxRenderTimeout) {
    throw PreconditionError("render timeout must be within 1.." + std::to_string(kMaxRenderTimeout.count()) + " s");
  }
  std::error_code ec;
  fs::create_directories(workdir, ec);
  if (ec) throw RendererError("cannot create workdir " + workdir.string() + ": " + ec.message());
  const auto abs_workdir = fs::absolute(workdir);
  const auto output_path = abs_workdir / "chart.png";

  Worker worker(argv_);
  worker.send_line(job_json(code, abs_workdir, output_path, timeout).dump());
  auto line = worker.read_line(std::chrono::steady_clock::now() + timeout + grace_);
  return interpret_reply(line);
}

}  // namespace chartloom::viz

#include "zmono/enhancer.hpp"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <thread>

namespace zmono {
namespace fs = std::filesystem;
namespace {

std::string substitute(std::string s, const std::string& key, const std::string& value) {
  for (std::size_t pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size())) {
    s.replace(pos, key.size(), value);
  }
  return s;
}

std::string quoted(const std::string& path) { return "'" + substitute(path, "'", "'\\''") + "'"; }

// Exit status of `cmd`, or nullopt on timeout (the child is killed).
std::optional<int> run_shell(const std::string& cmd, double timeout_s) {
  const pid_t pid = fork();
  if (pid < 0) throw std::runtime_error("fork failed");
  if (pid == 0) {
    setpgid(0, 0);
    execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
  int status = 0;
  for (;;) {
    const pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw std::runtime_error("waitpid failed");
    if (std::chrono::steady_clock::now() > deadline) {
      kill(-pid, SIGKILL);
      kill(pid, SIGKILL);
      waitpid(pid, &status, 0);
      return std::nullopt;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

}  // namespace

std::vector<RgbImage> EnhancerHook::apply(const std::vector<RgbImage>& views) const {
  if (mode == Mode::Identity) return views;
  if (command.find("{in}") == std::string::npos || command.find("{out}") == std::string::npos) {
    throw HookError(-1, "hook command must contain {in} and {out}");
  }
  const fs::path dir = work_dir.empty()
                           ? fs::temp_directory_path() / ("zmono-hook-" + std::to_string(getpid()))
                           : fs::path(work_dir);
  fs::create_directories(dir);
  const int n = static_cast<int>(views.size());
  std::vector<RgbImage> out(n);
  std::vector<std::string> errors(n);

#pragma omp parallel for schedule(dynamic, 1) num_threads(max_parallel > 0 ? max_parallel : 1)
  for (int i = 0; i < n; ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "view_%04d", i);
    const fs::path in = dir / (std::string(name) + "_in.png"), res = dir / (std::string(name) + "_out.png");
    try {
      write_png(views[i], in.string());
      fs::remove(res);
      const std::string cmd = substitute(substitute(command, "{in}", quoted(in.string())), "{out}", quoted(res.string()));
      const auto status = run_shell(cmd, timeout_s);
      if (!status) {
        errors[i] = "timed out after " + std::to_string(timeout_s) + " s";
      } else if (*status != 0) {
        errors[i] = "exited with status " + std::to_string(*status);
      } else {
        out[i] = read_png(res.string());
        if (out[i].width != views[i].width || out[i].height != views[i].height) {
          errors[i] = "returned " + std::to_string(out[i].width) + "x" + std::to_string(out[i].height) +
                      ", expected " + std::to_string(views[i].width) + "x" + std::to_string(views[i].height);
        }
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!errors[i].empty()) throw HookError(i, "enhancer hook failed on view " + std::to_string(i) + ": " + errors[i]);
  }
  return out;
}

}  // namespace zmono

#pragma once

#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <thread>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include "rebec/error.hpp"
#include "rebec/wave_model.hpp"

namespace rebec {

/// Drives an external model process through files. The command template
/// may use {drg} {cfw} {stpm} {wind_path} {out_path}; the process runs in
/// `scratch_dir` with stdout and stderr captured to model.log there.
/// Runs sharing a scratch directory must not overlap.
struct external_run_spec {
  std::string command_template;
  std::filesystem::path scratch_dir;
  std::chrono::milliseconds timeout{std::chrono::minutes(10)};
};

namespace detail {

inline std::string format_param(double x) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << x;
  return os.str();
}

inline std::string replace_all(std::string s, const std::string& key, const std::string& value) {
  for (auto pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size()))
    s.replace(pos, key.size(), value);
  return s;
}

inline std::string tail_of(const std::filesystem::path& file, std::size_t max_chars = 2000) {
  std::ifstream is(file);
  std::stringstream ss;
  ss << is.rdbuf();
  auto text = ss.str();
  return text.size() > max_chars ? "..." + text.substr(text.size() - max_chars) : text;
}

struct process_result {
  int exit_code = 0;
  bool timed_out = false;
};

inline process_result run_shell(const std::string& command, const std::filesystem::path& cwd,
                                const std::filesystem::path& log, std::chrono::milliseconds timeout) {
  const pid_t pid = ::fork();
  if (pid < 0) throw model_error("fork failed");
  if (pid == 0) {
    ::setpgid(0, 0);
    if (::chdir(cwd.c_str()) != 0) ::_exit(126);
    const int fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd >= 0) {
      ::dup2(fd, STDOUT_FILENO);
      ::dup2(fd, STDERR_FILENO);
      ::close(fd);
    }
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  int status = 0;
  for (;;) {
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw model_error("waitpid failed");
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      return {-1, true};
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (WIFEXITED(status)) return {WEXITSTATUS(status), false};
  return {128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0), false};
}

}  // namespace detail

inline series_set external_evaluate(const parameter_vector& theta, const wind_field& wind,
                                    const external_run_spec& spec, const station_set& stations) {
  namespace fs = std::filesystem;
  if (spec.command_template.find("{out_path}") == std::string::npos)
    throw config_error("external command template must contain {out_path}");
  fs::create_directories(spec.scratch_dir);
  const auto dir = fs::absolute(spec.scratch_dir);
  const auto wind_path = dir / "wind.wfld";
  const auto out_path = dir / "stations.csv";
  const auto log_path = dir / "model.log";
  save_wfld(wind_path.string(), wind);
  fs::remove(out_path);

  std::string cmd = spec.command_template;
  cmd = detail::replace_all(cmd, "{drg}", detail::format_param(theta.drg));
  cmd = detail::replace_all(cmd, "{cfw}", detail::format_param(theta.cfw));
  cmd = detail::replace_all(cmd, "{stpm}", detail::format_param(theta.stpm));
  cmd = detail::replace_all(cmd, "{wind_path}", wind_path.string());
  cmd = detail::replace_all(cmd, "{out_path}", out_path.string());

  const auto result = detail::run_shell(cmd, dir, log_path, spec.timeout);
  if (result.timed_out)
    throw timeout_error("external model timed out after " + std::to_string(spec.timeout.count()) + " ms");
  if (result.exit_code != 0)
    throw model_error("external model exited with status " + std::to_string(result.exit_code) +
                      "\n--- model.log ---\n" + detail::tail_of(log_path));

  std::ifstream is(out_path);
  if (!is) throw format_error("external model produced no output file " + out_path.string());
  series_set raw;
  try {
    raw = read_series_csv(is);
  } catch (const format_error& e) {
    std::string missing;
    for (const auto& s : stations) missing += (missing.empty() ? "" : ", ") + s.id;
    throw format_error(std::string(e.what()) + " (missing rows for stations: " + missing + ")");
  }
  return align_to_stations(raw, stations);
}

class external_model final : public model_adapter {
public:
  external_model(external_run_spec spec, station_set stations)
      : spec_(std::move(spec)), stations_(std::move(stations)) {}

  series_set evaluate(const parameter_vector& theta, const wind_field& wind) const override {
    return external_evaluate(theta, wind, spec_, stations_);
  }
  const station_set& stations() const override { return stations_; }

private:
  external_run_spec spec_;
  station_set stations_;
};

}  // namespace rebec

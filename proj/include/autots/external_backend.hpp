/*
 * Copyright 2026 The autots Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// External evaluator: a user command spoken to over line-delimited JSON.
//
//   request   {"id": <u64>, "code": {"IPM": {"solution": "...", "params": {...}}, ...},
//              "budget": {"epochs": <u32>}}
//   response  {"id": <u64>, "rrse": <float>, "corr": <float|null>}
//   error     {"id": <u64>, "error": "..."}
//
// One object per line, UTF-8, LF. Request ids start at 1 and strictly
// increase; exactly one request is in flight. The command runs under
// /bin/sh -c with its stdin/stdout bound to the protocol and its stderr
// captured (last few KiB) for diagnostics.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "autots/backend.hpp"
#include "autots/errors.hpp"
#include "autots/search_space.hpp"

namespace autots {

struct ExternalConfig {
  std::string command;
  double timeout_s = 3600.0;
  std::uint32_t epochs = 10;
};

namespace protocol {

inline std::string encode_request(std::uint64_t id, const Catalog& catalog, const ModelCode& code,
                                  std::uint32_t epochs) {
  nlohmann::ordered_json slots = nlohmann::ordered_json::object();
  for (Slot s : kSlots) {
    const auto& opt = catalog.option(code[s]);
    const auto& sol = catalog.solution(opt);
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (std::size_t g = 0; g < sol.grids.size(); ++g)
      params[sol.grids[g].name] = sol.grids[g].values[opt.assignment[g]];
    nlohmann::ordered_json entry;
    entry["solution"] = sol.id;
    entry["params"] = std::move(params);
    slots[std::string(slot_name(s))] = std::move(entry);
  }
  nlohmann::ordered_json req;
  req["id"] = id;
  req["code"] = std::move(slots);
  req["budget"] = {{"epochs", epochs}};
  return req.dump();
}

struct Reply {
  std::uint64_t id = 0;
  double rrse = 0.0;
  std::optional<double> corr;
};

/// Parses a response line. Error replies and malformed lines throw
/// BackendError.
inline Reply parse_reply(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw BackendError("malformed evaluator reply: " + std::string(e.what()));
  }
  if (!j.is_object() || !j.contains("id") || !j["id"].is_number_unsigned())
    throw BackendError("evaluator reply lacks an id: " + line);
  Reply r;
  r.id = j["id"].get<std::uint64_t>();
  if (j.contains("error"))
    throw BackendError("evaluator reported error for request " + std::to_string(r.id) + ": " +
                       j["error"].dump());
  if (!j.contains("rrse") || !j["rrse"].is_number())
    throw BackendError("evaluator reply lacks a numeric rrse: " + line);
  r.rrse = j["rrse"].get<double>();
  if (!std::isfinite(r.rrse) || r.rrse < 0.0)
    throw BackendError("evaluator returned invalid rrse: " + line);
  if (j.contains("corr") && j["corr"].is_number()) r.corr = j["corr"].get<double>();
  return r;
}

/// Reply of the echo stub: fixed rrse for any well-formed request, an error
/// object otherwise.
inline std::string echo_reply(const std::string& request_line, double rrse = 0.5) {
  json req;
  try {
    req = json::parse(request_line);
  } catch (const json::exception&) {
    return nlohmann::ordered_json{{"id", nullptr}, {"error", "malformed request"}}.dump();
  }
  nlohmann::ordered_json out;
  out["id"] = req.is_object() && req.contains("id") ? req["id"] : json(nullptr);
  if (!req.is_object() || !req.contains("code") || !req["code"].is_object() ||
      req["code"].size() != kSlotCount) {
    out["error"] = "request must carry a 7-slot code";
    return out.dump();
  }
  out["rrse"] = rrse;
  out["corr"] = nullptr;
  return out.dump();
}

}  // namespace protocol

class ExternalBackend final : public Backend {
 public:
  ExternalBackend(std::shared_ptr<const Catalog> catalog, ExternalConfig cfg)
      : catalog_(std::move(catalog)), cfg_(std::move(cfg)) {
    if (cfg_.command.empty()) throw ConfigError("external backend needs a command");
    if (!(cfg_.timeout_s > 0.0)) throw ConfigError("external timeout must be positive");
    ::signal(SIGPIPE, SIG_IGN);
  }

  ExternalBackend(const ExternalBackend&) = delete;
  ExternalBackend& operator=(const ExternalBackend&) = delete;

  ~ExternalBackend() override { shutdown(); }

  double evaluate(const ModelCode& code) override {
    ++calls_;
    if (pid_ < 0) spawn();
    const std::uint64_t id = ++next_id_;
    const std::string line = protocol::encode_request(id, *catalog_, code, cfg_.epochs) + "\n";
    try {
      write_all(line);
      const std::string reply_line = read_line();
      const auto reply = protocol::parse_reply(reply_line);
      if (reply.id != id)
        throw BackendError("reply id " + std::to_string(reply.id) + " does not match request " +
                           std::to_string(id));
      last_corr_ = reply.corr;
      return reply.rrse;
    } catch (const BackendError& e) {
      const std::string diag = stderr_tail_;
      shutdown();
      throw BackendError(std::string(e.what()) +
                         (diag.empty() ? "" : "\n--- evaluator stderr ---\n" + diag));
    }
  }

  std::optional<double> last_corr() const noexcept { return last_corr_; }
  std::uint64_t last_request_id() const noexcept { return next_id_; }
  std::string name() const override { return "external:" + cfg_.command; }
  const std::string& stderr_tail() const noexcept { return stderr_tail_; }

 private:
  static constexpr std::size_t kStderrKeep = 8192;

  void spawn() {
    int in_pipe[2], out_pipe[2], err_pipe[2];
    if (::pipe(in_pipe) || ::pipe(out_pipe) || ::pipe(err_pipe))
      throw BackendError(std::string("pipe: ") + std::strerror(errno));
    const pid_t pid = ::fork();
    if (pid < 0) throw BackendError(std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
      ::dup2(in_pipe[0], STDIN_FILENO);
      ::dup2(out_pipe[1], STDOUT_FILENO);
      ::dup2(err_pipe[1], STDERR_FILENO);
      for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]})
        ::close(fd);
      ::execl("/bin/sh", "sh", "-c", cfg_.command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    ::close(err_pipe[1]);
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    err_child_ = err_pipe[0];
    ::fcntl(from_child_, F_SETFL, ::fcntl(from_child_, F_GETFL) | O_NONBLOCK);
    ::fcntl(err_child_, F_SETFL, ::fcntl(err_child_, F_GETFL) | O_NONBLOCK);
    ::fcntl(to_child_, F_SETFD, FD_CLOEXEC);
    ::fcntl(from_child_, F_SETFD, FD_CLOEXEC);
    ::fcntl(err_child_, F_SETFD, FD_CLOEXEC);
    stdout_buf_.clear();
    stderr_tail_.clear();
  }

  void shutdown() {
    if (to_child_ >= 0) ::close(to_child_);
    to_child_ = -1;
    if (pid_ > 0) {
      int status = 0;
      bool reaped = false;
      for (int i = 0; i < 50 && !reaped; ++i) {
        if (::waitpid(pid_, &status, WNOHANG) == pid_) reaped = true;
        else ::usleep(2000);
      }
      if (!reaped) {
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, &status, 0);
      }
    }
    pid_ = -1;
    if (from_child_ >= 0) ::close(from_child_);
    if (err_child_ >= 0) ::close(err_child_);
    from_child_ = err_child_ = -1;
  }

  void write_all(const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::write(to_child_, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BackendError(std::string("writing request: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  void drain_stderr() {
    char buf[4096];
    while (true) {
      const ssize_t n = ::read(err_child_, buf, sizeof buf);
      if (n <= 0) break;
      stderr_tail_.append(buf, static_cast<std::size_t>(n));
      if (stderr_tail_.size() > kStderrKeep)
        stderr_tail_.erase(0, stderr_tail_.size() - kStderrKeep);
    }
  }

  std::string read_line() {
    using clock = std::chrono::steady_clock;
    const auto deadline =
        clock::now() + std::chrono::duration_cast<clock::duration>(
                           std::chrono::duration<double>(cfg_.timeout_s));
    bool err_open = true;
    while (true) {
      if (auto nl = stdout_buf_.find('\n'); nl != std::string::npos) {
        std::string line = stdout_buf_.substr(0, nl);
        stdout_buf_.erase(0, nl + 1);
        return line;
      }
      const auto left =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
      if (left <= 0)
        throw BackendError("evaluator timed out after " + std::to_string(cfg_.timeout_s) + " s");
      pollfd fds[2] = {{from_child_, POLLIN, 0}, {err_open ? err_child_ : -1, POLLIN, 0}};
      const int rc = ::poll(fds, 2, static_cast<int>(std::min<long long>(left, 1 << 30)));
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw BackendError(std::string("poll: ") + std::strerror(errno));
      }
      if (err_open && (fds[1].revents & (POLLIN | POLLHUP))) {
        const auto before = stderr_tail_.size();
        drain_stderr();
        if ((fds[1].revents & POLLHUP) && stderr_tail_.size() == before) err_open = false;
      }
      if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
        char buf[4096];
        const ssize_t n = ::read(from_child_, buf, sizeof buf);
        if (n > 0) {
          stdout_buf_.append(buf, static_cast<std::size_t>(n));
        } else if (n == 0) {
          drain_stderr();
          throw BackendError("evaluator closed its output (process exited)");
        } else if (errno != EAGAIN && errno != EINTR) {
          throw BackendError(std::string("reading reply: ") + std::strerror(errno));
        }
      }
    }
  }

  std::shared_ptr<const Catalog> catalog_;
  ExternalConfig cfg_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  int err_child_ = -1;
  std::uint64_t next_id_ = 0;
  std::string stdout_buf_;
  std::string stderr_tail_;
  std::optional<double> last_corr_;
};

}  // namespace autots

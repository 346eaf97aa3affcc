#include "metaml/flowgraph/external.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "metaml/errors.hpp"
#include "metaml/metamodel/checkpoint.hpp"

namespace metaml {

void ExternalBlockSpec::validate() const {
  if (command.empty()) throw InvalidValue("external block needs a command");
  if (!(timeout_s > 0.0)) throw InvalidValue("external block timeout_s must be > 0");
  if (role == Role::Kappa) throw InvalidValue("external blocks are LAMBDA or OPT");
}

ExternalBlockSpec ExternalBlockSpec::from_json(const Json& j) {
  if (!j.is_object()) throw InvalidValue("external spec must be an object");
  ExternalBlockSpec s;
  for (const auto& [k, v] : j.items()) {
    if (k == "command") s.command = v.get<std::string>();
    else if (k == "args") s.args = v.get<std::vector<std::string>>();
    else if (k == "timeout_s") s.timeout_s = v.get<double>();
    else if (k == "role") {
      const auto r = v.get<std::string>();
      if (r == "LAMBDA") s.role = Role::Lambda;
      else if (r == "OPT") s.role = Role::Opt;
      else throw InvalidValue("external role must be LAMBDA or OPT");
    } else {
      throw InvalidValue("unknown external spec field '" + k + "'");
    }
  }
  s.validate();
  return s;
}

namespace {

struct Pipe {
  int fd[2] = {-1, -1};
  Pipe() {
    if (::pipe2(fd, O_CLOEXEC) != 0) throw ChildFailed(std::string("pipe: ") + std::strerror(errno));
  }
  ~Pipe() {
    close_end(0);
    close_end(1);
  }
  void close_end(int i) {
    if (fd[i] >= 0) ::close(fd[i]);
    fd[i] = -1;
  }
};

}  // namespace

ProcessResult run_process(const ExternalBlockSpec& spec, const std::string& input) {
  spec.validate();
  // A child closing stdin early must not take the engine down with it.
  static const bool sigpipe_ignored = (::signal(SIGPIPE, SIG_IGN), true);
  (void)sigpipe_ignored;
  Pipe in, out, err;

  std::vector<std::string> argv_s{spec.command};
  argv_s.insert(argv_s.end(), spec.args.begin(), spec.args.end());
  std::vector<char*> argv;
  for (auto& a : argv_s) argv.push_back(a.data());
  argv.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) throw ChildFailed(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(in.fd[0], STDIN_FILENO);
    ::dup2(out.fd[1], STDOUT_FILENO);
    ::dup2(err.fd[1], STDERR_FILENO);
    ::execvp(argv[0], argv.data());
    ::_exit(127);
  }
  in.close_end(0);
  out.close_end(1);
  err.close_end(1);
  ::fcntl(in.fd[1], F_SETFL, O_NONBLOCK);

  ProcessResult res;
  std::size_t written = 0;
  if (input.empty()) in.close_end(1);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(spec.timeout_s);
  bool out_open = true, err_open = true;
  char buf[65536];

  while (out_open || err_open) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, nullptr, 0);
      throw Timeout("'" + spec.command + "' exceeded " + std::to_string(spec.timeout_s) + " s");
    }
    pollfd fds[3];
    nfds_t n = 0;
    int out_i = -1, err_i = -1, in_i = -1;
    if (out_open) { fds[n] = {out.fd[0], POLLIN, 0}; out_i = static_cast<int>(n++); }
    if (err_open) { fds[n] = {err.fd[0], POLLIN, 0}; err_i = static_cast<int>(n++); }
    if (in.fd[1] >= 0) { fds[n] = {in.fd[1], POLLOUT, 0}; in_i = static_cast<int>(n++); }
    const int rc = ::poll(fds, n, static_cast<int>(std::min<long long>(left.count(), 1000)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      ::kill(pid, SIGKILL);
      ::waitpid(pid, nullptr, 0);
      throw ChildFailed(std::string("poll: ") + std::strerror(errno));
    }
    if (in_i >= 0 && (fds[in_i].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const ssize_t w = ::write(in.fd[1], input.data() + written, input.size() - written);
      if (w > 0) written += static_cast<std::size_t>(w);
      // A child that stops reading early just loses the rest of its input.
      if (w < 0 && errno != EAGAIN) written = input.size();
      if (written == input.size()) in.close_end(1);
    }
    auto drain = [&](int idx, int fd, std::string& sink, bool& open) {
      if (idx < 0 || !(fds[idx].revents & (POLLIN | POLLHUP | POLLERR))) return;
      const ssize_t r = ::read(fd, buf, sizeof buf);
      if (r > 0) sink.append(buf, static_cast<std::size_t>(r));
      else if (r == 0 || errno != EINTR) open = false;
    };
    drain(out_i, out.fd[0], res.out, out_open);
    drain(err_i, err.fd[0], res.err, err_open);
  }
  in.close_end(1);

  int status = 0;
  while (true) {
    const pid_t w = ::waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, nullptr, 0);
      throw Timeout("'" + spec.command + "' exceeded " + std::to_string(spec.timeout_s) + " s");
    }
    ::usleep(1000);
  }
  if (WIFSIGNALED(status)) {
    throw ChildFailed("'" + spec.command + "' killed by signal " + std::to_string(WTERMSIG(status)));
  }
  res.exit_code = WEXITSTATUS(status);
  return res;
}

namespace {

Json parse_reply(const ExternalBlockSpec& spec, const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw ProtocolError("'" + spec.command + "' replied with malformed JSON: " + e.what());
  }
}

std::optional<std::string> default_parent(const MetaModel& mm, EdgeKind edge, Stage stage) {
  if (edge == EdgeKind::Root) return std::nullopt;
  if (edge == EdgeKind::Variation) return mm.space().focus(stage);
  for (int s = static_cast<int>(stage) - 1; s >= 0; --s) {
    if (auto f = mm.space().focus(static_cast<Stage>(s))) return f;
  }
  return std::nullopt;
}

}  // namespace

MetaModel run_external_block(const ExternalBlockSpec& spec, MetaModel mm, const Actor& actor) {
  const auto res = run_process(spec, checkpoint_bytes(mm));
  if (res.exit_code != 0) {
    throw ChildFailed("'" + spec.command + "' exited with code " + std::to_string(res.exit_code) +
                      (res.err.empty() ? "" : ": " + res.err.substr(0, 400)));
  }
  const Json reply = parse_reply(spec, res.out);
  if (!reply.is_object()) throw ProtocolError("reply must be a JSON object");
  for (const auto& [k, v] : reply.items()) {
    if (k != "commits" && k != "config_changes") throw ProtocolError("unknown reply field '" + k + "'");
  }

  try {
    if (reply.contains("commits")) {
      if (!reply["commits"].is_array()) throw ProtocolError("'commits' must be a list");
      for (const auto& c : reply["commits"]) {
        if (!c.is_object()) throw ProtocolError("each commit must be an object");
        CommitRequest req;
        req.edge = edge_from_string(c.at("edge").get<std::string>());
        req.stage = stage_from_string(c.at("stage").get<std::string>());
        if (c.contains("parent") && !c["parent"].is_null()) req.parent = c["parent"].get<std::string>();
        else req.parent = default_parent(mm, req.edge, req.stage);
        req.payload = c.value("payload", Json::object());
        req.metrics = c.value("metrics", Metrics{});
        if (c.contains("marks")) req.marks = c["marks"].get<std::set<std::string>>();
        mm.commit_model(actor, std::move(req));
      }
    }
    if (reply.contains("config_changes")) {
      if (!reply["config_changes"].is_object()) throw ProtocolError("'config_changes' must be an object");
      for (const auto& [k, v] : reply["config_changes"].items()) mm.set_config(actor, k, v);
    }
  } catch (const ProtocolError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProtocolError(std::string("cannot apply reply: ") + e.what());
  }
  return mm;
}

double ExternalBackend::evaluate(const surrogate::NetworkModel& network,
                                 const surrogate::PrecisionConfig* precision) const {
  Json req{{"network", network.to_json()}, {"precision", precision ? precision->to_json() : Json(nullptr)}};
  const auto res = run_process(spec_, req.dump() + "\n");
  if (res.exit_code != 0) {
    throw BackendError("evaluator '" + spec_.command + "' exited with code " + std::to_string(res.exit_code));
  }
  Json reply;
  try {
    reply = Json::parse(res.out);
  } catch (const Json::exception& e) {
    throw BackendError(std::string("evaluator reply is not JSON: ") + e.what());
  }
  if (!reply.is_object() || !reply.contains("accuracy") || !reply["accuracy"].is_number()) {
    throw BackendError("evaluator reply lacks a numeric 'accuracy'");
  }
  const double acc = reply["accuracy"].get<double>();
  if (!(acc >= 0.0 && acc <= 1.0)) throw BackendError("evaluator accuracy outside [0,1]");
  return acc;
}

}  // namespace metaml

#include <fcntl.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <string>
#include <thread>

#include <json.hpp>

#include "maskpath/encoding.hpp"
#include "maskpath/errors.hpp"
#include "maskpath/generator.hpp"

namespace maskpath {

using nlohmann::json;

namespace {

std::string describe_exit(int status) {
  if (WIFEXITED(status)) return "exited with status " + std::to_string(WEXITSTATUS(status));
  if (WIFSIGNALED(status)) return "killed by signal " + std::to_string(WTERMSIG(status));
  return "stopped";
}

}  // namespace

AdapterConnection::AdapterConnection(const ExternalOptions& options) : options_(options) {
  if (options_.command.empty()) throw ValidationError("external generator needs a non-empty command");

  // A stream socket pair instead of pipes: send() with MSG_NOSIGNAL reports a
  // dead adapter as EPIPE rather than raising SIGPIPE in this process.
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
    throw AdapterError(std::string("socketpair failed: ") + std::strerror(errno));
  }

  std::vector<char*> argv;
  for (auto& a : options_.command) argv.push_back(a.data());
  argv.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw AdapterError(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(fds[1], STDIN_FILENO);
    ::dup2(fds[1], STDOUT_FILENO);
    ::execvp(argv[0], argv.data());
    ::_exit(127);
  }
  ::close(fds[1]);
  fd_ = fds[0];
  pid_ = pid;

  try {
    json hello = {{"type", "hello"},
                  {"latent_dim", options_.latent_dim},
                  {"width", options_.width},
                  {"height", options_.height}};
    send_line(hello.dump());
    const std::string reply = read_line();
    json msg;
    try {
      msg = json::parse(reply);
    } catch (const json::exception&) {
      throw AdapterError("adapter handshake reply is not JSON: " + reply.substr(0, 120));
    }
    if (!msg.is_object() || msg.value("type", "") != "ready") {
      throw AdapterError("adapter handshake expected {\"type\":\"ready\"}, got: " + reply.substr(0, 120));
    }
  } catch (...) {
    shutdown();
    throw;
  }
}

AdapterConnection::~AdapterConnection() { shutdown(); }

void AdapterConnection::shutdown() noexcept {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
  if (pid_ > 0) {
    int status = 0;
    // Closing the socket delivers EOF; give the adapter a moment to exit on its own.
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

void AdapterConnection::send_line(const std::string& line) {
  if (fd_ < 0) throw AdapterError("adapter connection is closed");
  std::string data = line + "\n";
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw AdapterError(std::string("writing to adapter failed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::string AdapterConnection::read_line() {
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    char chunk[65536];
    const ssize_t n = ::read(fd_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw AdapterError(std::string("reading from adapter failed: ") + std::strerror(errno));
    }
    if (n == 0) {
      std::string why = "adapter closed its output";
      int status = 0;
      for (int i = 0; i < 20 && pid_ > 0; ++i) {
        if (::waitpid(pid_, &status, WNOHANG) == pid_) {
          why += " (" + describe_exit(status) + ")";
          pid_ = -1;
          break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
      }
      throw AdapterError(why);
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::vector<ImageBuffer> AdapterConnection::request(std::span<const std::vector<double>> latents) {
  if (latents.empty()) return {};
  for (const auto& z : latents) {
    if (z.size() != options_.latent_dim) {
      throw AdapterError("latent has " + std::to_string(z.size()) + " entries, adapter expects " +
                         std::to_string(options_.latent_dim));
    }
    for (double v : z) {
      if (!std::isfinite(v)) throw AdapterError("latent contains a non-finite entry");
    }
  }
  const std::uint64_t id = next_id_++;
  json req = {{"type", "gen"}, {"id", id}, {"latents", json::array()}};
  for (const auto& z : latents) req["latents"].push_back(z);
  send_line(req.dump());

  const std::string reply = read_line();
  json msg;
  try {
    msg = json::parse(reply);
  } catch (const json::exception&) {
    throw AdapterError("adapter reply is not JSON: " + reply.substr(0, 120));
  }
  if (!msg.is_object() || msg.value("type", "") != "img") {
    throw AdapterError("adapter reply has unexpected type: " + reply.substr(0, 120));
  }
  if (!msg.contains("id") || !msg["id"].is_number_unsigned() || msg["id"].get<std::uint64_t>() != id) {
    throw AdapterError("adapter reply id does not match request id " + std::to_string(id));
  }
  if (!msg.contains("images") || !msg["images"].is_array() || msg["images"].size() != latents.size()) {
    throw AdapterError("adapter reply must carry exactly " + std::to_string(latents.size()) + " images");
  }

  const std::size_t pixels = options_.width * options_.height;
  std::vector<ImageBuffer> out;
  out.reserve(latents.size());
  for (const auto& item : msg["images"]) {
    if (!item.is_string()) throw AdapterError("adapter image entry is not a base64 string");
    std::vector<double> px;
    try {
      px = unpack_f32_le(base64_decode(item.get<std::string>()));
    } catch (const ValidationError& e) {
      throw AdapterError(std::string("adapter image payload: ") + e.what());
    }
    if (px.size() != pixels) {
      throw AdapterError("adapter image has " + std::to_string(px.size()) + " pixels, expected " +
                         std::to_string(pixels));
    }
    for (double v : px) {
      if (!std::isfinite(v)) throw AdapterError("adapter image contains a non-finite pixel");
    }
    out.emplace_back(options_.width, options_.height, std::move(px));
  }
  return out;
}

ExternalGenerator::ExternalGenerator(const ExternalOptions& options)
    : Generator(GeneratorKind::kExternal, options.latent_dim, options.width, options.height),
      connection_(std::make_unique<AdapterConnection>(options)) {}

ImageBuffer ExternalGenerator::generate(std::span<const double> z) const {
  check_latent(z);
  std::vector<std::vector<double>> batch{std::vector<double>(z.begin(), z.end())};
  return render_batch(batch).front();
}

std::vector<double> ExternalGenerator::vjp(std::span<const double>, const ImageBuffer&) const {
  throw UnsupportedGradientError("external generators are forward-only; gradients need a built-in generator");
}

std::vector<ImageBuffer> ExternalGenerator::render_batch(std::span<const std::vector<double>> latents) const {
  std::lock_guard lock(mutex_);
  return connection_->request(latents);
}

std::vector<ImageBuffer> external_render(const Generator& gen, std::span<const std::vector<double>> batch) {
  if (gen.kind() != GeneratorKind::kExternal) {
    throw ValidationError("external_render requires an external generator, got " + to_string(gen.kind()));
  }
  return gen.render_batch(batch);
}

}  // namespace maskpath

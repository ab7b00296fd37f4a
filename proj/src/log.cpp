#include "dualabsa/log.hpp"

#include <iostream>
#include <mutex>

namespace dualabsa::log {
namespace {

std::mutex& sink_mutex() {
  static std::mutex mutex;
  return mutex;
}

Sink& warning_sink() {
  static Sink sink = [](const std::string& message) { std::cerr << "warning: " << message << '\n'; };
  return sink;
}

}  // namespace

void warn(const std::string& message) {
  std::lock_guard lock(sink_mutex());
  warning_sink()(message);
}

void info(const std::string& message) { std::cerr << message << '\n'; }

Sink set_warning_sink(Sink sink) {
  std::lock_guard lock(sink_mutex());
  Sink previous = std::move(warning_sink());
  warning_sink() = std::move(sink);
  return previous;
}

ScopedCapture::ScopedCapture() {
  previous_ = set_warning_sink([this](const std::string& message) { messages_.push_back(message); });
}

ScopedCapture::~ScopedCapture() { set_warning_sink(std::move(previous_)); }

}  // namespace dualabsa::log

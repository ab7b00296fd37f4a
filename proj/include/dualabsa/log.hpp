#pragma once

#include <functional>
#include <string>
#include <vector>

namespace dualabsa::log {

using Sink = std::function<void(const std::string&)>;

void warn(const std::string& message);
void info(const std::string& message);

/// Replaces the warning sink (stderr by default). Returns the previous one.
Sink set_warning_sink(Sink sink);

/// Captures warnings for the lifetime of the object.
class ScopedCapture {
 public:
  ScopedCapture();
  ~ScopedCapture();
  ScopedCapture(const ScopedCapture&) = delete;
  ScopedCapture& operator=(const ScopedCapture&) = delete;

  const std::vector<std::string>& messages() const { return messages_; }

 private:
  std::vector<std::string> messages_;
  Sink previous_;
};

}  // namespace dualabsa::log

#pragma once

#include <functional>
#include <string>
#include <vector>

namespace fluxgate {

using WarningHandler = std::function<void(const std::string&)>;

// Emits a warning through the installed handler (stderr by default).
void warn(const std::string& message);

// Installs a handler and returns the previous one. Thread safe.
WarningHandler set_warning_handler(WarningHandler handler);

// When enabled, warn() throws NumericalError instead of reporting.
void set_warnings_fatal(bool fatal);

/// Collects warnings for the lifetime of the object; restores the previous
/// handler on destruction.
class WarningCapture {
 public:
  WarningCapture();
  ~WarningCapture();
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;

  const std::vector<std::string>& messages() const { return messages_; }
  bool contains(const std::string& needle) const;

 private:
  std::vector<std::string> messages_;
  WarningHandler previous_;
};

// Drops warnings raised on the current thread while alive (search loops
// probe many unphysical points on purpose).
class WarningSilencer {
 public:
  WarningSilencer();
  ~WarningSilencer();
  WarningSilencer(const WarningSilencer&) = delete;
  WarningSilencer& operator=(const WarningSilencer&) = delete;
};

}  // namespace fluxgate

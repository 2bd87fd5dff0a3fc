#include "fluxgate/diagnostics.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

#include "fluxgate/errors.hpp"

namespace fluxgate {
namespace {

std::mutex& handler_mutex() {
  static std::mutex m;
  return m;
}

WarningHandler& handler_slot() {
  static WarningHandler h = [](const std::string& msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return h;
}

std::atomic<bool> g_fatal{false};
thread_local int t_silenced = 0;

}  // namespace

void warn(const std::string& message) {
  if (t_silenced > 0) return;
  if (g_fatal.load()) throw NumericalError("fatal warning: " + message);
  std::lock_guard<std::mutex> lock(handler_mutex());
  if (handler_slot()) handler_slot()(message);
}

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard<std::mutex> lock(handler_mutex());
  WarningHandler previous = std::move(handler_slot());
  handler_slot() = std::move(handler);
  return previous;
}

void set_warnings_fatal(bool fatal) { g_fatal.store(fatal); }

WarningCapture::WarningCapture() {
  previous_ = set_warning_handler(
      [this](const std::string& msg) { messages_.push_back(msg); });
}

WarningCapture::~WarningCapture() { set_warning_handler(std::move(previous_)); }

WarningSilencer::WarningSilencer() { ++t_silenced; }
WarningSilencer::~WarningSilencer() { --t_silenced; }

bool WarningCapture::contains(const std::string& needle) const {
  for (const auto& m : messages_)
    if (m.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace fluxgate

#include "relate/log.hpp"

#include <iostream>
#include <mutex>

namespace relate {
namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

WarningSink& current_sink() {
  static WarningSink sink = [](const std::string& message) { std::cerr << "warning: " << message << '\n'; };
  return sink;
}

}  // namespace

void warn(const std::string& message) {
  std::lock_guard lock(sink_mutex());
  if (current_sink()) current_sink()(message);
}

WarningSink set_warning_sink(WarningSink sink) {
  std::lock_guard lock(sink_mutex());
  return std::exchange(current_sink(), std::move(sink));
}

}  // namespace relate

#pragma once

#include <functional>
#include <string>

namespace relate {

using WarningSink = std::function<void(const std::string&)>;

// Non-fatal diagnostics (for example a taxon pair without shared sites).
// The default sink prints "warning: <message>" to standard error. Calls are
// serialised, so the sink need not be thread-safe.
void warn(const std::string& message);
// Returns the previous sink. Passing an empty function silences warnings.
WarningSink set_warning_sink(WarningSink sink);

}  // namespace relate

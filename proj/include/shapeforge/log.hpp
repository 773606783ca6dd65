#pragma once

namespace shapeforge {

/// Sends log output to stderr at the level named by SHAPEFORGE_LOG (trace,
/// debug, info, warn, error, critical, off; default info). An unrecognized
/// value keeps the default and says so.
void init_logging();

}  // namespace shapeforge

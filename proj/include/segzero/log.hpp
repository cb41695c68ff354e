#pragma once

#include <optional>
#include <string_view>

namespace segzero::log {

enum class Level { Error, Warn, Info, Debug };

std::optional<Level> parse_level(std::string_view s);

/// Starts from SEGZERO_LOG (error, warn, info, debug), defaulting to info.
Level level();
void set_level(Level l);

/// One line to stderr when `l` is enabled.
void write(Level l, std::string_view msg);

inline void error(std::string_view m) { write(Level::Error, m); }
inline void warn(std::string_view m) { write(Level::Warn, m); }
inline void info(std::string_view m) { write(Level::Info, m); }
inline void debug(std::string_view m) { write(Level::Debug, m); }

}  // namespace segzero::log

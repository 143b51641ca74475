#pragma once

#include <iosfwd>

namespace shortcut_gd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitVerificationFailure = 2;

/// Entry point of the shortcut-gd command line tool. Subcommands: run, sweep,
/// verify, check-grad, show-teacher. `--config FILE` reads an INI file whose
/// [run], [sweep], ... sections hold the long option names; flags given on the
/// command line override file values.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace shortcut_gd::cli
